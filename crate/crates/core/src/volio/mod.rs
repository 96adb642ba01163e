//! Volume and mask representation, MetaImage I/O, interpolated sampling,
//! binary morphology and per-slice distance transforms.

mod interp;
mod mhd;
mod morph;

pub use interp::{cubic_weights, sample_interpolated, Interpolation};
pub use mhd::{load_mask, load_volume, save_mask, save_volume};
pub use morph::{close_sphere, dilate_sphere, edt_2d, erode_sphere, squared_edt, DistanceImage};

use crate::{Error, Result, Vec3, Voxel};

/// Scalar element that can be read through interpolation.
pub trait Scalar: Copy + Send + Sync {
    fn to_f64(self) -> f64;
}

impl Scalar for i16 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for u8 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for bool {
    #[inline]
    fn to_f64(self) -> f64 {
        if self {
            1.0
        } else {
            0.0
        }
    }
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Regular 3D grid with anisotropic spacing, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    data: Vec<T>,
}

/// CT intensities in Hounsfield units.
pub type CtVolume = Volume<i16>;

/// Binary segmentation aligned with a [`CtVolume`].
pub type BinaryMask = Volume<bool>;

impl<T> Volume<T> {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], data: Vec<T>) -> Result<Self> {
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite origin {origin:?}")));
        }
        let expected = dims[0]
            .checked_mul(dims[1])
            .and_then(|n| n.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidVolume(format!("dims {dims:?} overflow")))?;
        if data.len() != expected {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        Ok(Volume {
            dims,
            spacing,
            origin,
            data,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, v: Voxel) -> usize {
        v[0] + self.dims[0] * (v[1] + self.dims[1] * v[2])
    }

    #[inline]
    pub fn voxel_of(&self, index: usize) -> Voxel {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    #[inline]
    pub fn contains(&self, v: Voxel) -> bool {
        v[0] < self.dims[0] && v[1] < self.dims[1] && v[2] < self.dims[2]
    }

    /// Voxel-centre position in millimetres.
    pub fn voxel_to_mm(&self, v: Voxel) -> Vec3 {
        Vec3::new(
            self.origin[0] + v[0] as f64 * self.spacing[0],
            self.origin[1] + v[1] as f64 * self.spacing[1],
            self.origin[2] + v[2] as f64 * self.spacing[2],
        )
    }

    /// Continuous voxel index of a millimetre position.
    pub fn mm_to_continuous(&self, p: &Vec3) -> [f64; 3] {
        [
            (p.x - self.origin[0]) / self.spacing[0],
            (p.y - self.origin[1]) / self.spacing[1],
            (p.z - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Nearest voxel to a millimetre position, if it lies in the grid.
    pub fn mm_to_voxel(&self, p: &Vec3) -> Option<Voxel> {
        let c = self.mm_to_continuous(p);
        let mut v = [0usize; 3];
        for a in 0..3 {
            let r = c[a].round();
            if r < 0.0 || r >= self.dims[a] as f64 {
                return None;
            }
            v[a] = r as usize;
        }
        Some(v)
    }

    /// True when both grids share dims, spacing and origin.
    pub fn same_grid<U>(&self, other: &Volume<U>) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.origin == other.origin
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// A new volume on the same grid with replaced contents.
    pub fn with_data<U>(&self, data: Vec<U>) -> Result<Volume<U>> {
        Volume::new(self.dims, self.spacing, self.origin, data)
    }
}

impl<T: Copy> Volume<T> {
    pub fn filled(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], value: T) -> Result<Self> {
        let n = dims[0] * dims[1] * dims[2];
        Volume::new(dims, spacing, origin, vec![value; n])
    }

    #[inline]
    pub fn get(&self, v: Voxel) -> Option<T> {
        self.contains(v).then(|| self.data[self.index(v)])
    }

    /// Value at a voxel; panics when out of range.
    #[inline]
    pub fn at(&self, v: Voxel) -> T {
        assert!(self.contains(v), "voxel {v:?} outside dims {:?}", self.dims);
        self.data[self.index(v)]
    }

    #[inline]
    pub fn set(&mut self, v: Voxel, value: T) {
        assert!(self.contains(v), "voxel {v:?} outside dims {:?}", self.dims);
        let i = self.index(v);
        self.data[i] = value;
    }

    /// Copy of axial slice `k` as a row-major `nx * ny` buffer.
    pub fn axial_slice(&self, k: usize) -> Result<Vec<T>> {
        if k >= self.dims[2] {
            return Err(Error::SliceOutOfRange {
                index: k,
                depth: self.dims[2],
            });
        }
        let n = self.dims[0] * self.dims[1];
        Ok(self.data[k * n..(k + 1) * n].to_vec())
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn voxels(&self) -> impl Iterator<Item = Voxel> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.voxel_of(i))
    }
}

/// The 26 neighbour offsets in a fixed order (k, then j, then i).
pub const NEIGHBOURS_26: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut n = 0;
    let mut dk = -1;
    while dk <= 1 {
        let mut dj = -1;
        while dj <= 1 {
            let mut di = -1;
            while di <= 1 {
                if !(di == 0 && dj == 0 && dk == 0) {
                    out[n] = [di, dj, dk];
                    n += 1;
                }
                di += 1;
            }
            dj += 1;
        }
        dk += 1;
    }
    out
};

/// Offset a voxel, returning `None` when leaving the grid.
#[inline]
pub fn offset_voxel(v: Voxel, d: [isize; 3], dims: [usize; 3]) -> Option<Voxel> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let x = v[a] as isize + d[a];
        if x < 0 || x >= dims[a] as isize {
            return None;
        }
        out[a] = x as usize;
    }
    Some(out)
}

/// True for distinct voxels that touch by face, edge or corner.
#[inline]
pub fn adjacent_26(a: Voxel, b: Voxel) -> bool {
    a != b && (0..3).all(|i| a[i].abs_diff(b[i]) <= 1)
}
