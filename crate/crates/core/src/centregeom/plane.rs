//! Cross-sectional planes orthogonal to the centreline.

use crate::volio::{sample_interpolated, Interpolation, Scalar, Volume};
use crate::{Result, Vec3};

/// Pixel spacing of sampled planes, in mm.
pub const PLANE_PIXEL_MM: f64 = 0.3;

/// Default half-width of a sampled plane, in mm.
pub const DEFAULT_HALF_EXTENT_MM: f64 = 12.0;

/// Orthonormal basis `(v1, v2)` of the plane through the origin normal to `q`.
///
/// The helper axis is the coordinate axis along which `q` has the smallest
/// magnitude (first axis on ties), so it is never collinear with `q`.
pub fn plane_basis(q: &Vec3) -> (Vec3, Vec3) {
    let mut axis = 0;
    for i in 1..3 {
        if q[i].abs() < q[axis].abs() {
            axis = i;
        }
    }
    let mut a = Vec3::zeros();
    a[axis] = 1.0;
    let v1 = a.cross(q).normalize();
    let v2 = v1.cross(q);
    (v1, v2)
}

/// A square grid of samples on a plane, pixel `(a, b)` at
/// `origin + α1 v1 + α2 v2` with `α = -half_extent + index · pixel`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneImage {
    pub size: usize,
    pub pixel: f64,
    pub half_extent: f64,
    pub origin: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub values: Vec<f64>,
}

impl PlaneImage {
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a + self.size * b]
    }

    /// Value at the plane centre.
    pub fn centre_value(&self) -> f64 {
        self.sample_bilinear(0.0, 0.0).expect("centre is inside the plane")
    }

    /// Bilinear sample at in-plane coordinates `(α1, α2)` in mm, or `None`
    /// outside the grid.
    pub fn sample_bilinear(&self, a1: f64, a2: f64) -> Option<f64> {
        let x = (a1 + self.half_extent) / self.pixel;
        let y = (a2 + self.half_extent) / self.pixel;
        let last = (self.size - 1) as f64;
        let eps = 1e-9;
        if !(x >= -eps && x <= last + eps && y >= -eps && y <= last + eps) {
            return None;
        }
        let (x, y) = (x.clamp(0.0, last), y.clamp(0.0, last));
        let i0 = (x.floor() as usize).min(self.size.saturating_sub(2));
        let j0 = (y.floor() as usize).min(self.size.saturating_sub(2));
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        let i1 = (i0 + 1).min(self.size - 1);
        let j1 = (j0 + 1).min(self.size - 1);
        let top = self.at(i0, j0) * (1.0 - fx) + self.at(i1, j0) * fx;
        let bottom = self.at(i0, j1) * (1.0 - fx) + self.at(i1, j1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }
}

/// Sample `vol` by cubic interpolation on the plane spanned by `v1`, `v2`
/// around `origin`. The half extent is rounded to a whole number of pixels.
/// Fails if any pixel falls outside the interpolation domain.
pub fn sample_plane<T: Scalar>(
    vol: &Volume<T>,
    origin: &Vec3,
    v1: &Vec3,
    v2: &Vec3,
    half_extent: f64,
) -> Result<PlaneImage> {
    // Odd size keeps a pixel on the centre; the extent snaps to the grid.
    let half_pixels = (half_extent / PLANE_PIXEL_MM).round() as usize;
    let size = 2 * half_pixels + 1;
    let half_extent = half_pixels as f64 * PLANE_PIXEL_MM;
    let mut values = Vec::with_capacity(size * size);
    for b in 0..size {
        let a2 = -half_extent + b as f64 * PLANE_PIXEL_MM;
        for a in 0..size {
            let a1 = -half_extent + a as f64 * PLANE_PIXEL_MM;
            let p = origin + a1 * v1 + a2 * v2;
            values.push(sample_interpolated(vol, &p, Interpolation::Cubic)?);
        }
    }
    Ok(PlaneImage {
        size,
        pixel: PLANE_PIXEL_MM,
        half_extent,
        origin: *origin,
        v1: *v1,
        v2: *v2,
        values,
    })
}
