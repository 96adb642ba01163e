//! Synthetic airway phantoms with analytic ground truth.
//!
//! A phantom is a union of tubes around one or more centreline branches.
//! The lumen radius follows `r(s) = r0 · exp(T s / 2)` in the arclength `s`
//! from the root, so the cross-sectional area decays as `exp(T s)`. Each
//! voxel's pre-blur intensity blends lumen, wall and parenchyma HU by the
//! fraction of the voxel covered by each region, estimated by supersampling
//! near boundaries. A Gaussian PSF is then applied.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::volio::{BinaryMask, CtVolume, Volume};
use crate::{Error, Result, Vec3, Voxel};

/// Shape of the phantom centreline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Centreline {
    Straight,
    Helix { radius_mm: f64, pitch_mm: f64 },
    /// A trunk splitting into two symmetric children. `split_fraction` is
    /// the trunk's share of `length_mm`.
    YSplit { branch_angle_deg: f64, split_fraction: f64 },
}

fn default_lumen() -> f64 {
    -1000.0
}
fn default_wall() -> f64 {
    0.0
}
fn default_parenchyma() -> f64 {
    -900.0
}
fn default_wall_mm() -> f64 {
    1.5
}
fn default_psf() -> f64 {
    0.6
}
fn default_spacing() -> [f64; 3] {
    [0.7, 0.7, 1.0]
}
fn default_supersample() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub centreline: Centreline,
    pub r0_mm: f64,
    /// Ground-truth taper rate, mm⁻¹.
    pub taper: f64,
    pub length_mm: f64,
    #[serde(default = "default_lumen")]
    pub lumen_hu: f64,
    #[serde(default = "default_wall")]
    pub wall_hu: f64,
    #[serde(default = "default_parenchyma")]
    pub parenchyma_hu: f64,
    #[serde(default = "default_wall_mm")]
    pub wall_mm: f64,
    #[serde(default = "default_psf")]
    pub psf_sigma_mm: f64,
    #[serde(default = "default_spacing")]
    pub spacing: [f64; 3],
    /// Grid size; derived from the geometry when absent.
    #[serde(default)]
    pub dims: Option<[usize; 3]>,
    /// Minimum clearance between the centreline and the grid border per
    /// axis, mm. The tube wall plus five voxels is always kept clear.
    #[serde(default)]
    pub margin_mm: [f64; 3],
    /// Standard deviation of white texture noise added after the PSF, HU.
    #[serde(default)]
    pub texture_hu: f64,
    #[serde(default)]
    pub texture_seed: u64,
    /// Subsamples per axis for boundary voxels.
    #[serde(default = "default_supersample")]
    pub supersample: usize,
}

impl PhantomSpec {
    /// A straight tube along the z axis with default contrast and blur.
    pub fn straight(r0_mm: f64, taper: f64, length_mm: f64) -> Self {
        Self {
            centreline: Centreline::Straight,
            r0_mm,
            taper,
            length_mm,
            lumen_hu: default_lumen(),
            wall_hu: default_wall(),
            parenchyma_hu: default_parenchyma(),
            wall_mm: default_wall_mm(),
            psf_sigma_mm: default_psf(),
            spacing: default_spacing(),
            dims: None,
            margin_mm: [0.0; 3],
            texture_hu: 0.0,
            texture_seed: 0,
            supersample: default_supersample(),
        }
    }

    pub fn radius(&self, s: f64) -> f64 {
        self.r0_mm * (0.5 * self.taper * s).exp()
    }
}

/// Analytic description of one carina-to-distal airway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirwayTruth {
    pub id: String,
    /// Dense centreline samples in mm, from the root to the distal end.
    pub centreline: Vec<[f64; 3]>,
    /// Arclength from the root at each centreline sample.
    pub arclength: Vec<f64>,
    /// Arclength from the root at which the airway's own branch begins.
    pub branch_start_mm: f64,
    pub distal_voxel: Voxel,
    /// Regions affected by a bifurcation, in arclength from the branch start.
    pub bifurcation_intervals: Vec<(f64, f64)>,
}

impl AirwayTruth {
    pub fn length_mm(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomTruth {
    pub taper: f64,
    pub r0_mm: f64,
    pub length_mm: f64,
    pub start_voxel: Voxel,
    pub airways: Vec<AirwayTruth>,
}

impl PhantomTruth {
    pub fn radius(&self, s: f64) -> f64 {
        self.r0_mm * (0.5 * self.taper * s).exp()
    }

    /// Lumen area `π r(s)²` at arclength `s` from the root.
    pub fn analytic_area(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.length_mm).contains(&s) {
            return Err(Error::ParameterOutOfRange { value: s, min: 0.0, max: self.length_mm });
        }
        Ok(PI * self.radius(s).powi(2))
    }
}

#[derive(Debug, Clone)]
enum Curve {
    Line { start: Vec3, dir: Vec3 },
    Helix { centre: Vec3, radius: f64, pitch: f64 },
}

impl Curve {
    /// Point at arclength `u` along the curve.
    fn point(&self, u: f64) -> Vec3 {
        match self {
            Curve::Line { start, dir } => start + u * dir,
            Curve::Helix { centre, radius, pitch } => {
                let speed = (radius * radius + (pitch / (2.0 * PI)).powi(2)).sqrt();
                let phi = u / speed;
                centre + Vec3::new(radius * phi.cos(), radius * phi.sin(), pitch * phi / (2.0 * PI))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Branch {
    curve: Curve,
    length: f64,
    /// Arclength from the root at the branch start.
    s0: f64,
    poly: Vec<Vec3>,
    cum: Vec<f64>,
    cap_start: bool,
    cap_end: bool,
}

/// Distance from a point to a branch and the arclength of the closest point.
struct Hit {
    dist: f64,
    s: f64,
    /// The point lies beyond a flat end cap.
    capped: bool,
}

impl Branch {
    fn new(curve: Curve, length: f64, s0: f64, segments: usize, caps: (bool, bool)) -> Self {
        let poly: Vec<Vec3> = (0..=segments).map(|i| curve.point(length * i as f64 / segments as f64)).collect();
        let cum = (0..=segments).map(|i| length * i as f64 / segments as f64).collect();
        Self {
            curve,
            length,
            s0,
            poly,
            cum,
            cap_start: caps.0,
            cap_end: caps.1,
        }
    }

    fn query(&self, p: &Vec3) -> Hit {
        let last = self.poly.len() - 2;
        let mut best = Hit { dist: f64::INFINITY, s: 0.0, capped: false };
        for i in 0..=last {
            let a = self.poly[i];
            let ab = self.poly[i + 1] - a;
            let raw = (p - a).dot(&ab) / ab.norm_squared();
            let u = raw.clamp(0.0, 1.0);
            let d = (p - (a + u * ab)).norm();
            if d < best.dist {
                let capped = (i == 0 && raw < 0.0 && self.cap_start) || (i == last && raw > 1.0 && self.cap_end);
                best = Hit {
                    dist: d,
                    s: self.s0 + self.cum[i] + u * (self.cum[i + 1] - self.cum[i]),
                    capped,
                };
            }
        }
        best
    }
}

struct Geometry<'a> {
    spec: &'a PhantomSpec,
    branches: Vec<Branch>,
}

impl Geometry<'_> {
    /// `(inside lumen, inside lumen or wall)` at `p`.
    fn classify(&self, p: &Vec3) -> (bool, bool) {
        let (mut lumen, mut wall) = (false, false);
        for b in &self.branches {
            let h = b.query(p);
            if h.capped {
                continue;
            }
            let r = self.spec.radius(h.s);
            lumen |= h.dist < r;
            wall |= h.dist < r + self.spec.wall_mm;
        }
        (lumen, wall)
    }

    /// Smallest distance from `p` to either curved boundary surface.
    fn surface_clearance(&self, p: &Vec3) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let h = b.query(p);
                let r = self.spec.radius(h.s);
                (h.dist - r).abs().min((h.dist - r - self.spec.wall_mm).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn build_branches(spec: &PhantomSpec) -> Result<Vec<Branch>> {
    let l = spec.length_mm;
    Ok(match &spec.centreline {
        Centreline::Straight => vec![Branch::new(
            Curve::Line { start: Vec3::zeros(), dir: Vec3::z() },
            l,
            0.0,
            1,
            (true, true),
        )],
        Centreline::Helix { radius_mm, pitch_mm } => {
            if !(*radius_mm > 0.0) || !pitch_mm.is_finite() {
                return Err(Error::InvalidPhantom("helix radius must be positive".into()));
            }
            let turn = ((2.0 * PI * radius_mm).powi(2) + pitch_mm * pitch_mm).sqrt();
            let segments = ((l / turn) * 128.0).ceil().max(8.0) as usize;
            let curve = Curve::Helix { centre: Vec3::new(-radius_mm, 0.0, 0.0), radius: *radius_mm, pitch: *pitch_mm };
            vec![Branch::new(curve, l, 0.0, segments, (true, true))]
        }
        Centreline::YSplit { branch_angle_deg, split_fraction } => {
            if !(0.0 < *split_fraction && *split_fraction < 1.0) || !(0.0 < *branch_angle_deg && *branch_angle_deg < 180.0) {
                return Err(Error::InvalidPhantom("split fraction must be in (0, 1), angle in (0, 180)".into()));
            }
            let trunk = l * split_fraction;
            let child = l - trunk;
            let half = (branch_angle_deg / 2.0).to_radians();
            let junction = Vec3::new(0.0, 0.0, trunk);
            vec![
                Branch::new(Curve::Line { start: Vec3::zeros(), dir: Vec3::z() }, trunk, 0.0, 1, (true, false)),
                Branch::new(
                    Curve::Line { start: junction, dir: Vec3::new(-half.sin(), 0.0, half.cos()) },
                    child,
                    trunk,
                    1,
                    (false, true),
                ),
                Branch::new(
                    Curve::Line { start: junction, dir: Vec3::new(half.sin(), 0.0, half.cos()) },
                    child,
                    trunk,
                    1,
                    (false, true),
                ),
            ]
        }
    })
}

pub(crate) fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    if sigma_vox <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma_vox).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma_vox * sigma_vox)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable convolution along one axis with replicated borders.
pub(crate) fn convolve_axis(data: &mut [f64], dims: [usize; 3], axis: usize, kernel: &[f64]) {
    if kernel.len() <= 1 || dims[axis] == 0 {
        return;
    }
    let half = (kernel.len() / 2) as isize;
    let stride = [1, dims[0], dims[0] * dims[1]][axis];
    let len = dims[axis];
    let n = data.len();
    let mut line = vec![0.0; len];
    for start in 0..n {
        if (start / stride) % len != 0 {
            continue;
        }
        for t in 0..len {
            line[t] = data[start + t * stride];
        }
        for t in 0..len {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let src = (t as isize + ki as isize - half).clamp(0, len as isize - 1) as usize;
                acc += w * line[src];
            }
            data[start + t * stride] = acc;
        }
    }
}

/// Separable Gaussian blur with standard deviation `sigma_mm`.
pub(crate) fn gaussian_blur(data: &mut [f64], dims: [usize; 3], spacing: [f64; 3], sigma_mm: f64) {
    for axis in 0..3 {
        convolve_axis(data, dims, axis, &gaussian_kernel(sigma_mm / spacing[axis]));
    }
}

fn nearest_mask_voxel(mask: &BinaryMask, p: &Vec3) -> Option<Voxel> {
    let c = mask.mm_to_continuous(p);
    let centre = c.map(|x| x.round() as isize);
    let mut best: Option<(f64, Voxel)> = None;
    for dk in -3..=3 {
        for dj in -3..=3 {
            for di in -3..=3 {
                let q = [centre[0] + di, centre[1] + dj, centre[2] + dk];
                if (0..3).any(|a| q[a] < 0 || q[a] >= mask.dims()[a] as isize) {
                    continue;
                }
                let v = [q[0] as usize, q[1] as usize, q[2] as usize];
                if !mask.at(v) {
                    continue;
                }
                let d = (mask.voxel_to_mm(v) - p).norm();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, v));
                }
            }
        }
    }
    best.map(|(_, v)| v)
}

/// Build the CT volume, the lumen mask and the analytic truth for `spec`.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(CtVolume, BinaryMask, PhantomTruth)> {
    if !(spec.length_mm > 0.0) || !(spec.r0_mm > 0.0) || !(spec.wall_mm >= 0.0) || spec.supersample == 0 {
        return Err(Error::InvalidPhantom("length, radius and supersampling must be positive".into()));
    }
    if spec.spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidPhantom("spacing must be positive".into()));
    }
    let r_end = spec.radius(spec.length_mm);
    let (r_min, r_max) = (spec.r0_mm.min(r_end), spec.r0_mm.max(r_end));
    let in_plane = spec.spacing[0].max(spec.spacing[1]);
    if r_min < 1.5 * in_plane {
        return Err(Error::InvalidPhantom(format!(
            "radius {r_min:.3} mm is under-resolved (< 1.5 voxels of {in_plane} mm)"
        )));
    }
    let mut branches = build_branches(spec)?;

    // Bounding box of the tube including wall and margin.
    let reach = r_max + spec.wall_mm;
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for b in &branches {
        let n = 256;
        for i in 0..=n {
            let p = b.curve.point(b.length * i as f64 / n as f64);
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
    }
    let sp = Vec3::from(spec.spacing);
    let margin = Vec3::from_fn(|a, _| (5.0 * sp[a] + reach).max(spec.margin_mm[a]));
    lo -= margin;
    hi += margin;
    let needed: [usize; 3] = std::array::from_fn(|a| ((hi[a] - lo[a]) / sp[a]).ceil() as usize + 1);
    let dims = match spec.dims {
        Some(d) => {
            if (0..3).any(|a| d[a] < needed[a]) {
                return Err(Error::InvalidPhantom(format!("tube exits the grid: needs {needed:?}, have {d:?}")));
            }
            d
        }
        None => needed,
    };
    // Centre the bounding box in the grid.
    let extent = Vec3::from_fn(|a, _| (dims[a] - 1) as f64 * sp[a]);
    let shift = Vec3::from_fn(|a, _| ((extent[a] - (hi[a] - lo[a])) / (2.0 * sp[a])).floor() * sp[a]) - lo;
    for b in &mut branches {
        b.curve = match &b.curve {
            Curve::Line { start, dir } => Curve::Line { start: start + shift, dir: *dir },
            Curve::Helix { centre, radius, pitch } => Curve::Helix { centre: centre + shift, radius: *radius, pitch: *pitch },
        };
        b.poly.iter_mut().for_each(|p| *p += shift);
    }
    let geo = Geometry { spec, branches };

    let mut field = vec![0.0; dims[0] * dims[1] * dims[2]];
    let mut mask_data = vec![false; field.len()];
    let half_diag = 0.5 * sp.norm();
    let ns = spec.supersample;
    let blend = |lumen: f64, wall: f64| {
        lumen * spec.lumen_hu + (wall - lumen) * spec.wall_hu + (1.0 - wall) * spec.parenchyma_hu
    };
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = i + dims[0] * (j + dims[1] * k);
                let c = Vec3::new(i as f64 * sp[0], j as f64 * sp[1], k as f64 * sp[2]);
                let centre = geo.classify(&c);
                mask_data[idx] = centre.0;
                let mut uniform = geo.surface_clearance(&c) > 1.1 * half_diag;
                if uniform {
                    'corners: for corner in 0..8 {
                        let off = Vec3::new(
                            if corner & 1 == 0 { -0.5 } else { 0.5 },
                            if corner & 2 == 0 { -0.5 } else { 0.5 },
                            if corner & 4 == 0 { -0.5 } else { 0.5 },
                        );
                        if geo.classify(&(c + off.component_mul(&sp))) != centre {
                            uniform = false;
                            break 'corners;
                        }
                    }
                }
                field[idx] = if uniform {
                    blend(f64::from(u8::from(centre.0)), f64::from(u8::from(centre.1)))
                } else {
                    let (mut nl, mut nw) = (0usize, 0usize);
                    for a in 0..ns {
                        for b in 0..ns {
                            for cc in 0..ns {
                                let f = |t: usize| (t as f64 + 0.5) / ns as f64 - 0.5;
                                let q = c + Vec3::new(f(a) * sp[0], f(b) * sp[1], f(cc) * sp[2]);
                                let (l, w) = geo.classify(&q);
                                nl += usize::from(l);
                                nw += usize::from(w);
                            }
                        }
                    }
                    let total = (ns * ns * ns) as f64;
                    blend(nl as f64 / total, nw as f64 / total)
                };
            }
        }
    }
    gaussian_blur(&mut field, dims, spec.spacing, spec.psf_sigma_mm);
    if spec.texture_hu > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.texture_seed);
        let normal = Normal::new(0.0, spec.texture_hu).map_err(|e| Error::InvalidPhantom(e.to_string()))?;
        field.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    let data: Vec<i16> = field
        .iter()
        .map(|&v| v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect();
    let ct = Volume::new(dims, spec.spacing, [0.0; 3], data)?;
    let mask = ct.with_data(mask_data)?;

    let truth = build_truth(spec, &geo, &mask)?;
    Ok((ct, mask, truth))
}

fn build_truth(spec: &PhantomSpec, geo: &Geometry, mask: &BinaryMask) -> Result<PhantomTruth> {
    let plane = mask.dims()[0] * mask.dims()[1];
    let first = mask
        .data()
        .chunks(plane)
        .position(|s| s.iter().any(|&b| b))
        .ok_or(Error::EmptyMask)?;
    let root = &geo.branches[0];
    let z = first as f64 * spec.spacing[2];
    let mut axis = root.curve.point(0.0);
    axis.z = z;
    let start_voxel = nearest_mask_voxel(mask, &axis).ok_or(Error::EmptyMask)?;

    let inset = spec.spacing.iter().copied().fold(0.0, f64::max);
    let leaves: Vec<&Branch> = geo.branches.iter().filter(|b| b.cap_end).collect();
    let mut airways = Vec::new();
    for (n, leaf) in leaves.iter().enumerate() {
        let mut centreline = Vec::new();
        let mut arclength = Vec::new();
        // Chain from the root down to this leaf.
        let chain: Vec<&Branch> = if std::ptr::eq(*leaf, root) { vec![root] } else { vec![root, *leaf] };
        for b in &chain {
            let steps = (b.length / 0.1).ceil().max(1.0) as usize;
            let skip = usize::from(!centreline.is_empty());
            for i in skip..=steps {
                let u = b.length * i as f64 / steps as f64;
                centreline.push(b.curve.point(u).into());
                arclength.push(b.s0 + u);
            }
        }
        let tip = leaf.curve.point((leaf.length - inset).max(0.0));
        let distal_voxel = nearest_mask_voxel(mask, &tip)
            .ok_or_else(|| Error::InvalidPhantom("distal end is not resolved in the mask".into()))?;
        let bifurcation_intervals = match &spec.centreline {
            Centreline::YSplit { branch_angle_deg, .. } => {
                let r = spec.radius(leaf.s0);
                let half = (branch_angle_deg / 2.0).to_radians();
                vec![(0.0, (r + spec.wall_mm) / half.sin() + r)]
            }
            _ => Vec::new(),
        };
        airways.push(AirwayTruth {
            id: if leaves.len() == 1 { "airway".to_string() } else { format!("airway{}", n + 1) },
            centreline,
            arclength,
            branch_start_mm: leaf.s0,
            distal_voxel,
            bifurcation_intervals,
        });
    }
    Ok(PhantomTruth {
        taper: spec.taper,
        r0_mm: spec.r0_mm,
        length_mm: spec.length_mm,
        start_voxel,
        airways,
    })
}
