//! Parallel-beam forward projection by Joseph's method.

use crate::{Error, Result};

/// Projections of one slice: `n_bins` detector bins for each angle, stored
/// angle-major. Bin `b` sits at signed offset `b - centre` pixels from the
/// slice centre, with `centre = (n_bins - 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles_deg: Vec<f64>,
    n_bins: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(angles_deg: Vec<f64>, n_bins: usize, data: Vec<f64>) -> Result<Self> {
        check_angles(&angles_deg)?;
        if n_bins == 0 || n_bins.is_multiple_of(2) {
            return Err(Error::InvalidSimulation(format!("bin count must be odd, got {n_bins}")));
        }
        if data.len() != angles_deg.len() * n_bins {
            return Err(Error::InvalidSimulation(format!(
                "{} values for {} angles x {n_bins} bins",
                data.len(),
                angles_deg.len()
            )));
        }
        Ok(Sinogram {
            angles_deg,
            n_bins,
            data,
        })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_angles(&self) -> usize {
        self.angles_deg.len()
    }

    /// Offset of the central bin.
    pub fn centre(&self) -> usize {
        (self.n_bins - 1) / 2
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn projection(&self, a: usize) -> &[f64] {
        &self.data[a * self.n_bins..(a + 1) * self.n_bins]
    }
}

/// 0° to 179° in steps of 0.1°, 1791 angles.
pub fn default_angles() -> Vec<f64> {
    (0..1791).map(|i| i as f64 / 10.0).collect()
}

/// `n` equally spaced angles covering [0°, 180°).
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| 180.0 * i as f64 / n as f64).collect()
}

pub(crate) fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidSimulation("no projection angles".into()));
    }
    if angles.iter().any(|a| !(0.0..180.0).contains(a)) || angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSimulation(
            "angles must increase strictly within [0, 180)".into(),
        ));
    }
    Ok(())
}

/// Half-width of the detector, in bins, needed to cover an `nx` by `ny` slice.
pub fn detector_half_width(nx: usize, ny: usize) -> usize {
    let hx = (nx as f64 - 1.0) / 2.0;
    let hy = (ny as f64 - 1.0) / 2.0;
    hx.hypot(hy).ceil() as usize + 1
}

/// Line integrals of an `nx` by `ny` slice (x fastest) at the given angles.
///
/// Pixel `(i, j)` sits at `x = i - (nx-1)/2`, `y = j - (ny-1)/2`, and the
/// projection at angle θ collects along lines `x cos θ + y sin θ = τ`.
pub fn radon_slice(slice: &[f64], nx: usize, ny: usize, angles_deg: &[f64]) -> Result<Sinogram> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidSimulation("empty slice".into()));
    }
    if slice.len() != nx * ny {
        return Err(Error::InvalidSimulation(format!(
            "slice has {} values, expected {nx} x {ny}",
            slice.len()
        )));
    }
    check_angles(angles_deg)?;
    let half = detector_half_width(nx, ny);
    let n_bins = 2 * half + 1;
    let mut data = vec![0.0; angles_deg.len() * n_bins];
    for (a, &deg) in angles_deg.iter().enumerate() {
        project(slice, nx, ny, deg.to_radians(), half, &mut data[a * n_bins..(a + 1) * n_bins]);
    }
    Sinogram::new(angles_deg.to_vec(), n_bins, data)
}

fn project(slice: &[f64], nx: usize, ny: usize, theta: f64, half: usize, out: &mut [f64]) {
    let (s, c) = theta.sin_cos();
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    // Step along whichever image axis the ray is closer to; the other
    // coordinate is interpolated linearly inside the row or column.
    let (steps, along, cross, w, across_len, stride_step, stride_across, c_step, c_across) =
        if c.abs() >= s.abs() {
            (ny, s, c, 1.0 / c.abs(), nx, nx, 1, cy, cx)
        } else {
            (nx, c, s, 1.0 / s.abs(), ny, 1, nx, cx, cy)
        };
    for (b, o) in out.iter_mut().enumerate() {
        let tau = b as f64 - half as f64;
        // Only steps whose crossing lands in (-1, across_len) contribute.
        let (mut k_lo, mut k_hi) = (0usize, steps);
        if along.abs() > 1e-12 {
            let k_at = |p: f64| (tau - (p - c_across) * cross) / along + c_step;
            let (a, b) = (k_at(-1.0), k_at(across_len as f64));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            k_lo = lo.floor().clamp(0.0, steps as f64) as usize;
            k_hi = (hi.ceil() + 1.0).clamp(0.0, steps as f64) as usize;
        }
        let mut acc = 0.0;
        for k in k_lo..k_hi {
            let u = k as f64 - c_step;
            let p = (tau - u * along) / cross + c_across;
            let p0 = p.floor();
            let f = p - p0;
            let p0 = p0 as isize;
            let base = k * stride_step;
            if p0 >= 0 && (p0 as usize) < across_len {
                acc += (1.0 - f) * slice[base + p0 as usize * stride_across];
            }
            if p0 + 1 >= 0 && ((p0 + 1) as usize) < across_len {
                acc += f * slice[base + (p0 + 1) as usize * stride_across];
            }
        }
        *o = acc * w;
    }
}
