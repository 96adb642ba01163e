//! Ramp-filtered backprojection.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::radon::{detector_half_width, Sinogram};
use crate::{Error, Result};

/// Frequency response of the band-limited ramp filter for a zero-padded
/// length `n`. Built from the spatial Ram-Lak kernel so the DC term is
/// right.
fn ramp_response(n: usize) -> Vec<f64> {
    let mut h = vec![Complex::new(0.0, 0.0); n];
    h[0].re = 0.25;
    for k in (1..n / 2).step_by(2) {
        let v = -1.0 / (PI * PI * (k * k) as f64);
        h[k].re = v;
        h[n - k].re = v;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut h);
    h.iter().map(|c| c.re).collect()
}

/// Ramp-filter every projection in place.
pub fn filter_sinogram(s: &mut Sinogram) {
    let n_bins = s.n_bins();
    let n = (2 * n_bins).next_power_of_two().max(64);
    let response = ramp_response(n);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for proj in s.data_mut().chunks_mut(n_bins) {
        for (b, v) in buf.iter_mut().enumerate() {
            *v = Complex::new(proj.get(b).copied().unwrap_or(0.0), 0.0);
        }
        forward.process(&mut buf);
        for (v, h) in buf.iter_mut().zip(&response) {
            *v *= *h;
        }
        inverse.process(&mut buf);
        for (p, v) in proj.iter_mut().zip(&buf) {
            *p = v.re / n as f64;
        }
    }
}

/// Reconstruct an `nx` by `ny` slice (x fastest) from its projections.
pub fn fbp_slice(s: &Sinogram, nx: usize, ny: usize) -> Result<Vec<f64>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidSimulation("empty output slice".into()));
    }
    let half = s.centre();
    if half < detector_half_width(nx, ny) {
        return Err(Error::InvalidSimulation(format!(
            "{} bins cannot cover a {nx} x {ny} slice",
            s.n_bins()
        )));
    }
    let mut filtered = s.clone();
    filter_sinogram(&mut filtered);
    Ok(backproject(&filtered, nx, ny))
}

/// Linear-interpolation backprojection scaled by π over the angle count.
pub(crate) fn backproject(s: &Sinogram, nx: usize, ny: usize) -> Vec<f64> {
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let centre = s.centre() as f64;
    let last = s.n_bins() - 1;
    let mut out = vec![0.0; nx * ny];
    for (a, &deg) in s.angles_deg().iter().enumerate() {
        let (sn, cs) = deg.to_radians().sin_cos();
        let proj = s.projection(a);
        for j in 0..ny {
            let y = j as f64 - cy;
            let row = &mut out[j * nx..(j + 1) * nx];
            let t0 = centre + y * sn - cx * cs;
            for (i, o) in row.iter_mut().enumerate() {
                let t = t0 + i as f64 * cs;
                let b = t.floor();
                let f = t - b;
                if b >= 0.0 && (b as usize) < last {
                    let b = b as usize;
                    *o += (1.0 - f) * proj[b] + f * proj[b + 1];
                }
            }
        }
    }
    let scale = PI / s.n_angles() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

#[cfg(test)]
mod tests {
    use super::super::radon::{radon_slice, uniform_angles, default_angles};
    use super::*;
    use statrs::function::erf::erf;

    fn disk(n: usize, r: f64, value: f64) -> Vec<f64> {
        let c = (n as f64 - 1.0) / 2.0;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let mut hits = 0;
                for sj in 0..8 {
                    for si in 0..8 {
                        let x = i as f64 - c - 0.5 + (si as f64 + 0.5) / 8.0;
                        let y = j as f64 - c - 0.5 + (sj as f64 + 0.5) / 8.0;
                        if x * x + y * y <= r * r {
                            hits += 1;
                        }
                    }
                }
                out[j * n + i] = value * hits as f64 / 64.0;
            }
        }
        out
    }

    #[test]
    fn zero_sinogram_gives_zero_slice() {
        let s = Sinogram::new(uniform_angles(10), 2 * detector_half_width(16, 16) + 1, vec![0.0; 10 * 25]).unwrap();
        assert!(fbp_slice(&s, 16, 16).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_round_trip_interior_rmse() {
        let n = 128;
        let img = disk(n, 40.0, 1000.0);
        let s = radon_slice(&img, n, n, &default_angles()).unwrap();
        let rec = fbp_slice(&s, n, n).unwrap();
        let c = (n as f64 - 1.0) / 2.0;
        let (mut se, mut count) = (0.0, 0);
        for j in 0..n {
            for i in 0..n {
                let r = (i as f64 - c).hypot(j as f64 - c);
                if r < 35.0 {
                    se += (rec[j * n + i] - 1000.0).powi(2);
                    count += 1;
                }
            }
        }
        let rmse = (se / count as f64).sqrt();
        assert!(rmse < 10.0, "rmse {rmse}");
    }

    #[test]
    fn edge_position_survives_round_trip() {
        // Blurred ring profile like a tube cross-section: lumen -1000,
        // wall 0, parenchyma -900.
        let n = 64;
        let c = (n as f64 - 1.0) / 2.0;
        let profile = |r: f64| -> f64 {
            let step = |r0: f64| 0.5 * (1.0 + erf((r - r0) / (0.9 * 2f64.sqrt())));
            -1000.0 + 1000.0 * step(8.0) - 900.0 * step(11.0)
        };
        let img: Vec<f64> = (0..n * n)
            .map(|p| profile(((p % n) as f64 - c).hypot((p / n) as f64 - c)))
            .collect();
        let s = radon_slice(&img, n, n, &uniform_angles(600)).unwrap();
        let rec = fbp_slice(&s, n, n).unwrap();
        let row = n / 2;
        let crossing = |v: &[f64]| -> f64 {
            let line: Vec<f64> = (0..n).map(|i| v[row * n + i]).collect();
            let start = n / 2;
            for i in start..n - 1 {
                if line[i] < -500.0 && line[i + 1] >= -500.0 {
                    return i as f64 + (-500.0 - line[i]) / (line[i + 1] - line[i]);
                }
            }
            panic!("no crossing");
        };
        let shift = (crossing(&rec) - crossing(&img)).abs();
        assert!(shift < 0.5, "edge shift {shift}");
    }

    #[test]
    fn rejects_undersized_detector() {
        let s = Sinogram::new(uniform_angles(4), 5, vec![0.0; 20]).unwrap();
        assert!(fbp_slice(&s, 32, 32).is_err());
    }
}
