use std::f64::consts::PI;

use crate::centregeom::PlaneImage;
use crate::{Error, Result};

/// Sampling step along a ray: a fifth of the 0.3 mm plane pixel.
pub const RAY_STEP_MM: f64 = 0.06;

/// Mask and CT profiles sampled along one ray from the plane centre.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPair {
    pub angle: f64,
    pub step: f64,
    pub rb: Vec<f64>,
    pub rc: Vec<f64>,
}

impl RayPair {
    /// In-plane direction `(cos θ, sin θ)`.
    pub fn direction(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }
}

/// Cast `n_rays` equally spaced rays from the centre to the plane border.
pub fn cast_rays(ct: &PlaneImage, mask: &PlaneImage, n_rays: usize) -> Result<Vec<RayPair>> {
    let centre = mask.centre_value();
    if centre < 0.5 {
        return Err(Error::CentreOutsideLumen(centre));
    }
    let length = ct.half_extent.min(mask.half_extent);
    let n = (length / RAY_STEP_MM + 1e-9).floor() as usize + 1;
    Ok((0..n_rays)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n_rays as f64;
            let (c, s) = (angle.cos(), angle.sin());
            let mut rb = Vec::with_capacity(n);
            let mut rc = Vec::with_capacity(n);
            for i in 0..n {
                let d = i as f64 * RAY_STEP_MM;
                rb.push(mask.sample_bilinear(d * c, d * s).expect("ray stays inside the plane"));
                rc.push(ct.sample_bilinear(d * c, d * s).expect("ray stays inside the plane"));
            }
            RayPair {
                angle,
                step: RAY_STEP_MM,
                rb,
                rc,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    fn radial_plane(f: impl Fn(f64) -> f64, half: f64) -> PlaneImage {
        let size = (2.0 * half / 0.3).round() as usize + 1;
        let mut values = Vec::new();
        for b in 0..size {
            for a in 0..size {
                let x = -half + a as f64 * 0.3;
                let y = -half + b as f64 * 0.3;
                values.push(f((x * x + y * y).sqrt()));
            }
        }
        PlaneImage {
            size,
            pixel: 0.3,
            half_extent: half,
            origin: Vec3::zeros(),
            v1: Vec3::x(),
            v2: Vec3::y(),
            values,
        }
    }

    #[test]
    fn fifty_rays_and_symmetry() {
        let ct = radial_plane(|r| if r < 3.0 { -1000.0 } else { 0.0 }, 6.0);
        let mask = radial_plane(|r| if r < 3.0 { 1.0 } else { 0.0 }, 6.0);
        let rays = cast_rays(&ct, &mask, 50).unwrap();
        assert_eq!(rays.len(), 50);
        assert!((rays[1].angle - 7.2f64.to_radians()).abs() < 1e-12);
        assert_eq!(rays[0].rc.len(), 101);
        // Axis-aligned rays see identical profiles.
        for k in [0, 25] {
            for (a, b) in rays[k].rc.iter().zip(&rays[0].rc) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn centre_outside_lumen() {
        let ct = radial_plane(|_| 0.0, 3.0);
        let mask = radial_plane(|_| 0.2, 3.0);
        assert!(matches!(cast_rays(&ct, &mask, 50), Err(Error::CentreOutsideLumen(_))));
    }
}
