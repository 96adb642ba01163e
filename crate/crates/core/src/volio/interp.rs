use super::{Scalar, Volume};
use crate::{Error, Result, Vec3};

/// Interpolation scheme for off-grid sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    /// Separable Keys cubic convolution with `a = -0.5`.
    #[default]
    Cubic,
}

const KEYS_A: f64 = -0.5;

/// Keys cubic-convolution kernel.
#[inline]
fn keys(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((KEYS_A + 2.0) * x - (KEYS_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((KEYS_A * x - 5.0 * KEYS_A) * x + 8.0 * KEYS_A) * x - 4.0 * KEYS_A
    } else {
        0.0
    }
}

/// Weights for taps at offsets -1, 0, 1, 2 from the base sample.
#[inline]
pub fn cubic_weights(frac: f64) -> [f64; 4] {
    [keys(1.0 + frac), keys(frac), keys(1.0 - frac), keys(2.0 - frac)]
}

// Tolerance on the continuous index before a query counts as outside.
const EDGE_EPS: f64 = 1e-9;

/// Base index and fraction along one axis, or `None` outside `[margin, n - 1 - margin]`.
/// `margin` is 0 for linear (taps 0, +1) and 1 for cubic (taps -1..=+2).
#[inline]
fn axis_base(c: f64, n: usize, margin: usize) -> Option<(usize, f64)> {
    if n < 2 * margin + 2 && !(margin == 0 && n == 1) {
        return None;
    }
    let lo = margin as f64;
    let hi = (n - 1 - margin) as f64;
    if !(c >= lo - EDGE_EPS && c <= hi + EDGE_EPS) {
        return None;
    }
    let c = c.clamp(lo, hi);
    let max_base = (n - 1).saturating_sub(margin + 1);
    let base = (c.floor() as usize).min(max_base);
    Some((base, c - base as f64))
}

impl<T: Scalar> Volume<T> {
    /// Sample at a continuous voxel index.
    pub fn sample_continuous(&self, c: [f64; 3], scheme: Interpolation) -> Result<f64> {
        let [nx, ny, nz] = self.dims;
        let data = &self.data;
        match scheme {
            Interpolation::Linear => {
                let (Some((i, fx)), Some((j, fy)), Some((k, fz))) = (
                    axis_base(c[0], nx, 0),
                    axis_base(c[1], ny, 0),
                    axis_base(c[2], nz, 0),
                ) else {
                    return Err(Error::OutOfBounds(c));
                };
                // Degenerate single-voxel axes have a zero-weight second tap.
                let i1 = (i + 1).min(nx - 1);
                let j1 = (j + 1).min(ny - 1);
                let k1 = (k + 1).min(nz - 1);
                let at = |a: usize, b: usize, d: usize| data[a + nx * (b + ny * d)].to_f64();
                let c00 = at(i, j, k) * (1.0 - fx) + at(i1, j, k) * fx;
                let c10 = at(i, j1, k) * (1.0 - fx) + at(i1, j1, k) * fx;
                let c01 = at(i, j, k1) * (1.0 - fx) + at(i1, j, k1) * fx;
                let c11 = at(i, j1, k1) * (1.0 - fx) + at(i1, j1, k1) * fx;
                let c0 = c00 * (1.0 - fy) + c10 * fy;
                let c1 = c01 * (1.0 - fy) + c11 * fy;
                Ok(c0 * (1.0 - fz) + c1 * fz)
            }
            Interpolation::Cubic => {
                let (Some((i, fx)), Some((j, fy)), Some((k, fz))) = (
                    axis_base(c[0], nx, 1),
                    axis_base(c[1], ny, 1),
                    axis_base(c[2], nz, 1),
                ) else {
                    return Err(Error::OutOfBounds(c));
                };
                let wx = cubic_weights(fx);
                let wy = cubic_weights(fy);
                let wz = cubic_weights(fz);
                let mut acc = 0.0;
                for (dz, &wzv) in wz.iter().enumerate() {
                    if wzv == 0.0 {
                        continue;
                    }
                    let kk = k + dz - 1;
                    let mut plane = 0.0;
                    for (dy, &wyv) in wy.iter().enumerate() {
                        if wyv == 0.0 {
                            continue;
                        }
                        let row = nx * ((j + dy - 1) + ny * kk);
                        let base = row + i - 1;
                        let line = wx[0] * data[base].to_f64()
                            + wx[1] * data[base + 1].to_f64()
                            + wx[2] * data[base + 2].to_f64()
                            + wx[3] * data[base + 3].to_f64();
                        plane += wyv * line;
                    }
                    acc += wzv * plane;
                }
                Ok(acc)
            }
        }
    }
}

/// Interpolated value at a millimetre position. Queries outside the
/// interpolation domain (the grid shrunk by one voxel for the cubic scheme)
/// are errors, never clamped.
pub fn sample_interpolated<T: Scalar>(v: &Volume<T>, p: &Vec3, scheme: Interpolation) -> Result<f64> {
    v.sample_continuous(v.mm_to_continuous(p), scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(dims: [usize; 3], spacing: [f64; 3]) -> Volume<f64> {
        let mut data = Vec::new();
        for _k in 0..dims[2] {
            for _j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(i as f64 * spacing[0]);
                }
            }
        }
        Volume::new(dims, spacing, [0.0; 3], data).unwrap()
    }

    #[test]
    fn kernel_partition_of_unity() {
        for f in [0.0, 0.1, 0.37, 0.5, 0.99] {
            let w = cubic_weights(f);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        }
        assert_eq!(cubic_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn voxel_centres_are_reproduced() {
        let data: Vec<i16> = (0..5 * 5 * 5).map(|x| (x * 37 % 201) as i16 - 100).collect();
        let v = Volume::new([5, 5, 5], [0.7, 0.8, 1.5], [1.0, -2.0, 3.0], data).unwrap();
        for vox in [[1, 1, 1], [2, 3, 1], [3, 3, 3], [1, 2, 3]] {
            let p = v.voxel_to_mm(vox);
            let expected = f64::from(v.at(vox));
            for scheme in [Interpolation::Linear, Interpolation::Cubic] {
                let got = sample_interpolated(&v, &p, scheme).unwrap();
                assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
            }
        }
        // Linear reaches the outermost voxels, including the far corner.
        let corner = v.voxel_to_mm([4, 4, 4]);
        assert_abs_diff_eq!(
            sample_interpolated(&v, &corner, Interpolation::Linear).unwrap(),
            f64::from(v.at([4, 4, 4])),
            epsilon = 1e-9
        );
    }

    #[test]
    fn constant_volume_stays_constant() {
        let v = Volume::filled([6, 6, 6], [0.6, 0.6, 1.2], [0.0; 3], -873i16).unwrap();
        for p in [
            Vec3::new(1.3, 1.7, 2.9),
            Vec3::new(2.21, 0.9, 4.1),
            Vec3::new(0.61, 2.39, 1.21),
        ] {
            for scheme in [Interpolation::Linear, Interpolation::Cubic] {
                assert_abs_diff_eq!(
                    sample_interpolated(&v, &p, scheme).unwrap(),
                    -873.0,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn cubic_reproduces_linear_ramp() {
        let v = ramp([8, 6, 6], [0.7, 0.7, 1.0]);
        for x in [0.71, 1.05, 2.333, 3.9, 4.2] {
            let p = Vec3::new(x, 2.0, 2.5);
            let got = sample_interpolated(&v, &p, Interpolation::Cubic).unwrap();
            assert_abs_diff_eq!(got, x, epsilon = 1e-9);
        }
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let v = Volume::filled([5, 5, 5], [1.0; 3], [0.0; 3], 0i16).unwrap();
        assert!(sample_interpolated(&v, &Vec3::new(0.5, 2.0, 2.0), Interpolation::Cubic).is_err());
        assert!(sample_interpolated(&v, &Vec3::new(0.5, 2.0, 2.0), Interpolation::Linear).is_ok());
        assert!(sample_interpolated(&v, &Vec3::new(4.01, 2.0, 2.0), Interpolation::Linear).is_err());
        assert!(sample_interpolated(&v, &Vec3::new(3.0, 3.0, 3.0), Interpolation::Cubic).is_ok());
        assert!(sample_interpolated(&v, &Vec3::new(3.2, 3.0, 3.0), Interpolation::Cubic).is_err());
    }

    #[test]
    fn linear_is_bounded_by_neighbours() {
        let data: Vec<i16> = (0..4 * 4 * 4).map(|x| ((x * 7919) % 97) as i16).collect();
        let v = Volume::new([4, 4, 4], [1.0; 3], [0.0; 3], data).unwrap();
        let (lo, hi) = v
            .data()
            .iter()
            .fold((i16::MAX, i16::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        for t in 0..50 {
            let f = t as f64 / 49.0 * 3.0;
            let p = Vec3::new(f, 3.0 - f, 0.5 * f + 0.2);
            let got = sample_interpolated(&v, &p, Interpolation::Linear).unwrap();
            assert!(got >= f64::from(lo) - 1e-9 && got <= f64::from(hi) + 1e-9);
        }
    }
}
