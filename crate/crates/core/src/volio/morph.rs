//! Exact Euclidean distance transforms and spherical binary morphology.
//!
//! Everything here works in voxel units and ignores anisotropic spacing:
//! the structuring element is the set of integer offsets with norm <= r.

use super::BinaryMask;
use crate::{Error, Result};

/// 1D lower-envelope pass (Felzenszwalb & Huttenlocher) over squared distances.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    // Skip leading infinite samples: they never form the envelope.
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // k == 0 cannot reach here because z[0] = -inf.
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Squared Euclidean distance (voxel units) from every voxel to the nearest
/// `true` voxel of `features`. Voxels are infinitely far when no feature
/// exists.
pub fn squared_edt(features: &[bool], dims: [usize; 3]) -> Vec<f64> {
    let n: usize = dims.iter().product();
    assert_eq!(features.len(), n, "feature buffer does not match dims");
    let mut g: Vec<f64> = features
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let longest = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    for axis in 0..3 {
        let len = dims[axis];
        if len <= 1 {
            continue;
        }
        let stride = strides[axis];
        for start in 0..n {
            // Visit each line once, from its first element.
            if !(start / stride).is_multiple_of(len) {
                continue;
            }
            for t in 0..len {
                line[t] = g[start + t * stride];
            }
            edt_1d(&line[..len], &mut out[..len], &mut v, &mut z);
            for t in 0..len {
                g[start + t * stride] = out[t];
            }
        }
    }
    g
}

/// Per-slice Euclidean distance image, in voxel units.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DistanceImage {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.width * j]
    }

    /// Maximum value and the first pixel attaining it in `(i, j)` lexicographic order.
    pub fn argmax(&self) -> (f64, [usize; 2]) {
        let mut best = (f64::NEG_INFINITY, [0, 0]);
        for i in 0..self.width {
            for j in 0..self.height {
                let d = self.at(i, j);
                if d > best.0 {
                    best = (d, [i, j]);
                }
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Distance from each foreground pixel of axial slice `k` to the nearest
/// background pixel. Pixels outside the slice count as background.
pub fn edt_2d(m: &BinaryMask, k: usize) -> Result<DistanceImage> {
    let [nx, ny, nz] = m.dims();
    if k >= nz {
        return Err(Error::SliceOutOfRange { index: k, depth: nz });
    }
    let (px, py) = (nx + 2, ny + 2);
    let mut background = vec![true; px * py];
    let slice = &m.data()[k * nx * ny..(k + 1) * nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            background[(i + 1) + px * (j + 1)] = !slice[i + nx * j];
        }
    }
    let d2 = squared_edt(&background, [px, py, 1]);
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            values[i + nx * j] = d2[(i + 1) + px * (j + 1)].sqrt();
        }
    }
    Ok(DistanceImage {
        width: nx,
        height: ny,
        values,
    })
}

fn padded(m: &BinaryMask, pad: usize, fill: bool) -> (Vec<bool>, [usize; 3]) {
    let [nx, ny, nz] = m.dims();
    let pd = [nx + 2 * pad, ny + 2 * pad, nz + 2 * pad];
    let mut out = vec![fill; pd[0] * pd[1] * pd[2]];
    for k in 0..nz {
        for j in 0..ny {
            let src = m.index([0, j, k]);
            let dst = pad + pd[0] * ((j + pad) + pd[1] * (k + pad));
            out[dst..dst + nx].copy_from_slice(&m.data()[src..src + nx]);
        }
    }
    (out, pd)
}

fn cropped(buf: &[bool], pd: [usize; 3], pad: usize, like: &BinaryMask) -> BinaryMask {
    let [nx, ny, nz] = like.dims();
    let mut data = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            let src = pad + pd[0] * ((j + pad) + pd[1] * (k + pad));
            data.extend_from_slice(&buf[src..src + nx]);
        }
    }
    like.with_data(data).expect("cropped buffer matches the source grid")
}

fn check_radius(r: f64) {
    assert!(r >= 0.0 && r.is_finite(), "structuring element radius must be >= 0, got {r}");
}

fn erode_buffer(buf: &[bool], dims: [usize; 3], r: f64) -> Vec<bool> {
    let background: Vec<bool> = buf.iter().map(|&b| !b).collect();
    let d2 = squared_edt(&background, dims);
    let r2 = r * r;
    buf.iter().zip(&d2).map(|(&b, &d)| b && d > r2).collect()
}

fn dilate_buffer(buf: &[bool], dims: [usize; 3], r: f64) -> Vec<bool> {
    let d2 = squared_edt(buf, dims);
    let r2 = r * r;
    d2.iter().map(|&d| d <= r2).collect()
}

/// Erosion by a digital ball of radius `r` voxels. Voxels outside the grid
/// are background, so the mask is also eroded from the grid border.
pub fn erode_sphere(m: &BinaryMask, r: f64) -> BinaryMask {
    check_radius(r);
    let (buf, pd) = padded(m, 1, false);
    let eroded = erode_buffer(&buf, pd, r);
    cropped(&eroded, pd, 1, m)
}

/// Dilation by a digital ball of radius `r` voxels, clipped to the grid.
pub fn dilate_sphere(m: &BinaryMask, r: f64) -> BinaryMask {
    check_radius(r);
    let dilated = dilate_buffer(m.data(), m.dims(), r);
    m.with_data(dilated).expect("same grid")
}

/// Closing (dilation then erosion) with the same ball. The grid is padded by
/// the radius first so the result always contains the input.
pub fn close_sphere(m: &BinaryMask, r: f64) -> BinaryMask {
    check_radius(r);
    let pad = r.ceil() as usize + 1;
    let (buf, pd) = padded(m, pad, false);
    let closed = erode_buffer(&dilate_buffer(&buf, pd, r), pd, r);
    cropped(&closed, pd, pad, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::Volume;
    use crate::Voxel;
    use proptest::prelude::*;

    fn mask_from(dims: [usize; 3], mut f: impl FnMut(Voxel) -> bool) -> BinaryMask {
        let mut m = Volume::filled(dims, [1.0; 3], [0.0; 3], false).unwrap();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    m.set([i, j, k], f([i, j, k]));
                }
            }
        }
        m
    }

    // Brute force over all offsets of the ball; out-of-grid counts as background.
    fn erode_oracle(m: &BinaryMask, r: f64) -> BinaryMask {
        let ri = r.floor() as isize;
        let dims = m.dims();
        mask_from(dims, |v| {
            if !m.at(v) {
                return false;
            }
            for dk in -ri..=ri {
                for dj in -ri..=ri {
                    for di in -ri..=ri {
                        if ((di * di + dj * dj + dk * dk) as f64) > r * r {
                            continue;
                        }
                        let q = [v[0] as isize + di, v[1] as isize + dj, v[2] as isize + dk];
                        let inside = (0..3).all(|a| q[a] >= 0 && q[a] < dims[a] as isize);
                        if !inside || !m.at([q[0] as usize, q[1] as usize, q[2] as usize]) {
                            return false;
                        }
                    }
                }
            }
            true
        })
    }

    fn dilate_oracle_unbounded(m: &BinaryMask, r: f64, pad: usize) -> (Vec<bool>, [usize; 3]) {
        let (buf, pd) = padded(m, pad, false);
        let ri = r.floor() as isize;
        let mut out = vec![false; buf.len()];
        for idx in 0..buf.len() {
            let v = [idx % pd[0], (idx / pd[0]) % pd[1], idx / (pd[0] * pd[1])];
            'search: for dk in -ri..=ri {
                for dj in -ri..=ri {
                    for di in -ri..=ri {
                        if ((di * di + dj * dj + dk * dk) as f64) > r * r {
                            continue;
                        }
                        let q = [v[0] as isize + di, v[1] as isize + dj, v[2] as isize + dk];
                        if (0..3).all(|a| q[a] >= 0 && q[a] < pd[a] as isize) {
                            let qi = q[0] as usize + pd[0] * (q[1] as usize + pd[1] * q[2] as usize);
                            if buf[qi] {
                                out[idx] = true;
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        (out, pd)
    }

    #[test]
    fn erode_radius_zero_is_identity() {
        let m = mask_from([7, 7, 7], |v| (v[0] + v[1] * 3 + v[2]) % 4 != 0);
        assert_eq!(erode_sphere(&m, 0.0), m);
    }

    #[test]
    fn erode_ball_radius_ten_by_five() {
        let c = 12isize;
        let m = mask_from([25, 25, 25], |v| {
            let d: isize = (0..3).map(|a| (v[a] as isize - c).pow(2)).sum();
            d <= 100
        });
        let e = erode_sphere(&m, 5.0);
        assert_eq!(e, erode_oracle(&m, 5.0));
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 125.0;
        let n = e.count() as f64;
        assert!((n - analytic).abs() <= 0.1 * analytic, "{n} vs {analytic}");
    }

    #[test]
    fn isolated_voxel_erodes_away() {
        let m = mask_from([5, 5, 5], |v| v == [2, 2, 2]);
        assert_eq!(erode_sphere(&m, 1.0).count(), 0);
    }

    #[test]
    fn closing_fills_slab_hole() {
        let m = mask_from([9, 9, 7], |v| (2..=4).contains(&v[2]) && v != [4, 4, 3]);
        let closed = close_sphere(&m, 1.0);
        assert!(closed.at([4, 4, 3]));
        let (dil, pd) = dilate_oracle_unbounded(&m, 1.0, 2);
        let ero = erode_buffer(&dil, pd, 1.0);
        assert_eq!(closed, cropped(&ero, pd, 2, &m));
    }

    #[test]
    fn closing_keeps_solid_tube_and_empty_mask() {
        let tube = mask_from([15, 15, 12], |v| {
            let dx = v[0] as f64 - 7.0;
            let dy = v[1] as f64 - 7.0;
            dx * dx + dy * dy <= 16.0
        });
        assert_eq!(close_sphere(&tube, 1.0), tube);
        let empty = mask_from([5, 5, 5], |_| false);
        assert_eq!(close_sphere(&empty, 1.0), empty);
    }

    #[test]
    fn edt_slice_cases() {
        let empty = mask_from([6, 6, 2], |_| false);
        assert!(edt_2d(&empty, 1).unwrap().values.iter().all(|&d| d == 0.0));
        let single = mask_from([5, 5, 1], |v| v == [2, 3, 0]);
        let d = edt_2d(&single, 0).unwrap();
        assert_eq!(d.at(2, 3), 1.0);
        assert!(matches!(edt_2d(&single, 1), Err(Error::SliceOutOfRange { .. })));
    }

    #[test]
    fn edt_disk_maximum() {
        let r = 12.0;
        let m = mask_from([41, 41, 1], |v| {
            let dx = v[0] as f64 - 20.0;
            let dy = v[1] as f64 - 20.0;
            (dx * dx + dy * dy).sqrt() <= r
        });
        let d = edt_2d(&m, 0).unwrap();
        let (max, at) = d.argmax();
        assert_eq!(at, [20, 20]);
        assert!((max - r).abs() <= 1.0, "max {max}");
    }

    fn random_mask(dims: [usize; 3], seed: u64, density: f64) -> BinaryMask {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        mask_from(dims, |_| rng.random_bool(density))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn erosion_and_closing_bounds(seed in any::<u64>(), r in 0.0f64..2.5) {
            let m = random_mask([8, 7, 6], seed, 0.7);
            let e = erode_sphere(&m, r);
            let c = close_sphere(&m, r);
            prop_assert_eq!(&e, &erode_oracle(&m, r));
            for idx in 0..m.len() {
                prop_assert!(!e.data()[idx] || m.data()[idx]);
                prop_assert!(!m.data()[idx] || c.data()[idx]);
            }
            prop_assert_eq!(close_sphere(&c, r), c);
        }
    }
}
