//! Voxel-size changes: anti-aliased windowed-sinc resampling of intensities
//! and nearest-neighbour resampling of masks.

use std::f64::consts::PI;

use crate::phantom::{convolve_axis, gaussian_kernel};
use crate::volio::{close_sphere, BinaryMask, CtVolume, Volume};
use crate::{Error, Result, Voxel};

/// Lanczos lobes, in new-grid voxels.
const LANCZOS_A: f64 = 3.0;

/// Gaussian pre-smoothing width as a fraction of the new voxel size.
pub const PRESMOOTH_FRACTION: f64 = 0.4;

/// Number of samples along an axis of `n` voxels after scaling by `scale`.
pub fn rescaled_len(n: usize, scale: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((n - 1) as f64 / scale + 1e-9).floor() as usize + 1
}

fn rescaled_grid<T>(v: &Volume<T>, scale: f64) -> Result<([usize; 3], [f64; 3])> {
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::InvalidSimulation(format!("scale must be >= 1, got {scale}")));
    }
    let dims = v.dims().map(|n| rescaled_len(n, scale));
    if dims.iter().any(|&n| n < 2) {
        return Err(Error::InvalidSimulation(format!(
            "scale {scale} leaves grid {dims:?} with fewer than 2 voxels on an axis"
        )));
    }
    Ok((dims, v.spacing().map(|s| s * scale)))
}

fn lanczos(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() >= LANCZOS_A {
        return 0.0;
    }
    let px = PI * x;
    LANCZOS_A * px.sin() * (px / LANCZOS_A).sin() / (px * px)
}

/// Resample one axis: output sample `k` sits at input index `k * scale`.
fn resample_axis(data: &[f64], dims: [usize; 3], axis: usize, scale: f64, out_len: usize) -> (Vec<f64>, [usize; 3]) {
    let n = dims[axis];
    let reach = LANCZOS_A * scale;
    let taps: Vec<(usize, Vec<f64>)> = (0..out_len)
        .map(|k| {
            let p = k as f64 * scale;
            let lo = ((p - reach).ceil().max(0.0)) as usize;
            let hi = ((p + reach).floor() as usize).min(n - 1);
            let mut w: Vec<f64> = (lo..=hi).map(|m| lanczos((m as f64 - p) / scale)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            (lo, w)
        })
        .collect();
    let mut out_dims = dims;
    out_dims[axis] = out_len;
    let in_stride = [1, dims[0], dims[0] * dims[1]];
    let out_stride = [1, out_dims[0], out_dims[0] * out_dims[1]];
    let mut out = vec![0.0; out_dims.iter().product()];
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    for b in 0..out_dims[others[1]] {
        for a in 0..out_dims[others[0]] {
            let in_base = a * in_stride[others[0]] + b * in_stride[others[1]];
            let out_base = a * out_stride[others[0]] + b * out_stride[others[1]];
            for (k, (lo, w)) in taps.iter().enumerate() {
                let acc: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(t, wt)| wt * data[in_base + (lo + t) * in_stride[axis]])
                    .sum();
                out[out_base + k * out_stride[axis]] = acc;
            }
        }
    }
    (out, out_dims)
}

/// Resample `v` onto a grid whose spacing is `scale` times larger.
///
/// Intensities are Gaussian pre-smoothed with a width of
/// [`PRESMOOTH_FRACTION`] new voxels, then interpolated with a normalized
/// Lanczos-3 kernel stretched to the new grid. `scale = 1` returns the
/// input unchanged.
pub fn rescale_volume(v: &CtVolume, scale: f64) -> Result<CtVolume> {
    let (new_dims, new_spacing) = rescaled_grid(v, scale)?;
    if scale == 1.0 {
        return Ok(v.clone());
    }
    let mut dims = v.dims();
    let mut data: Vec<f64> = v.data().iter().map(|&h| f64::from(h)).collect();
    let kernel = gaussian_kernel(PRESMOOTH_FRACTION * scale);
    for axis in 0..3 {
        convolve_axis(&mut data, dims, axis, &kernel);
    }
    for axis in 0..3 {
        (data, dims) = resample_axis(&data, dims, axis, scale, new_dims[axis]);
    }
    let hu = data
        .into_iter()
        .map(|x| x.round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
        .collect();
    Volume::new(new_dims, new_spacing, v.origin(), hu)
}

/// Nearest-neighbour resampling of a mask, followed by a radius-1 closing
/// when the grid actually coarsens.
pub fn rescale_mask(m: &BinaryMask, scale: f64) -> Result<BinaryMask> {
    let (new_dims, new_spacing) = rescaled_grid(m, scale)?;
    if scale == 1.0 {
        return Ok(m.clone());
    }
    let dims = m.dims();
    let nearest = |k: usize, a: usize| ((k as f64 * scale).round() as usize).min(dims[a] - 1);
    let mut data = Vec::with_capacity(new_dims.iter().product());
    for k in 0..new_dims[2] {
        for j in 0..new_dims[1] {
            for i in 0..new_dims[0] {
                data.push(m.at([nearest(i, 0), nearest(j, 1), nearest(k, 2)]));
            }
        }
    }
    let resampled = Volume::new(new_dims, new_spacing, m.origin(), data)?;
    Ok(close_sphere(&resampled, 1.0))
}

/// Map a voxel of the original grid onto the grid rescaled by `scale`.
pub fn rescale_voxel(v: Voxel, scale: f64, new_dims: [usize; 3]) -> Voxel {
    [0, 1, 2].map(|a| ((v[a] as f64 / scale).round() as usize).min(new_dims[a] - 1))
}

/// Closest mask voxel to `v` within a cube of half-width `radius`, by
/// physical distance. Ties go to the first in x-fastest scan order.
pub fn snap_to_mask(m: &BinaryMask, v: Voxel, radius: usize) -> Option<Voxel> {
    let dims = m.dims();
    let lo = v.map(|x| x.saturating_sub(radius));
    let hi = [0, 1, 2].map(|a| (v[a] + radius).min(dims[a] - 1));
    let p = m.voxel_to_mm(v);
    let mut best: Option<(f64, Voxel)> = None;
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let q = [i, j, k];
                if m.at(q) {
                    let d = (m.voxel_to_mm(q) - p).norm_squared();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, q));
                    }
                }
            }
        }
    }
    best.map(|(_, q)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::topology::count_components_26;
    use proptest::prelude::*;

    fn ramp() -> CtVolume {
        let dims = [20, 18, 16];
        let data = (0..20 * 18 * 16).map(|p| ((p * 37) % 401) as i16 - 200).collect();
        CtVolume::new(dims, [0.7, 0.7, 1.0], [1.0, -2.0, 3.0], data).unwrap()
    }

    #[test]
    fn unit_scale_is_identity() {
        let v = ramp();
        assert_eq!(rescale_volume(&v, 1.0).unwrap(), v);
        let m = v.map(|&h| h > 0);
        assert_eq!(rescale_mask(&m, 1.0).unwrap(), m);
    }

    #[test]
    fn unit_scale_resampling_kernel_is_exact() {
        let data: Vec<f64> = (0..60).map(|x| (x as f64 * 0.37).sin()).collect();
        let (out, dims) = resample_axis(&data, [5, 4, 3], 1, 1.0, 4);
        assert_eq!(dims, [5, 4, 3]);
        for (a, b) in out.iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_arithmetic() {
        assert_eq!(rescaled_len(100, 1.5), 67);
        assert_eq!(rescaled_len(61, 1.5), 41);
        assert_eq!(rescaled_len(11, 2.0), 6);
        let v = ramp();
        let out = rescale_volume(&v, 1.5).unwrap();
        assert_eq!(out.dims(), [13, 12, 11]);
        assert_eq!(out.origin(), v.origin());
        assert!((out.spacing()[2] - 1.5).abs() < 1e-12);
        assert!(rescale_volume(&v, 0.5).is_err());
        assert!(rescale_volume(&v, 20.0).is_err());
    }

    #[test]
    fn empty_mask_stays_empty() {
        let m = BinaryMask::filled([10, 10, 10], [1.0; 3], [0.0; 3], false).unwrap();
        assert_eq!(rescale_mask(&m, 1.7).unwrap().count(), 0);
    }

    #[test]
    fn solid_tube_stays_connected() {
        let dims = [30, 30, 40];
        let mut m = BinaryMask::filled(dims, [0.7, 0.7, 1.0], [0.0; 3], false).unwrap();
        for k in 2..38 {
            for j in 0..30 {
                for i in 0..30 {
                    let x = (i as f64 - 14.5) * 0.7;
                    let y = (j as f64 - 14.5) * 0.7 - 0.1 * k as f64;
                    if x.hypot(y) < 2.5 {
                        m.set([i, j, k], true);
                    }
                }
            }
        }
        let out = rescale_mask(&m, 2.0).unwrap();
        assert!(out.count() > 0);
        assert_eq!(count_components_26(&out), 1);
    }

    #[test]
    fn snapping() {
        let mut m = BinaryMask::filled([9, 9, 9], [1.0; 3], [0.0; 3], false).unwrap();
        m.set([6, 4, 4], true);
        m.set([1, 1, 1], true);
        assert_eq!(snap_to_mask(&m, [4, 4, 4], 2), Some([6, 4, 4]));
        assert_eq!(snap_to_mask(&m, [4, 4, 4], 1), None);
        assert_eq!(rescale_voxel([8, 3, 0], 1.5, [6, 6, 6]), [5, 2, 0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn constant_volume_stays_constant(value in -1000i16..1000, scale in 1.0f64..2.5) {
            let v = CtVolume::filled([14, 12, 10], [0.8, 0.8, 1.0], [0.0; 3], value).unwrap();
            let out = rescale_volume(&v, scale).unwrap();
            prop_assert!(out.data().iter().all(|&h| h == value));
        }

        #[test]
        fn commutes_with_intensity_shift(shift in -300i16..300, scale in 1.0f64..2.0) {
            let v = ramp();
            let shifted = v.map(|&h| h + shift);
            let a = rescale_volume(&shifted, scale).unwrap();
            let b = rescale_volume(&v, scale).unwrap().map(|&h| h + shift);
            prop_assert_eq!(a, b);
        }
    }
}
