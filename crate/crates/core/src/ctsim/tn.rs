//! Noise index T_n: intensity spread inside the eroded upper trachea.

use crate::volio::{erode_sphere, BinaryMask, CtVolume};
use crate::{Error, Result};

/// Number of axial slices, counted from the first occupied one.
pub const TN_SLICES: usize = 60;

/// Erosion radius in voxels.
pub const TN_EROSION: f64 = 5.0;

/// Population standard deviation of `v` inside `trachea`, restricted to its
/// first [`TN_SLICES`] occupied axial slices and eroded by a ball of radius
/// [`TN_EROSION`] voxels.
pub fn measure_tn(v: &CtVolume, trachea: &BinaryMask) -> Result<f64> {
    if !v.same_grid(trachea) {
        return Err(Error::InvalidSimulation("volume and trachea mask grids differ".into()));
    }
    let [nx, ny, _] = trachea.dims();
    let slice = nx * ny;
    let first = trachea
        .data()
        .iter()
        .position(|&b| b)
        .ok_or(Error::EmptyMask)?
        / slice;
    let last = first + TN_SLICES;
    let window = trachea.with_data(
        trachea
            .data()
            .iter()
            .enumerate()
            .map(|(p, &b)| b && (first..last).contains(&(p / slice)))
            .collect(),
    )?;
    let core = erode_sphere(&window, TN_EROSION);
    let values: Vec<f64> = core
        .data()
        .iter()
        .zip(v.data())
        .filter(|(&b, _)| b)
        .map(|(_, &h)| f64::from(h))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}
