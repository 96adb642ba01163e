//! End-to-end measurement: mask and distal points in, taper rates out.

use rayon::prelude::*;

use crate::centregeom::{fit_spline, smooth_path, AirwaySpline};
use crate::lumen::{measure_profile, LumenProfile, MeasureConfig};
use crate::skeleton::{extract_paths, find_trachea_start, thin_to_centreline, AirwayPath, DistalPoint};
use crate::taper::{taper_rate, TaperResult};
use crate::volio::{BinaryMask, CtVolume};
use crate::{Result, Voxel};

/// Centreline of one airway as a smoothed spline.
#[derive(Debug, Clone)]
pub struct AirwayCentreline {
    pub path: AirwayPath,
    pub spline: AirwaySpline,
}

/// Profile and taper of one airway. The taper is `None` when too few
/// stations could be measured.
#[derive(Debug, Clone)]
pub struct AirwayMeasurement {
    pub id: String,
    pub profile: LumenProfile,
    pub taper: Option<TaperResult>,
}

/// Trachea start, skeleton and per-airway splines for a segmentation.
pub fn extract_centrelines(mask: &BinaryMask, distal: &[DistalPoint]) -> Result<(Voxel, Vec<AirwayCentreline>)> {
    let start = find_trachea_start(mask)?;
    let tree = thin_to_centreline(mask, start, distal)?;
    let paths = extract_paths(&tree)?;
    let centrelines = paths
        .into_iter()
        .map(|path| {
            let pts = smooth_path(&path, mask)?;
            let spline = fit_spline(&pts)?;
            Ok(AirwayCentreline { path, spline })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((start, centrelines))
}

/// Measure lumen profiles and tapers along already extracted centrelines.
pub fn measure_centrelines(
    ct: &CtVolume,
    mask: &BinaryMask,
    centrelines: &[AirwayCentreline],
    cfg: &MeasureConfig,
) -> Result<Vec<AirwayMeasurement>> {
    centrelines
        .par_iter()
        .map(|c| {
            let profile = measure_profile(ct, mask, &c.spline, cfg, &c.path.id)?;
            let taper = match taper_rate(&profile) {
                Ok(t) => Some(t),
                Err(e) => {
                    log::warn!("{}: no taper ({e})", c.path.id);
                    None
                }
            };
            Ok(AirwayMeasurement {
                id: c.path.id.clone(),
                profile,
                taper,
            })
        })
        .collect()
}

/// Full pipeline from a CT volume, its airway mask and labelled distal points.
pub fn measure_airways(
    ct: &CtVolume,
    mask: &BinaryMask,
    distal: &[DistalPoint],
    cfg: &MeasureConfig,
) -> Result<Vec<AirwayMeasurement>> {
    let (_, centrelines) = extract_centrelines(mask, distal)?;
    measure_centrelines(ct, mask, &centrelines, cfg)
}
