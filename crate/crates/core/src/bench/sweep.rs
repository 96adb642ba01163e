//! Dose and voxel-size reproducibility sweeps over a phantom set.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{bland_altman, AgreementStats};
use crate::ctsim::{
    default_angles, measure_tn, round_trip, rescale_mask, rescale_volume, rescale_voxel, simulate_dose, snap_to_mask,
    uniform_angles, NoiseLevel,
};
use crate::lumen::{LumenProfile, MeasureConfig};
use crate::phantom::{make_phantom, PhantomSpec};
use crate::pipeline::{extract_centrelines, measure_centrelines, AirwayCentreline, AirwayMeasurement};
use crate::skeleton::DistalPoint;
use crate::volio::{BinaryMask, CtVolume};
use crate::{Error, Result};

fn default_lambdas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.5).collect()
}

fn default_scales() -> Vec<f64> {
    (11..=20).map(|i| i as f64 / 10.0).collect()
}

/// What the dose sweep compares noisy measurements against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoseReference {
    /// Projection and reconstruction without noise, so differences reflect
    /// the added noise alone.
    #[default]
    RoundTrip,
    /// The unperturbed phantom.
    Original,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("sweep-out")
}

/// Everything a sweep needs; serialized as the run's reproduction recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub phantoms: Vec<PhantomSpec>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Number of equally spaced projection angles. When absent, 0° to 179°
    /// in 0.1° steps.
    #[serde(default)]
    pub angles: Option<usize>,
    #[serde(default)]
    pub dose_reference: DoseReference,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl SweepConfig {
    pub fn projection_angles(&self) -> Vec<f64> {
        match self.angles {
            Some(n) => uniform_angles(n),
            None => default_angles(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Dose,
    Scale,
}

impl SweepKind {
    pub fn parameter_name(self) -> &'static str {
        match self {
            SweepKind::Dose => "lambda",
            SweepKind::Scale => "scale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Taper,
    Area,
    Arclength,
    Tn,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Taper => "taper",
            Metric::Area => "area",
            Metric::Arclength => "arclength",
            Metric::Tn => "tn",
        }
    }
}

/// Paired (original, perturbed) values collected at one parameter value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterResult {
    pub value: f64,
    pub taper: Vec<(f64, f64)>,
    pub area: Vec<(f64, f64)>,
    pub arclength: Vec<(f64, f64)>,
    /// T_n of each perturbed phantom where the trachea core is non-empty.
    pub tn: Vec<f64>,
    pub failures: Vec<String>,
}

impl ParameterResult {
    pub fn pairs(&self, metric: Metric) -> &[(f64, f64)] {
        match metric {
            Metric::Taper => &self.taper,
            Metric::Area => &self.area,
            Metric::Arclength => &self.arclength,
            Metric::Tn => &[],
        }
    }

    /// Agreement of perturbed against original; `None` with fewer than two
    /// pairs.
    pub fn agreement(&self, metric: Metric) -> Option<AgreementStats> {
        let pairs = self.pairs(metric);
        let original: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let perturbed: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        bland_altman(&perturbed, &original).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub seed: u64,
    /// T_n of each reference volume where the trachea core is non-empty.
    pub reference_tn: Vec<f64>,
    pub parameters: Vec<ParameterResult>,
}

impl SweepReport {
    pub fn metrics(&self) -> &'static [Metric] {
        match self.kind {
            SweepKind::Dose => &[Metric::Taper, Metric::Area, Metric::Tn],
            SweepKind::Scale => &[Metric::Taper, Metric::Area, Metric::Arclength],
        }
    }

    pub fn parameter(&self, value: f64) -> Option<&ParameterResult> {
        self.parameters.iter().find(|p| p.value == value)
    }

    pub fn failure_count(&self) -> usize {
        self.parameters.iter().map(|p| p.failures.len()).sum()
    }
}

/// A phantom with its extracted centrelines and baseline measurements.
struct Baseline {
    tn: Option<f64>,
    ct: CtVolume,
    mask: BinaryMask,
    distal: Vec<DistalPoint>,
    centrelines: Vec<AirwayCentreline>,
    measured: Vec<AirwayMeasurement>,
}

fn baseline(spec: &PhantomSpec, cfg: &SweepConfig, kind: SweepKind, angles: &[f64]) -> Result<Baseline> {
    let (ct, mask, truth) = make_phantom(spec)?;
    let distal: Vec<DistalPoint> = truth
        .airways
        .iter()
        .map(|a| DistalPoint {
            id: a.id.clone(),
            voxel: a.distal_voxel,
        })
        .collect();
    let (_, centrelines) = extract_centrelines(&mask, &distal)?;
    let reference = match (kind, cfg.dose_reference) {
        (SweepKind::Dose, DoseReference::RoundTrip) => round_trip(&ct, angles)?,
        _ => ct.clone(),
    };
    let tn = measure_tn(&reference, &mask).ok();
    let measured = measure_centrelines(&reference, &mask, &centrelines, &cfg.measure)?;
    Ok(Baseline {
        tn,
        ct,
        mask,
        distal,
        centrelines,
        measured,
    })
}

/// Per-point seed from the run seed and the grid coordinates.
fn point_seed(seed: u64, phantom: usize, parameter: usize) -> u64 {
    let mut z = seed ^ ((phantom as u64) << 32 | parameter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Default)]
struct Outcome {
    taper: Vec<(f64, f64)>,
    area: Vec<(f64, f64)>,
    arclength: Vec<(f64, f64)>,
    tn: Option<f64>,
    failures: Vec<String>,
}

fn compare(
    label: &str,
    base: &Baseline,
    measured: &[AirwayMeasurement],
    centrelines: &[AirwayCentreline],
    area_pairs: impl Fn(&LumenProfile, &LumenProfile, &AirwayCentreline, &AirwayCentreline) -> Vec<(f64, f64)>,
    out: &mut Outcome,
) {
    for (b, bc) in base.measured.iter().zip(&base.centrelines) {
        let Some((m, mc)) = measured.iter().zip(centrelines).find(|(m, _)| m.id == b.id) else {
            out.failures.push(format!("{label} {}: airway not extracted", b.id));
            continue;
        };
        match (&b.taper, &m.taper) {
            (Some(t0), Some(t1)) => out.taper.push((t0.taper, t1.taper)),
            _ => out.failures.push(format!("{label} {}: taper unavailable", b.id)),
        }
        out.area.extend(area_pairs(&b.profile, &m.profile, bc, mc));
        out.arclength.push((bc.spline.length(), mc.spline.length()));
    }
}

fn same_station_areas(a: &LumenProfile, b: &LumenProfile) -> Vec<(f64, f64)> {
    a.stations
        .iter()
        .zip(&b.stations)
        .filter(|(x, y)| !x.missing && !y.missing)
        .map(|(x, y)| (x.area, y.area))
        .collect()
}

/// Pair stations of two profiles measured on different splines of the same
/// airway. Arclength origins are aligned through the nearest station to
/// each spline's start, and the original area is interpolated between
/// adjacent valid stations.
fn matched_station_areas(
    a: &LumenProfile,
    b: &LumenProfile,
    ac: &AirwayCentreline,
    bc: &AirwayCentreline,
) -> Vec<(f64, f64)> {
    let nearest = |p: &LumenProfile, c: &AirwayCentreline, target: &crate::Vec3| -> Option<f64> {
        p.stations
            .iter()
            .filter_map(|s| c.spline.eval(s.t).ok().map(|q| ((q - target).norm(), s.arclength)))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|x| x.1)
    };
    let (Ok(a0), Ok(b0)) = (ac.spline.eval(0.0), bc.spline.eval(0.0)) else {
        return Vec::new();
    };
    let (Some(b_in_a), Some(a_in_b)) = (nearest(a, ac, &b0), nearest(b, bc, &a0)) else {
        return Vec::new();
    };
    // Arclength on `a` of a point at arclength s on `b`.
    let offset = b_in_a - a_in_b;
    let valid: Vec<(f64, f64)> = a.valid().collect();
    let max_gap = 4.0 * ac.spline.length() / a.stations.len().max(1) as f64;
    b.valid()
        .filter_map(|(s, area)| {
            let sa = s + offset;
            let i = valid.partition_point(|v| v.0 <= sa);
            if i == 0 || i == valid.len() {
                return None;
            }
            let (lo, hi) = (valid[i - 1], valid[i]);
            if hi.0 - lo.0 > max_gap {
                return None;
            }
            let w = (sa - lo.0) / (hi.0 - lo.0);
            Some((lo.1 + w * (hi.1 - lo.1), area))
        })
        .collect()
}

fn dose_point(cfg: &SweepConfig, angles: &[f64], base: &Baseline, p: usize, l: usize) -> Outcome {
    let lambda = cfg.lambdas[l];
    let label = format!("phantom {p} lambda {lambda}");
    let mut out = Outcome::default();
    let noisy = match simulate_dose(&base.ct, NoiseLevel(lambda), point_seed(cfg.seed, p, l), angles) {
        Ok(v) => v,
        Err(e) => {
            out.failures.push(format!("{label}: {e}"));
            return out;
        }
    };
    out.tn = measure_tn(&noisy, &base.mask).ok();
    match measure_centrelines(&noisy, &base.mask, &base.centrelines, &cfg.measure) {
        Ok(m) => compare(
            &label,
            base,
            &m,
            &base.centrelines,
            |a, b, _, _| same_station_areas(a, b),
            &mut out,
        ),
        Err(e) => out.failures.push(format!("{label}: {e}")),
    }
    out
}

fn scale_point(cfg: &SweepConfig, base: &Baseline, p: usize, s: usize) -> Outcome {
    let scale = cfg.scales[s];
    let label = format!("phantom {p} scale {scale}");
    let mut out = Outcome::default();
    let run = || -> Result<(Vec<AirwayCentreline>, Vec<AirwayMeasurement>)> {
        let ct = rescale_volume(&base.ct, scale)?;
        let mask = rescale_mask(&base.mask, scale)?;
        let distal = base
            .distal
            .iter()
            .map(|d| {
                let v = rescale_voxel(d.voxel, scale, mask.dims());
                snap_to_mask(&mask, v, 3)
                    .map(|voxel| DistalPoint {
                        id: d.id.clone(),
                        voxel,
                    })
                    .ok_or(Error::AnchorOutsideMask(v))
            })
            .collect::<Result<Vec<_>>>()?;
        let (_, centrelines) = extract_centrelines(&mask, &distal)?;
        let measured = measure_centrelines(&ct, &mask, &centrelines, &cfg.measure)?;
        Ok((centrelines, measured))
    };
    match run() {
        Ok((c, m)) => compare(&label, base, &m, &c, matched_station_areas, &mut out),
        Err(e) => out.failures.push(format!("{label}: {e}")),
    }
    out
}

fn run_sweep(cfg: &SweepConfig, kind: SweepKind) -> Result<SweepReport> {
    let values = match kind {
        SweepKind::Dose => &cfg.lambdas,
        SweepKind::Scale => &cfg.scales,
    };
    if cfg.phantoms.is_empty() || values.is_empty() {
        return Err(Error::InvalidSimulation("sweep needs phantoms and parameter values".into()));
    }
    if kind == SweepKind::Scale && values.iter().any(|&s| !(s >= 1.0)) {
        return Err(Error::InvalidSimulation("scales must be >= 1".into()));
    }
    let angles = cfg.projection_angles();
    let baselines: Vec<std::result::Result<Baseline, String>> = cfg
        .phantoms
        .par_iter()
        .map(|spec| baseline(spec, cfg, kind, &angles).map_err(|e| e.to_string()))
        .collect();
    let grid: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..cfg.phantoms.len()).map(move |p| (v, p)))
        .collect();
    let outcomes: Vec<Outcome> = grid
        .par_iter()
        .map(|&(v, p)| match &baselines[p] {
            Err(e) => Outcome {
                failures: vec![format!("phantom {p}: baseline failed: {e}")],
                ..Outcome::default()
            },
            Ok(base) => match kind {
                SweepKind::Dose => dose_point(cfg, &angles, base, p, v),
                SweepKind::Scale => scale_point(cfg, base, p, v),
            },
        })
        .collect();
    let mut parameters: Vec<ParameterResult> = values
        .iter()
        .map(|&value| ParameterResult {
            value,
            ..ParameterResult::default()
        })
        .collect();
    for (&(v, _), o) in grid.iter().zip(outcomes) {
        let r = &mut parameters[v];
        r.taper.extend(o.taper);
        r.area.extend(o.area);
        r.arclength.extend(o.arclength);
        r.tn.extend(o.tn);
        r.failures.extend(o.failures);
    }
    for r in &parameters {
        for f in &r.failures {
            log::warn!("{f}");
        }
    }
    Ok(SweepReport {
        kind,
        seed: cfg.seed,
        reference_tn: baselines.iter().filter_map(|b| b.as_ref().ok().and_then(|b| b.tn)).collect(),
        parameters,
    })
}

/// Add sinogram noise at each λ and re-measure with the original mask and
/// centrelines.
pub fn run_dose_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(cfg, SweepKind::Dose)
}

/// Resample each phantom to each coarser grid and rerun the whole
/// pipeline, mapping distal points onto the new mask.
pub fn run_scale_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(cfg, SweepKind::Scale)
}
