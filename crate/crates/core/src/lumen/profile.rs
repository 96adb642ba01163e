//! Area measurements at regular stations along a spline.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cast_rays, fit_ellipse, fwhm_boundary, LOW_CONTRAST_HU};
use crate::centregeom::{plane_basis, sample_plane, AirwaySpline, DEFAULT_HALF_EXTENT_MM, PARAM_STEP};
use crate::volio::{BinaryMask, CtVolume};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    pub n_rays: usize,
    pub min_rays: usize,
    pub param_step: f64,
    pub half_extent: f64,
    /// The plane grows to this multiple of the local lumen radius.
    pub extent_factor: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            n_rays: 50,
            min_rays: 25,
            param_step: PARAM_STEP,
            half_extent: DEFAULT_HALF_EXTENT_MM,
            extent_factor: 1.5,
        }
    }
}

/// One measurement station along an airway.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub t: f64,
    pub arclength: f64,
    /// Ellipse area in mm², NaN when the station could not be measured.
    pub area: f64,
    pub n_rays: usize,
    pub missing: bool,
    pub flags: Vec<String>,
}

impl Station {
    fn failed(t: f64, arclength: f64, n_rays: usize, flag: &str) -> Self {
        Self {
            t,
            arclength,
            area: f64::NAN,
            n_rays,
            missing: true,
            flags: vec![flag.to_string()],
        }
    }
}

/// Arclength and area pairs for one airway.
#[derive(Debug, Clone, PartialEq)]
pub struct LumenProfile {
    pub airway_id: String,
    pub stations: Vec<Station>,
}

impl LumenProfile {
    /// `(arclength, area)` of the stations that are not missing.
    pub fn valid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.stations.iter().filter(|s| !s.missing).map(|s| (s.arclength, s.area))
    }

    pub fn n_valid(&self) -> usize {
        self.valid().count()
    }
}

fn measure_station(
    ct: &CtVolume,
    mask: &BinaryMask,
    sp: &AirwaySpline,
    cfg: &MeasureConfig,
    t: f64,
) -> Result<Station> {
    let arclength = sp.arc_length(t)?;
    let origin = sp.eval(t)?;
    let q = sp.tangent(t)?;
    let (v1, v2) = plane_basis(&q);
    let mut extent = cfg.half_extent;
    // Grow the plane until every ray leaves the lumen with room to spare.
    let (ct_plane, mask_plane) = loop {
        let Ok(mask_plane) = sample_plane(mask, &origin, &v1, &v2, extent) else {
            return Ok(Station::failed(t, arclength, 0, "out_of_bounds"));
        };
        if mask_plane.centre_value() < 0.5 {
            return Ok(Station::failed(t, arclength, 0, "centre_outside"));
        }
        let probe = cast_rays(&mask_plane, &mask_plane, cfg.n_rays)?;
        let radius = probe
            .iter()
            .map(|r| r.rb.iter().position(|&v| v < 0.5).map_or(f64::INFINITY, |i| i as f64 * r.step))
            .fold(0.0, f64::max);
        let wanted = cfg.extent_factor * radius;
        if wanted <= extent {
            let Ok(ct_plane) = sample_plane(ct, &origin, &v1, &v2, extent) else {
                return Ok(Station::failed(t, arclength, 0, "out_of_bounds"));
            };
            break (ct_plane, mask_plane);
        }
        extent = if wanted.is_finite() { wanted } else { 2.0 * extent };
    };
    let rays = cast_rays(&ct_plane, &mask_plane, cfg.n_rays)?;
    let mut points = Vec::with_capacity(rays.len());
    let mut low_contrast = false;
    for ray in &rays {
        if let Ok(hit) = fwhm_boundary(ray) {
            let (c, s) = ray.direction();
            points.push([hit.distance * c, hit.distance * s]);
            low_contrast |= hit.contrast < LOW_CONTRAST_HU;
        }
    }
    if points.len() < cfg.min_rays {
        return Ok(Station::failed(t, arclength, points.len(), "few_rays"));
    }
    let Ok(ellipse) = fit_ellipse(&points) else {
        return Ok(Station::failed(t, arclength, points.len(), "fit_failed"));
    };
    Ok(Station {
        t,
        arclength,
        area: ellipse.area(),
        n_rays: points.len(),
        missing: false,
        flags: if low_contrast { vec!["low_contrast".into()] } else { Vec::new() },
    })
}

/// Measure the lumen area at every station `t = 0, step, 2·step, …` of the
/// spline. Stations that cannot be measured are kept and marked missing.
pub fn measure_profile(
    ct: &CtVolume,
    mask: &BinaryMask,
    sp: &AirwaySpline,
    cfg: &MeasureConfig,
    airway_id: &str,
) -> Result<LumenProfile> {
    if !ct.same_grid(mask) {
        return Err(Error::InvalidVolume("CT and mask grids differ".into()));
    }
    let stations = sp
        .stations(cfg.param_step)
        .into_par_iter()
        .map(|t| measure_station(ct, mask, sp, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(LumenProfile {
        airway_id: airway_id.to_string(),
        stations,
    })
}

const HEADER: &str = "airway_id,t,arclength_mm,area_mm2,n_rays,flags";

/// Write profiles as CSV, one row per station.
pub fn write_profiles_csv<W: Write>(profiles: &[LumenProfile], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for p in profiles {
        for s in &p.stations {
            let area = if s.area.is_finite() { format!("{:.6}", s.area) } else { String::new() };
            let mut flags = s.flags.clone();
            if s.missing && !flags.iter().any(|f| f != "low_contrast") {
                flags.push("missing".into());
            }
            writeln!(
                w,
                "{},{:.4},{:.6},{},{},{}",
                p.airway_id,
                s.t,
                s.arclength,
                area,
                s.n_rays,
                flags.join("|")
            )?;
        }
    }
    Ok(())
}

/// Read profiles written by [`write_profiles_csv`].
pub fn read_profiles_csv<R: BufRead>(r: R) -> Result<Vec<LumenProfile>> {
    let bad = |line: &str| Error::MalformedHeader(format!("bad profile row `{line}`"));
    let mut out: Vec<LumenProfile> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<profile csv>", e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(&line));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&line));
        let flags: Vec<String> = f[5].split('|').filter(|s| !s.is_empty()).map(String::from).collect();
        let area = if f[3].is_empty() { f64::NAN } else { num(f[3])? };
        let missing = !area.is_finite() || flags.iter().any(|x| x != "low_contrast");
        let station = Station {
            t: num(f[1])?,
            arclength: num(f[2])?,
            area,
            n_rays: f[4].parse().map_err(|_| bad(&line))?,
            missing,
            flags: flags.into_iter().filter(|x| x != "missing").collect(),
        };
        match out.last_mut() {
            Some(p) if p.airway_id == f[0] => p.stations.push(station),
            _ => out.push(LumenProfile {
                airway_id: f[0].to_string(),
                stations: vec![station],
            }),
        }
    }
    Ok(out)
}
