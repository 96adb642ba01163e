//! Taper rate: least-squares slope of log area against arclength.

use std::io::{BufRead, Write};

use crate::lumen::LumenProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TaperResult {
    pub airway_id: String,
    /// Slope of ln(area) per mm of arclength.
    pub taper: f64,
    /// Intercept, natural log of mm².
    pub log_a: f64,
    /// Standard error of estimate with denominator N.
    pub s_err: f64,
    pub n: usize,
    /// Fitted log areas, one per regression station.
    pub fitted: Vec<f64>,
}

/// Fit `ln(area) = T · arclength + log A` over the non-missing stations.
pub fn taper_rate(p: &LumenProfile) -> Result<TaperResult> {
    let pts: Vec<(f64, f64)> = p.valid().collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::TooFewStations(n));
    }
    if let Some(idx) = pts.iter().position(|q| !(q.1 > 0.0)) {
        return Err(Error::NonPositiveArea(pts[idx].1, idx));
    }
    let nf = n as f64;
    let xm = pts.iter().map(|q| q.0).sum::<f64>() / nf;
    let ym = pts.iter().map(|q| q.1.ln()).sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, a) in &pts {
        let dx = x - xm;
        sxy += dx * (a.ln() - ym);
        sxx += dx * dx;
    }
    if sxx <= 0.0 {
        return Err(Error::TooFewStations(1));
    }
    let taper = sxy / sxx;
    let log_a = ym - taper * xm;
    let fitted: Vec<f64> = pts.iter().map(|q| taper * q.0 + log_a).collect();
    let sse: f64 = pts.iter().zip(&fitted).map(|(q, f)| (f - q.1.ln()).powi(2)).sum();
    Ok(TaperResult {
        airway_id: p.airway_id.clone(),
        taper,
        log_a,
        s_err: (sse / nf).sqrt(),
        n,
        fitted,
    })
}

/// Mark stations whose arclength falls inside any `[lo, hi]` interval as
/// missing. Intervals outside the profile's range are reported and ignored.
pub fn exclude_intervals(p: &LumenProfile, intervals: &[(f64, f64)]) -> LumenProfile {
    let lo = p.stations.iter().map(|s| s.arclength).fold(f64::INFINITY, f64::min);
    let hi = p.stations.iter().map(|s| s.arclength).fold(f64::NEG_INFINITY, f64::max);
    for &(a, b) in intervals {
        if b < lo || a > hi || a > b {
            log::warn!("{}: exclusion interval [{a}, {b}] lies outside the profile [{lo}, {hi}]", p.airway_id);
        }
    }
    let mut out = p.clone();
    for s in &mut out.stations {
        if intervals.iter().any(|&(a, b)| s.arclength >= a && s.arclength <= b) {
            s.missing = true;
            if !s.flags.iter().any(|f| f == "excluded") {
                s.flags.push("excluded".into());
            }
        }
    }
    out
}

/// Write taper results as CSV: airway_id, T_per_mm, logA, s_err, N.
pub fn write_results_csv<W: Write>(results: &[TaperResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "airway_id,T_per_mm,logA,s_err,N")?;
    for r in results {
        writeln!(w, "{},{:.8},{:.8},{:.8},{}", r.airway_id, r.taper, r.log_a, r.s_err, r.n)?;
    }
    Ok(())
}

/// Read the CSV written by [`write_results_csv`]. Fitted values are not
/// stored and come back empty.
pub fn read_results_csv<R: BufRead>(r: R) -> Result<Vec<TaperResult>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<taper csv>", e))?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::MalformedHeader(format!("taper csv line {}: `{line}`", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        out.push(TaperResult {
            airway_id: f[0].to_string(),
            taper: num(f[1])?,
            log_a: num(f[2])?,
            s_err: num(f[3])?,
            n: f[4].trim().parse().map_err(|_| bad())?,
            fitted: Vec::new(),
        });
    }
    Ok(out)
}
