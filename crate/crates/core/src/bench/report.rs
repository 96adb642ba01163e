//! Sweep outputs: report.csv, SVG plots and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::stats::sample_sd;
use super::svg::{Plot, Series};
use super::sweep::{Metric, SweepConfig, SweepReport};
use crate::{Error, Result};

/// One report line: a metric summarized at one parameter value. For the
/// agreement metrics `mean` is the bias of perturbed minus original and
/// `lower`/`upper` are the 95% limits; for `tn` they are the mean and
/// sample std of T_n over phantoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub parameter: f64,
    pub metric: Metric,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub r: Option<f64>,
    pub failures: usize,
}

pub fn report_rows(report: &SweepReport) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for p in &report.parameters {
        for &metric in report.metrics() {
            let row = if metric == Metric::Tn {
                let n = p.tn.len();
                let mean = (n > 0).then(|| p.tn.iter().sum::<f64>() / n as f64);
                ReportRow {
                    parameter: p.value,
                    metric,
                    n,
                    mean,
                    sd: (n > 1).then(|| sample_sd(&p.tn)),
                    lower: None,
                    upper: None,
                    r: None,
                    failures: p.failures.len(),
                }
            } else {
                let s = p.agreement(metric);
                ReportRow {
                    parameter: p.value,
                    metric,
                    n: p.pairs(metric).len(),
                    mean: s.map(|s| s.bias),
                    sd: s.map(|s| s.sd),
                    lower: s.map(|s| s.lower),
                    upper: s.map(|s| s.upper),
                    r: s.filter(|s| !s.r_degenerate).map(|s| s.r),
                    failures: p.failures.len(),
                }
            };
            rows.push(row);
        }
    }
    rows
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(report: &SweepReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{},metric,n,mean,sd,lower,upper,r,failures", report.kind.parameter_name())?;
    for row in report_rows(report) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            row.parameter,
            row.metric.name(),
            row.n,
            cell(row.mean),
            cell(row.sd),
            cell(row.lower),
            cell(row.upper),
            cell(row.r),
            row.failures
        )?;
    }
    Ok(())
}

/// SHA-256 of the config's canonical JSON, hex encoded.
pub fn config_hash(cfg: &SweepConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub seed: u64,
    pub crate_version: String,
    pub config_sha256: String,
    pub parameters: Vec<f64>,
    pub phantoms: usize,
    pub projection_angles: usize,
    pub reference_tn: Vec<f64>,
    pub failures: Vec<String>,
}

pub fn manifest(report: &SweepReport, cfg: &SweepConfig) -> Result<RunManifest> {
    Ok(RunManifest {
        kind: report.kind.parameter_name().to_string(),
        seed: report.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(cfg)?,
        parameters: report.parameters.iter().map(|p| p.value).collect(),
        phantoms: cfg.phantoms.len(),
        projection_angles: cfg.projection_angles().len(),
        reference_tn: report.reference_tn.clone(),
        failures: report.parameters.iter().flat_map(|p| p.failures.iter().cloned()).collect(),
    })
}

fn plots(report: &SweepReport) -> Vec<(String, Plot)> {
    let pname = report.kind.parameter_name();
    let mut out = Vec::new();
    for &metric in report.metrics() {
        let rows: Vec<ReportRow> = report_rows(report).into_iter().filter(|r| r.metric == metric).collect();
        let series = Series {
            label: if metric == Metric::Tn { "mean T_n".into() } else { "bias, 95% limits".into() },
            points: rows.iter().map(|r| (r.parameter, r.mean.unwrap_or(f64::NAN))).collect(),
            whiskers: rows
                .iter()
                .map(|r| match (r.lower, r.upper, r.mean, r.sd) {
                    (Some(lo), Some(hi), _, _) => (lo, hi),
                    (None, None, Some(m), Some(s)) => (m - s, m + s),
                    _ => (f64::NAN, f64::NAN),
                })
                .collect(),
        };
        out.push((
            format!("{}_trend.svg", metric.name()),
            Plot {
                title: format!("{} vs {pname}", metric.name()),
                x_label: pname.into(),
                y_label: if metric == Metric::Tn { "T_n (HU)".into() } else { "perturbed - original".into() },
                series: vec![series],
                hlines: if metric == Metric::Tn { vec![] } else { vec![0.0] },
            },
        ));
    }
    for p in &report.parameters {
        if p.taper.is_empty() {
            continue;
        }
        let points: Vec<(f64, f64)> = p.taper.iter().map(|&(a, b)| (0.5 * (a + b), b - a)).collect();
        let mut hlines = vec![0.0];
        if let Some(s) = p.agreement(Metric::Taper) {
            hlines.extend([s.bias, s.lower, s.upper]);
        }
        out.push((
            format!("taper_bland_altman_{pname}_{}.svg", p.value),
            Plot {
                title: format!("taper agreement at {pname} = {}", p.value),
                x_label: "mean taper (1/mm)".into(),
                y_label: "perturbed - original (1/mm)".into(),
                series: vec![Series {
                    label: format!("{} airways", points.len()),
                    points,
                    whiskers: Vec::new(),
                }],
                hlines,
            },
        ));
    }
    out
}

/// Write report.csv, plots/*.svg and run-manifest.json under `dir`.
pub fn write_outputs(report: &SweepReport, cfg: &SweepConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let plot_dir = dir.join("plots");
    fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
    let mut written = Vec::new();

    let csv_path = dir.join("report.csv");
    let mut csv = Vec::new();
    write_report_csv(report, &mut csv).map_err(|e| Error::io(&csv_path, e))?;
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    written.push(csv_path);

    for (name, plot) in plots(report) {
        let path = plot_dir.join(name);
        fs::write(&path, plot.render()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let manifest_path = dir.join("run-manifest.json");
    let json = serde_json::to_string_pretty(&manifest(report, cfg)?)?;
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    written.push(manifest_path);
    Ok(written)
}
