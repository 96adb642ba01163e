//! Agreement statistics, reproducibility sweeps and their reports.

mod compare;
mod report;
mod stats;
mod svg;
mod sweep;

pub use compare::{compare_tapers, TaperComparison};
pub use report::{config_hash, manifest, report_rows, write_outputs, write_report_csv, ReportRow, RunManifest};
pub use stats::{
    bland_altman, icc, midranks, pearson, sample_sd, spearman, wilcoxon_ranksum, AgreementStats, Icc, EXACT_MAX_N,
};
pub use svg::{Plot, Series};
pub use sweep::{DoseReference, run_dose_sweep, run_scale_sweep, Metric, ParameterResult, SweepConfig, SweepKind, SweepReport};
