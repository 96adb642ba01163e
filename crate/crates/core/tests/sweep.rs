use airway_taper::bench::{
    config_hash, manifest, report_rows, run_dose_sweep, run_scale_sweep, write_outputs, write_report_csv, Metric,
    SweepConfig,
};
use airway_taper::lumen::MeasureConfig;
use airway_taper::phantom::PhantomSpec;

fn tiny_config() -> SweepConfig {
    let phantom = |r0, t| PhantomSpec {
        margin_mm: [9.0, 9.0, 0.0],
        ..PhantomSpec::straight(r0, t, 24.0)
    };
    SweepConfig {
        seed: 1,
        phantoms: vec![phantom(4.0, -0.02), phantom(4.5, -0.01)],
        lambdas: vec![1.0, 4.0],
        scales: vec![1.3],
        angles: Some(90),
        measure: MeasureConfig {
            half_extent: 6.0,
            ..MeasureConfig::default()
        },
        ..serde_json::from_str(r#"{"seed": 1, "phantoms": []}"#).unwrap()
    }
}

#[test]
fn config_defaults_fill_in() {
    let cfg: SweepConfig = serde_json::from_str(r#"{"seed": 1, "phantoms": []}"#).unwrap();
    assert_eq!(cfg.lambdas.len(), 10);
    assert_eq!(cfg.scales.len(), 10);
    assert!((cfg.scales[4] - 1.5).abs() < 1e-12);
    assert_eq!(cfg.angles, None);
}

#[test]
fn dose_sweep_rows_and_manifest() {
    let cfg = tiny_config();
    let report = run_dose_sweep(&cfg).unwrap();
    assert_eq!(report.parameters.len(), 2);
    for p in &report.parameters {
        assert_eq!(p.taper.len(), 2, "{:?}", p.failures);
        assert!(p.failures.is_empty());
        assert!(!p.area.is_empty());
    }
    // More noise, more spread.
    let sd = |i: usize| report.parameters[i].agreement(Metric::Taper).unwrap().sd;
    assert!(sd(1) > sd(0));

    let rows = report_rows(&report);
    assert_eq!(rows.len(), 2 * 3);
    let mut csv = Vec::new();
    write_report_csv(&report, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("lambda,metric,n,mean,sd,lower,upper,r,failures\n"));
    assert_eq!(text.lines().count(), 7);

    let m = manifest(&report, &cfg).unwrap();
    assert_eq!(m.kind, "lambda");
    assert_eq!(m.projection_angles, 90);
    assert_eq!(m.config_sha256, config_hash(&cfg).unwrap());
    assert_eq!(m.config_sha256.len(), 64);
}

#[test]
fn scale_sweep_writes_outputs() {
    let cfg = tiny_config();
    let report = run_scale_sweep(&cfg).unwrap();
    assert_eq!(report.parameters.len(), 1);
    let p = &report.parameters[0];
    assert_eq!(p.arclength.len(), 2, "{:?}", p.failures);
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&report, &cfg, dir.path()).unwrap();
    assert!(written.iter().any(|f| f.ends_with("report.csv")));
    assert!(written.iter().any(|f| f.ends_with("run-manifest.json")));
    assert!(written.iter().any(|f| f.extension().is_some_and(|e| e == "svg")));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("scale,"));
    assert!(csv.contains(",arclength,"));
}

#[test]
fn unmeasurable_phantom_is_recorded_not_fatal() {
    let mut cfg = tiny_config();
    cfg.lambdas = vec![1.0];
    // A tube thinner than the in-plane voxel pitch cannot be built.
    cfg.phantoms.push(PhantomSpec::straight(0.3, 0.0, 24.0));
    let report = run_dose_sweep(&cfg).unwrap();
    let p = &report.parameters[0];
    assert_eq!(p.taper.len(), 2);
    assert!(!p.failures.is_empty());
    assert!(report_rows(&report).iter().all(|r| r.failures == p.failures.len()));
}

#[test]
fn rejects_empty_or_shrinking_configs() {
    let mut cfg = tiny_config();
    cfg.scales = vec![0.8];
    assert!(run_scale_sweep(&cfg).is_err());
    cfg.phantoms.clear();
    assert!(run_dose_sweep(&cfg).is_err());
}
