use std::fs;
use std::path::Path;
use std::process::Command;

fn airtaper(args: &[&str], cwd: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_airtaper"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run airtaper");
    assert!(
        out.status.success(),
        "airtaper {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const Y_SPEC: &str = r#"{
    "centreline": {"kind": "y_split", "branch_angle_deg": 70, "split_fraction": 0.3},
    "r0_mm": 4.5, "taper": -0.02, "length_mm": 50, "margin_mm": [11.5, 11.5, 0]
}"#;

#[test]
fn phantom_to_taper_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), Y_SPEC).unwrap();
    fs::write(d.join("measure.json"), r#"{"half_extent": 8}"#).unwrap();

    airtaper(&["phantom", "make", "--spec", "spec.json", "--out", "ph"], d);
    for f in ["ct.mhd", "ct.raw", "mask.mhd", "mask.raw", "truth.json", "distal.json"] {
        assert!(d.join("ph").join(f).exists(), "{f}");
    }

    airtaper(&["skeleton", "--mask", "ph/mask.mhd", "--distal", "ph/distal.json", "--out", "skel.json"], d);
    let skel: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("skel.json")).unwrap()).unwrap();
    assert_eq!(skel["airways"].as_array().unwrap().len(), 2);

    let measure = |ct: &str, out: &str| {
        airtaper(
            &["measure", "--ct", ct, "--mask", "ph/mask.mhd", "--distal", "ph/distal.json", "--out", out, "--config", "measure.json"],
            d,
        )
    };
    let printed = measure("ph/ct.mhd", "m1");
    assert_eq!(printed.lines().count(), 2);
    let tapers = fs::read_to_string(d.join("m1/tapers.csv")).unwrap();
    assert!(tapers.starts_with("airway_id,T_per_mm,logA,s_err,N\n"));
    assert!(fs::read_to_string(d.join("m1/profiles.csv")).unwrap().lines().count() > 100);

    airtaper(
        &["ctsim", "dose", "--in", "ph/ct.mhd", "--lambda", "2", "--seed", "4", "--angles", "90", "--out", "noisy.mhd"],
        d,
    );
    measure("noisy.mhd", "m2");
    let stats: serde_json::Value =
        serde_json::from_str(&airtaper(&["bench", "stats", "--a", "m1/tapers.csv", "--b", "m2/tapers.csv"], d)).unwrap();
    assert_eq!(stats["n"], 2);
    assert!(stats["agreement"]["bias"].as_f64().unwrap().abs() < 0.005);
}

#[test]
fn rescale_and_noise_index() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("spec.json"),
        r#"{"centreline": {"kind": "straight"}, "r0_mm": 9, "taper": 0, "length_mm": 62}"#,
    )
    .unwrap();
    airtaper(&["phantom", "make", "--spec", "spec.json", "--out", "ph"], d);
    airtaper(
        &["ctsim", "rescale", "--in", "ph/ct.mhd", "--scale", "1.5", "--out", "r.mhd", "--mask", "ph/mask.mhd", "--mask-out", "rm.mhd"],
        d,
    );
    let header = fs::read_to_string(d.join("r.mhd")).unwrap();
    let spacing: Vec<f64> = header
        .lines()
        .find_map(|l| l.strip_prefix("ElementSpacing = "))
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((spacing[0] - 1.05).abs() < 1e-9 && (spacing[2] - 1.5).abs() < 1e-9, "{spacing:?}");
    assert!(d.join("rm.raw").exists());
    let tn: f64 = airtaper(&["ctsim", "tn", "--in", "ph/ct.mhd", "--trachea", "ph/mask.mhd"], d)
        .trim()
        .parse()
        .unwrap();
    assert!(tn.abs() < 1.0, "noise-free phantom gave T_n {tn}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_airtaper"))
        .args(["ctsim", "rescale", "--in", "missing.mhd", "--scale", "0.5", "--out", "x.mhd"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
