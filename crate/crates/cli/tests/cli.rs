use std::path::Path;
use std::process::Command;

fn asocem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asocem"))
}

fn write_spec(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("spec{seed}.json"));
    let spec = format!(
        r#"{{"height": 200, "width": 200, "geometry": {{"type": "disk", "center": [0.5, 0.5], "radius": 0.25}},
            "region0": {{"mean": 0.0, "sd": 3.0}}, "region1": {{"mean": 0.0, "sd": 1.0}}, "seed": {seed}}}"#
    );
    std::fs::write(&path, spec).unwrap();
    path
}

fn synth(dir: &Path, name: &str, seed: u64, gt_ext: &str) {
    std::fs::create_dir_all(dir.join("in")).unwrap();
    std::fs::create_dir_all(dir.join("gt")).unwrap();
    let spec = write_spec(dir, seed);
    let status = asocem()
        .args(["synth", "--spec"])
        .arg(&spec)
        .arg("--out-mrc")
        .arg(dir.join("in").join(format!("{name}.mrc")))
        .arg("--out-gt")
        .arg(dir.join("gt").join(format!("{name}.{gt_ext}")))
        .status()
        .unwrap();
    assert!(status.success());
}

fn segment(dir: &Path, extra: &[&str]) -> std::process::Output {
    asocem()
        .args(["segment", "--input"])
        .arg(dir.join("in"))
        .arg("--output")
        .arg(dir.join("out"))
        .args(["--working-size", "200", "--block-edge", "10", "--threads", "2"])
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn synth_segment_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 1, "png");
    synth(dir.path(), "b", 2, "mrc");
    let out = segment(dir.path(), &["--particle-size", "10", "--png-overlay"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["a.mrc", "b.mrc", "a.json", "b.json", "overlays/a.png", "overlays/b.png"] {
        assert!(dir.path().join("out").join(name).is_file(), "missing {name}");
    }
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/a.json")).unwrap()).unwrap();
    assert_eq!(sidecar["status"], "contamination_found");
    assert_eq!(sidecar["params"]["particle_size_px"], 10);
    assert!(sidecar["outer_iters"].as_u64().unwrap() >= 1);
    let fraction = sidecar["contamination_fraction"].as_f64().unwrap();
    assert!((0.1..0.3).contains(&fraction), "fraction {fraction}");

    std::fs::remove_dir_all(dir.path().join("out/overlays")).unwrap();
    let report = dir.path().join("report.json");
    let status = asocem()
        .args(["eval", "--pred"])
        .arg(dir.path().join("out"))
        .arg("--gt")
        .arg(dir.path().join("gt"))
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["per_micrograph"].as_array().unwrap().len(), 2);
    assert!(report["mean_sensitivity"].as_f64().unwrap() > 0.9);
    assert!(report["mean_specificity"].as_f64().unwrap() > 0.9);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 3, "png");
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"particle_size_px": 12, "alpha": 5.0, "area_factor": 2.0}"#).unwrap();
    let out = segment(dir.path(), &["--config", config.to_str().unwrap(), "--alpha", "0.2", "--mask-format", "png"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/a.json")).unwrap()).unwrap();
    assert_eq!(sidecar["params"]["alpha"], 0.2);
    assert_eq!(sidecar["params"]["area_factor"], 2.0);
    assert_eq!(sidecar["params"]["particle_size_px"], 12);
    assert!(dir.path().join("out/a.png").is_file());
}

#[test]
fn missing_particle_size_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 4, "png");
    let out = segment(dir.path(), &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("particle size"));
}

#[test]
fn unpaired_masks_make_eval_fail() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 5, "png");
    synth(dir.path(), "b", 6, "png");
    std::fs::create_dir_all(dir.path().join("pred")).unwrap();
    std::fs::copy(dir.path().join("gt/a.png"), dir.path().join("pred/a.png")).unwrap();
    let report = dir.path().join("report.csv");
    let status = asocem()
        .args(["eval", "--pred"])
        .arg(dir.path().join("pred"))
        .arg("--gt")
        .arg(dir.path().join("gt"))
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let csv = std::fs::read_to_string(report).unwrap();
    assert!(csv.starts_with("name,sensitivity,specificity"));
    assert!(csv.contains("a,1,1") || csv.contains("a,1.0,1.0"), "{csv}");
}
