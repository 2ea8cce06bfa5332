use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use egonet::synthetic::{write_planted_circles, PlantedCircles};

fn egonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egonet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
kind = "facebook"
walks_per_node = 4
walk_length = 20
dim = 16
embed_epochs = 2
profile_bits = 24
hidden_units = 16
epochs = 10
folds = 3
"#;

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_planted_circles(&dir.path().join("data"), &PlantedCircles::default()).unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

#[test]
fn stats_prints_counts() {
    let (dir, _) = setup();
    let out = egonet(&["stats", "--data", s(&dir.path().join("data"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("egos     |U|  4"), "{text}");
    assert!(text.contains("circles  |Y|  12"), "{text}");
}

#[test]
fn evaluate_before_training_fails() {
    let (dir, cfg) = setup();
    let out = egonet(&[
        "evaluate",
        "--config",
        s(&cfg),
        "--data",
        s(&dir.path().join("data")),
        "--out",
        s(&dir.path().join("run")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run `train` first"), "{err}");
}

#[test]
fn missing_data_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = egonet(&["walks", "--data", s(&dir.path().join("nope")), "--out", s(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn pipeline_end_to_end_is_reproducible() {
    let (dir, cfg) = setup();
    let data = dir.path().join("data");
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = egonet(&[
            "pipeline",
            "--config",
            s(&cfg),
            "--data",
            s(&data),
            "--out",
            s(&out_dir),
            "--seed",
            "11",
            "--deterministic",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = fs::read_to_string(out_dir.join("eval/report.txt")).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), report);
        for v in ["gloglo", "locglo", "locgloglo", "gloglosim", "locglosim", "locgloglosim"] {
            assert_eq!(report.lines().filter(|l| l.starts_with(&format!("{v} "))).count(), 1, "{report}");
        }
        reports.push(report);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn stages_run_one_at_a_time() {
    let (dir, cfg) = setup();
    let run = dir.path().join("run");
    let common = ["--config", s(&cfg), "--out", s(&run)];
    let data = dir.path().join("data");
    for cmd in ["walks", "train-global", "train-local", "features", "train-clf", "evaluate"] {
        let mut args = vec![cmd, "--data", s(&data)];
        args.extend(common);
        let out = egonet(&args);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(dir.path().join("run/eval/report.kv").is_file());
}

#[test]
fn print_config_round_trips() {
    let out = egonet(&["pipeline", "--print-config", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = egonet::PipelineConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.dim, 300);
}
