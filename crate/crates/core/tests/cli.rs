use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsmajorant::harness::cli::{EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER};
use nsmajorant::harness::io::read_tree;

fn nsmaj(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsmajorant"))
        .args(args)
        .env("NSMAJ_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
[solver]
truncation = 3
horizon = 0.2
[solver.grid]
max_step_fraction = 0.05
[output]
dir = "out"
"#;

const TG: &str = "\n[initial]\nkind = \"taylor_green\"\namplitude = 0.1\n";

#[test]
fn zero_data_exits_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), &format!("{SMALL}\n[initial]\nkind = \"taylor_green\"\namplitude = 0.0\n"));
    let out = nsmaj(&["run", &cfg], d.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(d.path().join("out/certification.json")).unwrap();
    assert!(json.contains("\"majorant_certified\": true"));
}

#[test]
fn taylor_green_run_is_certified_and_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), SMALL);
    for dir in ["a", "b"] {
        let set = format!("output.dir={dir}");
        let out = nsmaj(&["run", &cfg, "--set", &set], d.path());
        assert_eq!(out.status.code(), Some(EXIT_OK));
        assert!(String::from_utf8_lossy(&out.stdout).contains("envelope certified: yes"));
    }
    let a = read_tree(&d.path().join("a")).unwrap();
    assert_eq!(a, read_tree(&d.path().join("b")).unwrap());
    let names: Vec<_> = a.iter().map(|(p, _)| p.to_string_lossy().into_owned()).collect();
    for f in ["certification.json", "majorant.csv", "trajectory/manifest.json", "trajectory/frame_00000.csv"] {
        assert!(names.iter().any(|n| n == f), "{f} in {names:?}");
    }
    let maj = fs::read_to_string(d.path().join("a/majorant.csv")).unwrap();
    assert!(maj.starts_with("t,k1,k2,k3,V\n"));
}

#[test]
fn huge_horizon_reports_non_contraction() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), &format!("{SMALL}{TG}"));
    let out = nsmaj(
        &["run", &cfg, "--set", "initial.amplitude=20.0", "--set", "solver.horizon=2.0"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(EXIT_SOLVER));
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("majorant") && err.contains("contracting"), "{err}");
}

#[test]
fn required_decay_failure_exits_with_check_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), &format!("{SMALL}{TG}"));
    let out = nsmaj(
        &[
            "run",
            &cfg,
            "--set",
            "initial.amplitude=2.0",
            "--set",
            "solver.horizon=0.05",
            "--set",
            "certification.slack=1.0",
            "--set",
            "certification.require_decay=true",
        ],
        d.path(),
    );
    let code = out.status.code();
    assert!(code == Some(EXIT_OK) || code == Some(EXIT_CHECK_FAILED), "{code:?}");
    let json = fs::read_to_string(d.path().join("out/certification.json")).unwrap();
    let decay_ok = json.contains("\"decay_certified\": true");
    let env_ok = json.contains("\"majorant_certified\": true");
    assert_eq!(code == Some(EXIT_OK), decay_ok && env_ok);
}

#[test]
fn config_errors() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_cfg(d.path(), "[solver]\nnu = 0.0\n");
    assert_eq!(nsmaj(&["run", &bad], d.path()).status.code(), Some(EXIT_CONFIG));
    let missing = d.path().join("nope.toml");
    assert_eq!(
        nsmaj(&["run", missing.to_str().unwrap()], d.path()).status.code(),
        Some(EXIT_CONFIG)
    );
    let cfg = write_cfg(d.path(), SMALL);
    assert_eq!(
        nsmaj(&["run", &cfg, "--set", "solver.unknown=1"], d.path()).status.code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(nsmaj(&["frobnicate"], d.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn file_initial_condition() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("v.csv"),
        "component,k1,k2,k3,re,im\n2,1,0,0,0.5,0\n2,-1,0,0,0.5,0\n1,0,0,0,3.0,0\n",
    )
    .unwrap();
    let cfg = write_cfg(
        d.path(),
        &format!("{SMALL}\n[initial]\nkind = \"file\"\npath = \"v.csv\"\n"),
    );
    let out = nsmaj(&["run", &cfg], d.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(d.path().join("v.csv"), "component,k1,k2,k3,re,im\n1,1,0,0,0.5,0\n1,-1,0,0,0.5,0\n").unwrap();
    assert_eq!(nsmaj(&["run", &cfg], d.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn sweep_probe_and_calibration_subcommands() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        d.path(),
        r#"
[solver]
truncation = 2
[sweep]
amplitudes = [1.0, 4.0]
t_max = 1.0
solver_horizon = true
[sweep.bracket]
rel_width = 0.05
[sweep.bracket.grid]
max_step_fraction = 0.05
[kernel]
truncation = 3
pairs = 10
[output]
dir = "x"
"#,
    );
    let out = nsmaj(&["sweep", &cfg], d.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let sweep = fs::read_to_string(d.path().join("x/sweep.json")).unwrap();
    assert!(sweep.contains("\"T_hi\""));
    assert!(d.path().join("x/singular_set.json").is_file());
    let out = nsmaj(&["calibrate-c", &cfg, "--set", "output.dir=c"], d.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&out.stdout).contains("c_cal"));
    let out = nsmaj(&["probe-kernel", &cfg, "--set", "output.dir=k"], d.path());
    assert!(d.path().join("k/kernel_probe.json").is_file());
    assert!(out.status.code() == Some(EXIT_OK) || out.status.code() == Some(EXIT_CHECK_FAILED));
}

#[test]
fn output_root_flag_beats_environment() {
    let d = tempfile::tempdir().unwrap();
    let other = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), SMALL);
    let out = nsmaj(&["run", &cfg, "--output-root", other.path().to_str().unwrap()], d.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(other.path().join("out/run.json").is_file());
    assert!(!d.path().join("out").exists());
}
