use optomech_squeeze::sweep::{SweepResult, Status};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn omsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omsq"))
        .args(args)
        .env_remove("OMSQ_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gain_sweep_reproduces_the_optimum() {
    let cfg = preset("fig3.cfg");
    let out = omsq(&["sweep-gain", "--config", &cfg, "--theta", "0.19635", "--points", "50"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = SweepResult::from_csv(&stdout(&out)).unwrap();
    assert_eq!(r.rows.len(), 50);
    let best = r.argmin(1).unwrap();
    let v = best.outputs.as_ref().unwrap()[1];
    assert!((v - 0.253).abs() <= 0.003, "{v}");
    assert_eq!(best.value, 0.49);
    let first = r.rows[0].outputs.as_ref().unwrap()[1];
    assert!((first - 0.5).abs() < 1e-9);
}

#[test]
fn outputs_are_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = preset("fig3.cfg");
    let base = ["sweep-gain", "--config", cfg.as_str(), "--points", "8", "--to", "0.6", "--no-timestamp", "-o"];
    let mut args_a = base.to_vec();
    args_a.push(a.to_str().unwrap());
    let mut args_b = base.to_vec();
    args_b.extend([b.to_str().unwrap(), "--threads", "1"]);
    assert!(omsq(&args_a).status.success());
    assert!(omsq(&args_b).status.success());
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let r = SweepResult::from_csv(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert_eq!(r.rows.last().unwrap().status, Status::Unstable);
    assert!(r.rows.last().unwrap().outputs.is_none());
}

#[test]
fn timestamp_line_is_present_by_default() {
    let out = omsq(&["cavity-sweep", "--points", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().any(|l| l.starts_with("# timestamp = ")));
}

#[test]
fn jsonl_round_trip() {
    let out = omsq(&["sweep-temperature", "--gain", "0.46", "--theta", "pi/16", "--points", "3", "--format", "jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = SweepResult::from_jsonl(&stdout(&out)).unwrap();
    assert_eq!(r.header.parameter, "temperature");
    assert_eq!(r.rows.len(), 3);
    let v: Vec<f64> = r.rows.iter().map(|row| row.outputs.as_ref().unwrap()[1]).collect();
    assert!(v[0] < v[1] && v[1] < v[2]);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_omsq"))
        .args(["detect", "--config", &preset("fig7.cfg"), "--points", "5"])
        .env("OMSQ_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("detect.csv")).unwrap();
    let width: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# band_half_width = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((width - 0.0187).abs() < 0.0005);
}

#[test]
fn every_subcommand_runs_on_a_small_grid() {
    let runs: &[&[&str]] = &[
        &["sweep-cooperativity", "--config", &preset("fig4.cfg"), "--points", "3"],
        &["spectrum", "--gain", "0.3", "--points", "5", "--from", "-2"],
        &["detect-map", "--config", &preset("fig8.cfg"), "--points", "4", "--phi-points", "3"],
        &["stability-map", "--points", "3", "--c-points", "3"],
        &["analytic", "--points", "3", "--eta", "800"],
        &["oracle", "--set", "gamma_m=0.1", "--set", "cooperativity=5", "--gain", "0.3", "--relaxation-times", "100"],
        &["sweep-gain", "--config", &preset("fig5.cfg"), "--points", "2"],
        &["sweep-gain", "--config", &preset("fig6.cfg"), "--points", "2"],
        &["cavity-sweep", "--config", &preset("fig9.cfg"), "--points", "2"],
    ];
    for args in runs {
        let out = omsq(args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).lines().count() >= 3, "{args:?}");
    }
}

#[test]
fn detect_map_is_long_format() {
    let out = omsq(&["detect-map", "--points", "5", "--phi-points", "4", "--gain", "0.49", "--theta", "pi/16"]);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "omega,phi,s_zout");
    assert_eq!(rows.len(), 1 + 20);
}

#[test]
fn validate_reports_agreement() {
    let out = omsq(&["validate", "--seed", "7"]);
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("[PASS]").count(), 3, "{text}");
}

#[test]
fn usage_errors_exit_with_one_and_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg: PathBuf = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "gamma_m 1e-3\n").unwrap();
    let unknown_cfg = dir.path().join("unknown.cfg");
    std::fs::write(&unknown_cfg, "colour = 3\n").unwrap();

    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["sweep-gain".into(), "--set".into(), "bogus=1".into()], "unknown config key `bogus`"),
        (vec!["sweep-gain".into(), "--config".into(), unknown_cfg.display().to_string()], "unknown config key `colour`"),
        (vec!["sweep-gain".into(), "--config".into(), bad_cfg.display().to_string()], "malformed config"),
        (vec!["sweep-gain".into(), "-o".into(), "/nonexistent-dir/x.csv".into()], "cannot write output"),
        (vec!["sweep-gain".into(), "--points".into(), "1".into()], "at least 2 points"),
        (vec!["sweep-gain".into(), "--theta".into(), "pi/".into()], "cannot parse"),
        (vec!["no-such-command".into()], "unrecognized subcommand"),
    ];
    for (args, needle) in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = omsq(&refs);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn numerical_failures_exit_with_two() {
    let out = omsq(&["spectrum", "--gain", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not stable"));
    let out = omsq(&["analytic", "--set", "cooperativity=0"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("coupling is zero"));
}

#[test]
fn help_exits_cleanly() {
    let out = omsq(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sweep-gain"));
}
