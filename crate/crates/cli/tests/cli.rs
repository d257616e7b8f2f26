//! Exit codes and event-file handling of the `ionbsm` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ionbsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionbsm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = "bootstrap = 0\n[run]\nn_runs = 20000000\n";

/// Simulates a small entanglement-transfer campaign and returns its directory.
fn simulated(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = dir.join("sim");
    let res = ionbsm(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    out
}

#[test]
fn empty_event_file_reports_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("empty.txt");
    std::fs::write(&events, "").unwrap();
    let res = ionbsm(&["analyze", s(&events), "--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("no events"));
}

#[test]
fn malformed_lines_are_skipped_or_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulated(dir.path());
    let config = dir.path().join("small.toml");
    let text = std::fs::read_to_string(sim.join("events.txt")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let first_record = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    lines.insert(first_record + 1, "this is not an event");
    let broken = dir.path().join("broken.txt");
    std::fs::write(&broken, lines.join("\n") + "\n").unwrap();

    let out = dir.path().join("lenient");
    let res = ionbsm(&[
        "analyze",
        s(&broken),
        "--config",
        s(&config),
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let lenient: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let clean: Value =
        serde_json::from_str(&std::fs::read_to_string(sim.join("summary.json")).unwrap()).unwrap();
    assert_eq!(lenient["skipped_lines"], 1);
    assert_eq!(lenient["events"], clean["events"]);
    assert_eq!(lenient["states"], clean["states"]);

    let res = ionbsm(&[
        "analyze",
        s(&broken),
        "--config",
        s(&config),
        "--strict",
        "--out",
        s(&dir.path().join("strict")),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains(&format!("line {}", first_record + 2)), "{err}");
}

#[test]
fn config_and_invariant_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_syntax = dir.path().join("syntax.toml");
    std::fs::write(&bad_syntax, "[run\n").unwrap();
    let res = ionbsm(&["simulate", "--config", s(&bad_syntax)]);
    assert_eq!(res.status.code(), Some(2));

    let unphysical = dir.path().join("unphysical.toml");
    std::fs::write(&unphysical, "[source]\nwerner_weight = 1.5\n").unwrap();
    let res = ionbsm(&[
        "simulate",
        "--config",
        s(&unphysical),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(res.status.code(), Some(3));

    let res = ionbsm(&["simulate", "--bins", "1", "--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_4_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tight.toml");
    std::fs::write(
        &config,
        format!("write_events = false\nml_max_iterations = 1\n{SMALL}"),
    )
    .unwrap();
    let out = dir.path().join("o");
    // a single ML iteration cannot meet the tolerance
    let res = ionbsm(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(
        res.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let diag = std::fs::read_to_string(out.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("did not converge"));
}

#[test]
fn rotation_from_a_pairs_file() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.txt");
    // 90 degrees about z
    std::fs::write(
        &pairs,
        "# px py pz mx my mz\n1 0 0 0 1 0\n0 1 0 -1 0 0\n0 0 1 0 0 1\n-1 0 0 0 -1 0\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let res = ionbsm(&["rotation", "--pairs", s(&pairs), "--out", s(&out)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let angle = v["rotation"]["angle_rad"].as_f64().unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}
