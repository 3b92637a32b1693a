use std::path::Path;
use std::process::{Command, Output};

use edgebatch::scenario::{load_schedule, save_schedule};

fn edgebatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgebatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, tasks: usize) -> std::path::PathBuf {
    let file = dir.join(format!("scenario-{tasks}.json"));
    let out = edgebatch(&[
        "generate",
        "--tasks",
        &tasks.to_string(),
        "--seed",
        "7",
        "--out",
        path(&file),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn solve_then_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate(dir.path(), 30);
    for (scheduler, holes) in [
        ("jbas", false),
        ("jbas", true),
        ("equal", false),
        ("greedy", false),
        ("single", true),
    ] {
        let schedule = dir.path().join(format!("{scheduler}-{holes}.json"));
        let mut args = vec![
            "solve",
            "--scenario",
            path(&scenario),
            "--scheduler",
            scheduler,
            "--out",
            path(&schedule),
        ];
        if holes {
            args.push("--holes");
        }
        let out = edgebatch(&args);
        assert!(
            out.status.success(),
            "{scheduler}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let check = edgebatch(&["check", "--scenario", path(&scenario), "--schedule", path(&schedule)]);
        assert_eq!(check.status.code(), Some(0), "{scheduler}");
        assert!(String::from_utf8_lossy(&check.stdout).starts_with("feasible"));
    }
}

#[test]
fn corrupted_schedule_fails_check_with_listing() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate(dir.path(), 20);
    let file = dir.path().join("schedule.json");
    assert!(
        edgebatch(&["solve", "--scenario", path(&scenario), "--out", path(&file)])
            .status
            .success()
    );
    let mut schedule = load_schedule(&file).unwrap();
    assert!(!schedule.batch_starts.is_empty());
    for t in &mut schedule.batch_starts {
        *t += 0.5;
    }
    save_schedule(&schedule, &file).unwrap();
    let out = edgebatch(&["check", "--scenario", path(&scenario), "--schedule", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    let listing = String::from_utf8_lossy(&out.stdout);
    assert!(listing.contains("deadline"), "{listing}");
}

#[test]
fn oracle_refuses_large_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate(dir.path(), 10);
    let out = edgebatch(&["oracle", "--scenario", path(&scenario)]);
    assert_eq!(out.status.code(), Some(2));
    let small = generate(dir.path(), 3);
    let out = edgebatch(&["oracle", "--scenario", path(&small), "--mode", "fluid"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(edgebatch(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(edgebatch(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(edgebatch(&[]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate(dir.path(), 5);
    let out = edgebatch(&["solve", "--scenario", path(&scenario), "--scheduler", "fastest"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        edgebatch(&["solve", "--scenario", path(&missing)]).status.code(),
        Some(2)
    );
    assert_eq!(edgebatch(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"parameter": "num_tasks", "values": [8, 16], "seeds": [1, 2],
            "schedulers": ["jbas", "jbas+holes", "greedy"],
            "base": {"generator": {"total_bandwidth": 2e6}}}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(edgebatch(&["sweep", "--spec", path(&spec), "--out", path(&a)])
        .status
        .success());
    assert!(edgebatch(&["sweep", "--spec", path(&spec), "--out", path(&b)])
        .status
        .success());
    let first = std::fs::read_to_string(&a).unwrap();
    assert_eq!(first, std::fs::read_to_string(&b).unwrap());
    assert!(first.contains("# total_bandwidth_hz=2000000"));
    // preamble, header, then one row per scheduler, value and seed
    let rows = first.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 3 * 2 * 2);
}

#[test]
fn bad_sweep_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"parameter": "num_tasks", "values": [], "seeds": [1], "schedulers": ["jbas"]}"#,
    )
    .unwrap();
    let out = edgebatch(&["sweep", "--spec", path(&spec), "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}
