use std::fs;

use swarm_energy::cli::{self, EXIT_CONFIG, EXIT_OK, EXIT_USAGE};
use swarm_energy::metrics::CSV_HEADER;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("swarm-energy").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn run_prints_one_row() {
    let (code, out, _) = invoke(&[
        "run",
        "--strategy",
        "adaptive-null",
        "--swarm-size",
        "16",
        "--seed",
        "7",
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let fields: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(fields.len(), CSV_HEADER.len());
    assert_eq!(fields[0], "adaptive-null");
    assert_eq!(fields[1], "16");
    assert_eq!(fields[2], "7");
}

#[test]
fn run_is_repeatable() {
    let args = [
        "run",
        "--strategy",
        "liu",
        "--swarm-size",
        "4",
        "--seed",
        "3",
    ];
    assert_eq!(invoke(&args).1, invoke(&args).1);
}

#[test]
fn unknown_strategy_lists_the_choices() {
    let (code, out, err) = invoke(&["run", "--strategy", "bogus"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(out.is_empty());
    for name in ["naive", "adaptive-null", "labella+null", "liu+null"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(invoke(&[]).0, EXIT_USAGE);
    assert_eq!(invoke(&["run", "--swarm-size", "many"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["fly"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["run", "--swarm-size", "0"]).0, EXIT_CONFIG);
}

#[test]
fn run_writes_csv_and_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    let log = dir.path().join("events.tsv");
    let (code, out, _) = invoke(&[
        "run",
        "--strategy",
        "naive",
        "--swarm-size",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--log-events",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let written = fs::read_to_string(&csv).unwrap();
    let mut lines = written.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.next().unwrap(), out.trim_end());

    let events = fs::read_to_string(&log).unwrap();
    assert!(events.starts_with("tick\trobot\tevent\tpayload\n"));
    assert!(events.contains("\tdepart\t"));
    assert_eq!(events.matches("\thalt\t").count(), 2);
}

#[test]
fn validate_accepts_default_and_rejects_bad_files() {
    let (code, out, _) = invoke(&["validate"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("ok:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "replicates = 0\n").unwrap();
    assert_eq!(
        invoke(&["validate", "--config", bad.to_str().unwrap()]).0,
        EXIT_CONFIG
    );
    fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(
        invoke(&["validate", "--config", bad.to_str().unwrap()]).0,
        EXIT_CONFIG
    );
    let missing = dir.path().join("missing.conf");
    assert_eq!(
        invoke(&["validate", "--config", missing.to_str().unwrap()]).0,
        EXIT_CONFIG
    );
}

#[test]
fn sweep_writes_runs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("small.conf");
    let out = dir.path().join("nested").join("runs.csv");
    fs::write(
        &conf,
        "strategies = naive, adaptive-null\nsizes = 8\nreplicates = 20\nseed = 5\n",
    )
    .unwrap();
    let (code, stdout, err) = invoke(&[
        "sweep",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.contains("wrote 40 rows"));

    let runs = fs::read_to_string(&out).unwrap();
    assert_eq!(runs.lines().count(), 1 + 40);
    let summary = fs::read_to_string(dir.path().join("nested").join("runs_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r.starts_with("naive,8,20,")));
    assert!(rows.iter().any(|r| r.starts_with("adaptive-null,8,20,")));
}
