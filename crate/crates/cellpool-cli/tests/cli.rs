//! End-to-end tests of the installed binary: exit codes, output formats,
//! provenance, reproducibility, and the file outputs of `simulate`.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn cellpool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellpool"))
        .args(args)
        .env_remove("CELLPOOL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Parse `# key: value` comment lines + CSV body into (provenance, rows).
fn parse_csv_output(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let comments: Vec<String> = text
        .lines()
        .filter(|l| l.starts_with('#'))
        .map(|l| l.to_string())
        .collect();
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let rows = reader
        .records()
        .map(|r| r.expect("csv row").iter().map(|c| c.to_string()).collect())
        .collect();
    (comments, rows)
}

fn csv_rows(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = vec!["--format", "csv"];
    full.extend_from_slice(args);
    let out = cellpool(&full);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    parse_csv_output(&stdout_str(&out)).1
}

#[test]
fn analytic_baseline_triple() {
    let mut kbps = Vec::new();
    for strategy in ["nocoop", "flexroam", "merger"] {
        let rows = csv_rows(&["analytic", "--strategy", strategy]);
        // header + one row per operator; symmetric defaults make them equal
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1][2], rows[2][2]);
        kbps.push(rows[1][2].parse::<f64>().unwrap());
    }
    for (got, expect) in kbps.iter().zip([193.3, 281.0, 387.4]) {
        assert!(
            (got - expect).abs() / expect < 0.03,
            "throughput {got} kb/s vs {expect}"
        );
    }
}

#[test]
fn merger_equals_nocoop_with_summed_parameters() {
    let merger = csv_rows(&["analytic", "--strategy", "merger"]);
    let summed = csv_rows(&[
        "analytic",
        "--strategy",
        "nocoop",
        "--lambda1",
        "8e-8",
        "--w1",
        "20 MHz",
        "--eta1",
        "8e-6",
    ]);
    // identical digits, not just close: the merger formula is the nocoop
    // formula on summed bandwidth and densities
    assert_eq!(merger[1][2..], summed[1][2..]);
}

#[test]
fn malformed_flag_is_usage_error() {
    let out = cellpool(&["analytic", "--lambda1", "not-a-number"]);
    assert_eq!(exit_code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--lambda1"), "stderr: {err}");

    let out = cellpool(&["analytic", "--strategy", "bogus"]);
    assert_eq!(exit_code(&out), 2);

    let out = cellpool(&["frobnicate"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unit_suffixes_accepted_on_flags() {
    let bare = csv_rows(&["analytic", "--w1", "10000000", "--tx-power", "39.810717055349734"]);
    let suffixed = csv_rows(&["analytic", "--w1", "10 MHz", "--tx-power", "46 dBm"]);
    assert_eq!(bare[1], suffixed[1]);

    let out = cellpool(&["analytic", "--w1", "10 parsecs"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn single_point_sweep_matches_analytic() {
    let sweep = csv_rows(&[
        "sweep",
        "--axis",
        "bs-density",
        "--grid",
        "1",
        "--strategies",
        "flexroam",
    ]);
    let analytic = csv_rows(&["analytic", "--strategy", "flexroam"]);
    // sweep rows carry (ratio, strategy, operator, ...), analytic rows
    // (strategy, operator, ...); compare the numeric cells
    assert_eq!(sweep.len(), 3);
    assert_eq!(sweep[1][3..6], analytic[1][2..5]);
}

#[test]
fn sweep_flags_bad_ratio_and_continues() {
    let rows = csv_rows(&[
        "sweep",
        "--grid",
        "0.5,0,2",
        "--strategies",
        "nocoop",
    ]);
    assert_eq!(rows.len(), 7); // header + 3 ratios x 2 operators
    let status = |ratio: &str| -> Vec<&str> {
        rows.iter()
            .skip(1)
            .filter(|r| r[0] == ratio)
            .map(|r| r[6].as_str())
            .collect()
    };
    assert!(status("0.5").iter().all(|s| *s == "ok"));
    assert!(status("2").iter().all(|s| *s == "ok"));
    assert!(status("0").iter().all(|s| s.contains("non-positive")));
}

#[test]
fn sweep_with_all_rows_failed_exits_nonzero() {
    let out = cellpool(&["sweep", "--grid=-1,-2", "--format", "csv"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn csv_and_json_encodings_agree() {
    let out_csv = cellpool(&["analytic", "--strategy", "merger", "--format", "csv"]);
    let out_json = cellpool(&["analytic", "--strategy", "merger", "--format", "json"]);
    assert_eq!(exit_code(&out_csv), 0);
    assert_eq!(exit_code(&out_json), 0);
    let (_, csv_rows) = parse_csv_output(&stdout_str(&out_csv));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&out_json)).unwrap();
    let json_cols: Vec<String> = parsed["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let json_rows: Vec<Vec<String>> = parsed["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_str().unwrap().to_string())
                .collect()
        })
        .collect();
    assert_eq!(csv_rows[0], json_cols);
    assert_eq!(csv_rows[1..], json_rows[..]);
    // both carry the same input digest
    assert!(parsed["provenance"]["input_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn verify_small_budget_checks_pass_and_pin_bytes() {
    let args = [
        "verify",
        "--checks",
        "association,distance",
        "--samples",
        "20000",
        "--seed",
        "99",
        "--format",
        "csv",
    ];
    let first = cellpool(&args);
    assert_eq!(
        exit_code(&first),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = cellpool(&args);
    assert_eq!(first.stdout, second.stdout, "pinned seed must pin bytes");
    let (comments, rows) = parse_csv_output(&stdout_str(&first));
    assert!(comments.iter().any(|c| c.contains("seed: 99")));
    assert!(rows.iter().skip(1).all(|r| r[5] == "pass"));
}

#[test]
fn verify_corrupted_quadrature_fails_with_exit_5() {
    let out = cellpool(&[
        "verify",
        "--checks",
        "rate",
        "--samples",
        "4000",
        "--corrupt-alpha",
        "0.4",
    ]);
    assert_eq!(exit_code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
    assert!(stdout_str(&out).contains("FAIL"));
}

#[test]
fn seed_env_var_overrides_default_but_not_flag() {
    let run = |envs: &[(&str, &str)], args: &[&str]| -> String {
        let out = Command::new(env!("CARGO_BIN_EXE_cellpool"))
            .args(args)
            .env_remove("CELLPOOL_SEED")
            .envs(envs.iter().copied())
            .output()
            .expect("binary runs");
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout).unwrap()
    };
    let base = [
        "verify",
        "--checks",
        "association",
        "--samples",
        "2000",
        "--format",
        "csv",
    ];
    let from_env = run(&[("CELLPOOL_SEED", "777")], &base);
    assert!(from_env.contains("# seed: 777"));
    let mut with_flag = base.to_vec();
    with_flag.extend_from_slice(&["--seed", "5"]);
    let flag_wins = run(&[("CELLPOOL_SEED", "777")], &with_flag);
    assert!(flag_wins.contains("# seed: 5"));
}

#[test]
fn simulate_smoke_run_is_fast_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let per_user = dir.path().join("users.csv");
    let cdf = dir.path().join("cdf.csv");
    let started = Instant::now();
    let out = cellpool(&[
        "simulate",
        "--frames",
        "1",
        "--runs",
        "1",
        "--users-per-cell",
        "1",
        "--summary-out",
        summary.to_str().unwrap(),
        "--per-user-out",
        per_user.to_str().unwrap(),
        "--cdf-out",
        cdf.to_str().unwrap(),
    ]);
    let elapsed = started.elapsed();
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(elapsed.as_secs_f64() < 5.0, "smoke run took {elapsed:?}");

    // summary embeds provenance and the report
    let summary_text = std::fs::read_to_string(&summary).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary_text).unwrap();
    assert_eq!(parsed["provenance"]["command"], "simulate");
    assert_eq!(parsed["result"]["strategy"], "no-coop");
    let digest = parsed["result"]["config_sha256"].as_str().unwrap();
    assert_eq!(parsed["provenance"]["input_sha256"].as_str().unwrap(), digest);

    // per-user CSV: 16 + 13 users, one row each
    let (comments, rows) = parse_csv_output(&std::fs::read_to_string(&per_user).unwrap());
    assert!(comments.iter().any(|c| c.contains("input_sha256")));
    assert_eq!(rows.len(), 1 + 29);

    // CDF file is non-decreasing in both columns
    let (_, cdf_rows) = parse_csv_output(&std::fs::read_to_string(&cdf).unwrap());
    let points: Vec<(f64, f64)> = cdf_rows[1..]
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    assert!(points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    assert_eq!(points.last().unwrap().1, 1.0);
}

#[test]
fn simulate_pinned_seed_reproduces_summary_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str, dir: &Path| {
        [
            "simulate".to_string(),
            "--frames".into(),
            "2".into(),
            "--runs".into(),
            "1".into(),
            "--users-per-cell".into(),
            "2".into(),
            "--seed".into(),
            "31".into(),
            "--summary-out".into(),
            dir.join(name).to_str().unwrap().to_string(),
        ]
    };
    let first_args = args("a.json", dir.path());
    let out = cellpool(&first_args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(exit_code(&out), 0);
    let second_args = args("b.json", dir.path());
    let out = cellpool(&second_args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(exit_code(&out), 0);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn simulate_rejects_broken_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "runs = 0\nframes = 0\n").unwrap();
    let out = cellpool(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("runs") && err.contains("frames"), "stderr: {err}");

    let out = cellpool(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn simulate_compare_conflicts_with_strategy_override() {
    let out = cellpool(&["simulate", "--compare", "--strategy", "merger"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn threads_flag_does_not_change_results() {
    let one = cellpool(&["--threads", "1", "analytic", "--format", "csv"]);
    let dflt = cellpool(&["analytic", "--format", "csv"]);
    assert_eq!(one.stdout, dflt.stdout);
    let out = cellpool(&["--threads", "0", "analytic"]);
    assert_eq!(exit_code(&out), 2);
}
