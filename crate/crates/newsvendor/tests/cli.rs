//! End-to-end checks of the command-line interface: flag handling, exit
//! codes, output formats and reproducibility.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newsvendor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn help_covers_every_subcommand() {
    let top = run(&["--help"]);
    assert!(top.status.success());
    for sub in [
        "saa-curve",
        "optimal-curve",
        "thresholds",
        "asymptotics",
        "simulate",
    ] {
        assert!(stdout(&top).contains(sub), "top-level help must list {sub}");
        let help = run(&[sub, "--help"]);
        assert!(help.status.success(), "{sub} --help must succeed");
        let text = stdout(&help);
        assert!(text.contains("--q"), "{sub} help documents --q");
        assert!(text.contains("--output"), "{sub} help documents --output");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["saa-curve", "--q", "0.9", "--n-max", "5", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_quantile_is_a_usage_error() {
    let out = run(&["saa-curve", "--q", "1.5", "--n-max", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn q_conflicts_with_cost_pair() {
    let out = run(&[
        "saa-curve",
        "--q",
        "0.9",
        "--b",
        "9",
        "--h",
        "1",
        "--n-max",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // --b without --h is likewise rejected
    let out = run(&["saa-curve", "--b", "9", "--n-max", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn saa_curve_reports_published_value() {
    let out = run(&["saa-curve", "--q", "0.9", "--n-max", "20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,regret,argmax_mu"));
    assert_eq!(text.lines().count(), 21);
    let row20 = text.lines().last().unwrap();
    let regret: f64 = row20.split(',').nth(1).unwrap().parse().unwrap();
    assert!((regret - 0.268).abs() < 2e-3, "n=20 regret {regret}");
}

#[test]
fn single_row_curve() {
    let out = run(&["saa-curve", "--q", "0.5", "--n-max", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn cost_pair_matches_quantile_parameterization() {
    // relative regret depends only on q = b/(b+h)
    let via_q = run(&["saa-curve", "--q", "0.9", "--n-max", "10"]);
    let via_bh = run(&["saa-curve", "--b", "9", "--h", "1", "--n-max", "10"]);
    assert_eq!(stdout(&via_q), stdout(&via_bh));
}

#[test]
fn optimal_curve_header_and_k_column() {
    let out = run(&["optimal-curve", "--q", "0.8", "--n-max", "12"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("n,k,gamma,opt_regret"));
    // k stays within one rank of the empirical quantile once non-degenerate
    for line in text.lines().skip(1) {
        let mut cells = line.split(',');
        let n: usize = cells.next().unwrap().parse().unwrap();
        let k: usize = cells.next().unwrap().parse().unwrap();
        assert!(k >= 1 && k <= n);
    }
}

#[test]
fn thresholds_json_document() {
    let out = run(&[
        "thresholds",
        "--q",
        "0.7",
        "--tau",
        "0.25",
        "--method",
        "levi-ub",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("one json document");
    assert_eq!(doc[0]["n_star"], serde_json::json!(1696));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = [
        "simulate",
        "--q",
        "0.8",
        "--policy",
        "saa",
        "--dist",
        r#"{"family":"uniform","params":{"lo":0.0,"hi":1.0}}"#,
        "--n",
        "8",
        "--m",
        "2000",
        "--k",
        "50",
        "--seed",
        "31",
        "--format",
        "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b), "same seed must reproduce bytes");
    let doc: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(doc["M"], serde_json::json!(2000));
    assert!(doc["mean"].as_f64().unwrap() >= 0.0);
}

#[test]
fn simulate_threshold_horizon_exit_code() {
    let out = run(&[
        "simulate",
        "--q",
        "0.9",
        "--policy",
        "saa",
        "--dist",
        r#"{"family":"pareto","params":{"shape":1.5,"scale":1.0}}"#,
        "--tau",
        "0.01",
        "--m",
        "500",
        "--k",
        "50",
        "--n-cap",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "horizon exhaustion maps to exit 4"
    );
}

#[test]
fn simulate_rejects_bad_dist_json() {
    let out = run(&[
        "simulate",
        "--q",
        "0.9",
        "--policy",
        "saa",
        "--dist",
        r#"{"family":"nope"}"#,
        "--n",
        "4",
        "--m",
        "10",
        "--k",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_accepts_config_file() {
    let dir = std::env::temp_dir().join("newsvendor-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("sim.json");
    let cfg = serde_json::json!({
        "replications": 500,
        "out_of_sample": 40,
        "seed": 9,
        "policy": {
            "n": 5,
            "weights": [0.0, 0.0, 0.0, 0.0, 1.0],
            "form": {"single_os": {"rank": 5}}
        },
        "dist": {"family": "exponential", "params": {"rate": 1.0}},
        "n": 5
    });
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let out = run(&[
        "simulate",
        "--q",
        "0.9",
        "--config",
        cfg_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["M"], serde_json::json!(500));
}

#[test]
fn output_file_and_stdout_agree() {
    let dir = std::env::temp_dir().join("newsvendor-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("curve.csv");
    let to_file = run(&[
        "saa-curve",
        "--q",
        "0.7",
        "--n-max",
        "6",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    let on_stdout = run(&["saa-curve", "--q", "0.7", "--n-max", "6"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&on_stdout));
}

#[test]
fn progress_stays_off_stdout() {
    let out = run(&["optimal-curve", "--q", "0.7", "--n-max", "4"]);
    assert!(out.status.success());
    // stderr carries the progress note, stdout only data
    assert!(String::from_utf8_lossy(&out.stderr).contains("solving"));
    for line in stdout(&out).lines().skip(1) {
        assert!(line.chars().next().unwrap().is_ascii_digit());
    }
}

#[test]
fn asymptotics_c_star_column_is_constant() {
    let out = run(&["asymptotics", "--q", "0.5", "--n-list", "50,100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let c: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(c.len(), 2);
    assert_eq!(c[0], c[1]);
    let c_star: f64 = c[0].parse().unwrap();
    assert!((c_star - 0.170 / 0.5).abs() < 2e-3);
}
