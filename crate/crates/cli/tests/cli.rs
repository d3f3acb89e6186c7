use std::path::Path;
use std::process::{Command, Output};

use sopchart_core::{stream_rng, ChartConfig, ChartKind, ChartState, DgpSpec, MarginalSpec};

fn sopchart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sopchart")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const IID: &str = r#"{"model":"iid","marginal":{"dist":"normal","mu":0.0,"sigma":1.0}}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn simulate_counts_records() {
    let out = stdout(&sopchart(&["simulate", "--dgp", IID, "--m", "2", "--n", "2", "--frames", "3", "--seed", "1"]));
    assert_eq!(out.lines().count(), 1 + 27);
    assert_eq!(out.lines().next(), Some("t,s1,s2,y"));
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let args = ["simulate", "--dgp", IID, "--m", "4", "--n", "3", "--frames", "5", "--seed", "9", "--output"];
        let o = sopchart(&[&args[..], &[p.to_str().unwrap()]].concat());
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn count_models_write_integers() {
    let dgp = r#"{"model":"sqinma","beta":[0.3,0.3,0.3],"powers":[1,1,1]}"#;
    let out = stdout(&sopchart(&["simulate", "--dgp", dgp, "--m", "3", "--n", "3", "--frames", "2", "--seed", "4"]));
    for line in out.lines().skip(1) {
        let y = line.rsplit(',').next().unwrap();
        assert!(y.parse::<u64>().is_ok(), "{line}");
    }
}

#[test]
fn simulate_then_monitor_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.csv");
    let (m, n, frames, seed) = (5, 6, 8, 21u64);
    let o = sopchart(&[
        "simulate", "--dgp", IID, "--m", "5", "--n", "6", "--frames", "8", "--seed", "21", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let out = stdout(&sopchart(&[
        "monitor", "--input", path.to_str().unwrap(), "--kind", "tau_tilde", "--lambda", "0.2", "--limit", "0.1",
    ]));

    let dgp = DgpSpec::iid(MarginalSpec::STANDARD_NORMAL).prepare().unwrap();
    let mut rng = stream_rng(seed, 0);
    let mut chart = ChartState::new(ChartConfig::new(ChartKind::TauTilde, 0.2, 0.1)).unwrap();
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), frames);
    for (t, row) in rows.iter().enumerate() {
        let grid = dgp.generate(m, n, &mut rng).unwrap().to_real(None, &mut rng).unwrap();
        let p = chart.update(&grid).unwrap();
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "1");
        assert_eq!(f[1].parse::<usize>().unwrap(), t + 1);
        assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), p.raw.to_bits());
        assert_eq!(f[3].parse::<f64>().unwrap().to_bits(), p.smoothed.to_bits());
        assert_eq!(f[6], if p.alarm { "1" } else { "0" });
    }
}

#[test]
fn clay_flats_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let squares = [
        [3.30, 3.95, 5.89, 3.20],
        [0.27, 3.71, 0.39, 4.33],
        [3.06, 1.66, 2.93, 2.12],
        [2.74, 2.86, 1.31, 2.10],
        [1.36, 3.42, 2.21, 1.80],
        [2.00, 2.44, 3.65, 1.64],
    ];
    let mut text = String::from("t,s1,s2,y\n");
    for (t, q) in squares.iter().enumerate() {
        for (k, y) in q.iter().enumerate() {
            text += &format!("{},{},{},{:.2}\n", t + 1, k / 2, k % 2, y);
        }
    }
    let input = write(dir.path(), "clay.csv", &text);
    let out = stdout(&sopchart(&["monitor", "--input", &input, "--kind", "tau_tilde", "--lambda", "0.1", "--limit", "1"]));
    // The smoothed tau-tilde is p3 - 1/3 of the smoothed type vector.
    let want_p3 = [0.400, 0.360, 0.324, 0.292, 0.362, 0.426];
    for (row, p3) in out.lines().skip(1).zip(want_p3) {
        let smoothed: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((smoothed + 1.0 / 3.0 - p3).abs() < 5e-4, "{row}");
    }
}

#[test]
fn noise_runs_add_a_mean_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t,s1,s2,y\n");
    for t in 1..=4 {
        for s1 in 0..3 {
            for s2 in 0..3 {
                text += &format!("{t},{s1},{s2},{}\n", (s1 + t) % 2);
            }
        }
    }
    let input = write(dir.path(), "counts.csv", &text);
    let args = [
        "monitor", "--input", &input, "--kind", "tau_tilde", "--lambda", "0.1", "--limit", "0.05", "--jitter-scale",
        "1", "--noise-runs", "5", "--seed", "3",
    ];
    let out = stdout(&sopchart(&args));
    let rows: Vec<Vec<String>> =
        out.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 4 * 6);
    assert!(rows[..20].iter().all(|r| r[0] != "mean"));
    assert!(rows[20..].iter().all(|r| r[0] == "mean"));
    for t in 0..4 {
        let mean: f64 = (0..5).map(|k| rows[k * 4 + t][3].parse::<f64>().unwrap()).sum::<f64>() / 5.0;
        let got: f64 = rows[20 + t][3].parse().unwrap();
        assert!((mean - got).abs() < 1e-12);
    }
    assert_eq!(stdout(&sopchart(&args)), out);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "t,s1,s2,y\n");
    let o = sopchart(&["monitor", "--input", &empty, "--kind", "tau_tilde", "--lambda", "0.1", "--limit", "0.1"]);
    assert_eq!(o.status.code(), Some(2));

    let reals = write(dir.path(), "reals.csv", "t,s1,s2,y\n1,0,0,0.5\n1,0,1,1.5\n1,1,0,2.5\n1,1,1,0.1\n");
    let o = sopchart(&[
        "monitor", "--input", &reals, "--kind", "tau_tilde", "--lambda", "0.1", "--limit", "0.1", "--jitter-scale",
        "1", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = sopchart(&["simulate", "--dgp", IID, "--m", "2", "--n", "2", "--frames", "1"]);
    assert_eq!(o.status.code(), Some(2), "missing seed");

    let o = sopchart(&["monitor", "--input", &reals, "--kind", "tau_tilde", "--lambda", "1.5", "--limit", "0.1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = sopchart(&["monitor", "--input", "/nonexistent/frames.csv", "--kind", "acf", "--lambda", "0.1", "--limit", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_tolerance_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let pool: String = (0..40).map(|i| format!("{}\n", ((i as f64) * 0.7).cos() * 0.01)).collect();
    let pool = write(dir.path(), "pool.txt", &pool);
    let o = sopchart(&[
        "calibrate", "--pool", &pool, "--lambda", "0.1", "--target-arl", "20", "--replications", "2000", "--seed", "1",
        "--rel-tol", "0",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        r#"
seed = 5
replications = 300
cap = 2000
m = 6
n = 6

[chart]
kind = "tau_tilde"
lambda = 0.1
limit = 0.5

[dgp]
model = "sar"
alpha = [0.4, 0.3, 0.1]
"#,
    );
    let json = stdout(&sopchart(&["arl", "--config", &cfg]));
    let est: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(est["replications"], 300);
    assert_eq!(est["cap_hits"], 300, "an unreachable limit never alarms");

    let json = stdout(&sopchart(&["arl", "--config", &cfg, "--limit", "0.03", "--cap", "1000"]));
    let est: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(est["mean"].as_f64().unwrap() < 20.0);
    assert_eq!(est["cap_hits"], 0);
}

#[test]
fn bootstrap_calibration_reports_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let pool: String = (0..96).map(|i| format!("{}\n", ((i as f64) * 1.3).sin() * 0.004)).collect();
    let pool = write(dir.path(), "pool.txt", &pool);
    let json = stdout(&sopchart(&[
        "calibrate", "--pool", &pool, "--lambda", "0.1", "--target-arl", "20", "--replications", "5000", "--seed", "2",
    ]));
    let res: serde_json::Value = serde_json::from_str(&json).unwrap();
    let arl = res["achieved_arl"]["mean"].as_f64().unwrap();
    assert!((arl - 20.0).abs() <= 0.03 * 20.0);
    assert!(res["limit"].as_f64().unwrap() > 0.0);
    assert!(!res["iterations"].as_array().unwrap().is_empty());
}

#[test]
fn ndjson_input_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let nd = dir.path().join("f.ndjson");
    for p in [&csv, &nd] {
        let o = sopchart(&[
            "simulate", "--dgp", IID, "--m", "3", "--n", "3", "--frames", "4", "--seed", "8", "--output",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let run = |p: &Path| stdout(&sopchart(&["monitor", "--input", p.to_str().unwrap(), "--kind", "acf", "--lambda", "0.3", "--limit", "0.2"]));
    assert_eq!(run(&csv), run(&nd));
}
