use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_survboost"));
    c.env_remove("SURVBOOST_THREADS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn survboost")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, n: usize) -> PathBuf {
    let o = run(
        &["--seed", "3", "synth", "--out", "train.csv", "--test-out", "test.csv", "--n-samples", &n.to_string()],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("train.csv")
}

#[test]
fn missing_event_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 300);
    let o = run(&["train", "--data", "train.csv", "--model", "m.json", "--event-col", "status"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("status"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn unreadable_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "x,duration,event\n1,2.0,1\n2,abc,0\n").unwrap();
    let o = run(&["train", "--data", "bad.csv", "--model", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("abc"));
}

#[test]
fn missing_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--data", "nope.csv", "--model", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 800);
    let mut files = Vec::new();
    for (name, threads) in [("a.json", "1"), ("b.json", "1"), ("c.json", "4")] {
        let o = run(
            &["--seed", "5", "--threads", threads, "train", "--data", "train.csv", "--model", name, "--n-iterations", "8"],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn threads_env_is_honoured_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 200);
    let o = bin()
        .args(["train", "--data", "train.csv", "--model", "m.json", "--estimator", "kaplan-meier"])
        .env("SURVBOOST_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SURVBOOST_THREADS"));
    // the flag wins over a bad environment value
    let o = bin()
        .args(["--threads", "2", "train", "--data", "train.csv", "--model", "m.json", "--estimator", "kaplan-meier"])
        .env("SURVBOOST_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 1500);
    let d = dir.path();
    let o = run(&["train", "--data", "train.csv", "--model", "sb.json", "--n-iterations", "15"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = std::fs::read_to_string(d.join("sb.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 16);
    assert!(log.starts_with("round,loss_before,loss_after"));

    let o = run(&["train", "--data", "train.csv", "--model", "aj.json", "--estimator", "aalen-johansen"], d);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = run(
        &["predict", "--model", "sb.json", "--data", "test.csv", "--out", "p.csv", "--grid", "0.1,0.5,1.0", "--monotone"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let pred = std::fs::read_to_string(d.join("p.csv")).unwrap();
    let mut lines = pred.lines();
    assert_eq!(lines.next(), Some("row,horizon,survival,cif_1,cif_2,cif_3"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let n_test = std::fs::read_to_string(d.join("test.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows.len(), 3 * n_test);
    for r in &rows {
        let s: f64 = r[2..].iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    let o = run(
        &[
            "evaluate", "--model", "sb.json", "--model", "aj.json", "--data", "test.csv", "--out-dir", "ev",
            "--oracle", "train.oracle.json", "--c-index", "--quantiles", "0.25,0.5",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.lines().next().unwrap().starts_with("model"));
    assert_eq!(table.lines().count(), 3);
    for f in ["sb.metrics.json", "sb.metrics.csv", "sb.brier.csv", "aj.metrics.json"] {
        assert!(d.join("ev").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(d.join("ev/sb.metrics.csv")).unwrap();
    assert!(csv.contains("c_index_event1"));
    assert!(csv.contains("s_cen_log_simple"));
}

#[test]
fn evaluate_rejects_more_events_than_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["--seed", "1", "synth", "--out", "k1.csv", "--n-samples", "300", "--n-events", "1"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["train", "--data", "k1.csv", "--model", "km.json", "--estimator", "kaplan-meier"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    synth(d, 300);
    let o = run(&["evaluate", "--model", "km.json", "--data", "test.csv", "--out-dir", "ev"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("event type"));
}

#[test]
fn benchmark_single_model_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["benchmark", "--n-samples", "600", "--models", "km", "--out-dir", "b"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2, "{table}");
    assert!(lines[1].starts_with("kaplan_meier"));
    let csv = std::fs::read_to_string(dir.path().join("b/benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "fit_secs").unwrap();
    let secs: f64 = csv.lines().nth(1).unwrap().split(',').nth(col).unwrap().parse().unwrap();
    assert!(secs > 0.0);
    let shown = lines[1].split_whitespace().last().unwrap();
    assert!(shown.parse::<f64>().unwrap() > 0.0, "{shown}");
}

#[test]
fn benchmark_oracle_needs_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 300);
    let o = run(&["benchmark", "--data", "train.csv", "--models", "oracle"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 400);
    std::fs::write(
        d.join("run.toml"),
        "seed = 9\n[survival_boost.gbt]\nn_iterations = 4\nmax_depth = 2\n",
    )
    .unwrap();
    let o = run(&["--config", "run.toml", "train", "--data", "train.csv", "--model", "a.json"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(d.join("a.log.csv")).unwrap().lines().count(), 5);
    let o = run(
        &["--config", "run.toml", "train", "--data", "train.csv", "--model", "b.json", "--n-iterations", "6"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(d.join("b.log.csv")).unwrap().lines().count(), 7);

    std::fs::write(d.join("bad.toml"), "[survival_boost.gbt]\nlearnin_rate = 0.1\n").unwrap();
    let o = run(&["--config", "bad.toml", "train", "--data", "train.csv", "--model", "c.json"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learnin_rate"), "{}", stderr(&o));
}

#[test]
fn search_refits_best_trial() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 500);
    std::fs::write(d.join("fast.toml"), "[survival_boost.gbt]\nmax_bins = 16\n").unwrap();
    let o = run(&["--config", "fast.toml", "train", "--data", "train.csv", "--model", "s.json", "--search", "2"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(d.join("s.search.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(d.join("s.json").exists());
}

#[test]
fn missing_output_directory_exits_2_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 300);
    for args in [
        vec!["train", "--data", "train.csv", "--model", "no/m.json"],
        vec!["train", "--data", "train.csv", "--model", "m.json", "--log", "no/log.csv"],
        vec!["synth", "--out", "no/x.csv", "--n-samples", "100"],
    ] {
        let o = run(&args, d);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("does not exist"));
    }
    assert!(!d.join("m.json").exists());
    let o = run(&["train", "--data", "train.csv", "--model", "m.json", "--estimator", "kaplan-meier"], d);
    assert!(o.status.success());
    let o = run(&["predict", "--model", "m.json", "--data", "test.csv", "--out", "no/p.csv"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curves_are_exported_as_two_column_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 400);
    std::fs::create_dir(d.join("curves")).unwrap();
    let o = run(
        &["train", "--data", "train.csv", "--model", "aj.json", "--estimator", "aalen-johansen", "--curves-dir", "curves"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["survival.csv", "cif_1.csv", "cif_2.csv", "cif_3.csv"] {
        let text = std::fs::read_to_string(d.join("curves").join(f)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,value"));
        assert_eq!(lines.next().unwrap().split(',').count(), 2);
    }
    let o = run(
        &["train", "--data", "train.csv", "--model", "sb.json", "--n-iterations", "2", "--curves-dir", "curves"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("curves/censoring_km.csv").exists());
}

#[test]
fn marginal_model_has_chance_c_index() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 600);
    let o = run(&["train", "--data", "train.csv", "--model", "aj.json", "--estimator", "aalen-johansen"], d);
    assert!(o.status.success());
    let o = run(&["evaluate", "--model", "aj.json", "--data", "test.csv", "--out-dir", "ev", "--c-index"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("ev/aj.metrics.csv")).unwrap();
    let mut seen = 0;
    for line in csv.lines().filter(|l| l.starts_with("c_index")) {
        let v: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{line}");
        seen += 1;
    }
    assert!(seen > 0);
}
