use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lamkit_core::approx::squared_error;
use lamkit_core::model::from_json;
use lamkit_core::stats::{compare, Direction, ScoreMatrix};
use serde_json::Value;
use tempfile::TempDir;

fn lamkit<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_lamkit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a synthetic dataset and its config; returns their paths.
fn synth(dir: &Path, tag: &str, coefficients: &str, extra: &[&str]) -> (PathBuf, PathBuf) {
    let data = dir.join(format!("{tag}.csv"));
    let config = dir.join(format!("{tag}.json"));
    let mut args = vec!["synth", "--coefficients", coefficients, "--out", p(&data), "--config-out", p(&config)];
    args.extend_from_slice(extra);
    stdout(&lamkit(&args));
    (data, config)
}

#[test]
fn alpha_is_reproducible_and_minimal() {
    let a = lamkit(["alpha"]);
    let b = lamkit(["alpha"]);
    assert_eq!(stdout(&a), stdout(&b));
    let r = json(&a);
    let minimiser = r["minimiser"].as_f64().unwrap();
    assert!((minimiser - 2.5996).abs() < 5e-4);
    assert!(r["squared_error_at_minimiser"].as_f64().unwrap() <= squared_error(2.59968).unwrap() + 1e-10);
    assert_eq!(r["constant_expression"], "80000/30773");
    assert_eq!(r["manifest"]["command"], "alpha");
    assert!(stdout(&lamkit(["alpha", "--format", "text"])).contains("80000/30773"));
}

#[test]
fn fit_is_byte_identical_and_reloads() {
    let dir = TempDir::new().unwrap();
    let (data, config) = synth(dir.path(), "d", "1.0,-0.7,0.4", &["--samples", "600", "--seed", "7"]);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        stdout(&lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "nnlr", "--seed", "7", "--out", p(out)]));
    }
    // manifests name different outputs, so compare with the output field removed
    let strip = |path: &Path| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v["manifest"].as_object_mut().unwrap().remove("output");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    let first = lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "nnlr"]);
    let second = lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "nnlr"]);
    assert_eq!(first.stdout, second.stdout);

    let arm1 = dir.path().join("arm1.json");
    stdout(&lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "arm1", "--out", p(&arm1)]));
    let (model, manifest) = from_json(&std::fs::read_to_string(&arm1).unwrap()).unwrap();
    assert_eq!(manifest.unwrap()["parameters"]["kind"], "arm1");
    let q = model.predict(&[("x1", 0.3), ("x2", -1.0), ("x3", 2.0)]).unwrap();
    assert!(q > 0.0 && q < 1.0);
}

#[test]
fn arm2_needs_subscales() {
    let dir = TempDir::new().unwrap();
    let (data, config) = synth(dir.path(), "d", "1.0,-0.7", &["--samples", "300"]);
    let o = lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "arm2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("subscale"));

    let (data, config) = synth(dir.path(), "s", "1.0,-0.7,0.5", &["--samples", "400", "--subscales", "2"]);
    let doc = json(&lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "arm2"]));
    assert_eq!(doc["subscales"].as_array().unwrap().len(), 2);
    assert!(doc["terms"].as_array().unwrap().iter().all(|t| t["coefficient"].as_f64().unwrap() >= 0.0));
}

const MOTIVATING: &str = r#"{
  "version": 1,
  "link": "logistic",
  "bias": -2.1972245773362196,
  "terms": [{"feature": "late_payment", "coefficient": 1.61, "shape": {"type": "identity"}}]
}"#;

#[test]
fn linearise_motivating_model() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("m.json");
    std::fs::write(&input, MOTIVATING).unwrap();
    let text = stdout(&lamkit(["linearise", "--model", p(&input)]));
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["link"], "linearised");
    assert!((doc["terms"][0]["coefficient"].as_f64().unwrap() - 0.30966).abs() < 1e-4);

    let (lam, _) = from_json(&text).unwrap();
    let (logistic, _) = from_json(MOTIVATING).unwrap();
    let in_process = logistic.linearise().unwrap();
    for i in 0..100 {
        let x = -6.0 + 0.12 * f64::from(i);
        let a = lam.predict(&[("late_payment", x)]).unwrap();
        let b = in_process.predict(&[("late_payment", x)]).unwrap();
        assert_eq!(a, b, "x = {x}");
    }

    let lin = dir.path().join("lam.json");
    std::fs::write(&lin, &text).unwrap();
    let again = lamkit(["linearise", "--model", p(&lin)]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn evaluate_pairs_models_with_their_linearisation() {
    let dir = TempDir::new().unwrap();
    let (data, config) = synth(
        dir.path(),
        "u",
        "0.8,-0.6",
        &["--samples", "800", "--seed", "3", "--distribution", "uniform:-1:1"],
    );
    let out = dir.path().join("metrics.csv");
    let args = ["evaluate", "--data", p(&data), "--config", p(&config), "--kind", "nnlr", "--folds", "5", "--seed", "11"];
    stdout(&lamkit(args.iter().copied().chain(["--out", p(&out)])));
    let csv = std::fs::read_to_string(&out).unwrap();
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 11);
    assert_eq!(sidecar["parameters"]["folds"], 5);

    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 10);
    for fold in 0..5 {
        let lr = &rows[fold];
        let lam = &rows[5 + fold];
        assert_eq!((lr[0].as_str(), lam[0].as_str()), ("NNLR", "LAM-NNLR"));
        assert_eq!(lr[3], lam[3], "AUC differs on fold {fold}");
        assert_eq!(lr[6], "0.0");
    }
    let rerun = lamkit(args);
    assert_eq!(stdout(&rerun), csv);
}

#[test]
fn evaluate_scores_fixed_models_on_the_same_folds() {
    let dir = TempDir::new().unwrap();
    let (data, config) = synth(dir.path(), "d", "1.0,-0.7", &["--samples", "400"]);
    let model = dir.path().join("full.json");
    stdout(&lamkit(["fit", "--data", p(&data), "--config", p(&config), "--kind", "nnlr", "--out", p(&model)]));
    let spec = format!("FULL={}", p(&model));
    let csv = stdout(&lamkit([
        "evaluate", "--data", p(&data), "--config", p(&config), "--kind", "arm1", "--no-lam", "--model", &spec, "--folds", "4",
    ]));
    let ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["ARM1", "ARM1", "ARM1", "ARM1", "FULL", "FULL", "FULL", "FULL"]);

    let none = lamkit(["evaluate", "--data", p(&data), "--config", p(&config)]);
    assert_eq!(none.status.code(), Some(1));
}

fn write_matrix(dir: &Path, rows: &[Vec<f64>]) -> PathBuf {
    let n = rows[0].len();
    let mut text = String::from("classifier");
    for j in 0..n {
        text.push_str(&format!(",d{j}"));
    }
    text.push('\n');
    for (i, row) in rows.iter().enumerate() {
        text.push_str(&format!("c{i}"));
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    let path = dir.join("scores.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn compare_matches_library() {
    let dir = TempDir::new().unwrap();
    // 8 classifiers on 24 datasets with a deterministic pseudo-random spread
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            (0..24)
                .map(|j| {
                    let h = ((i * 7919 + j * 104_729 + 13) % 1000) as f64 / 1000.0;
                    0.7 + 0.01 * i as f64 + 0.05 * h
                })
                .collect()
        })
        .collect();
    let path = write_matrix(dir.path(), &rows);
    let mut report = json(&lamkit(["compare", "--scores", p(&path), "--alpha-level", "0.05"]));
    report.as_object_mut().unwrap().remove("manifest");
    let matrix = ScoreMatrix::from_csv(std::fs::File::open(&path).unwrap(), Direction::HigherBetter).unwrap();
    let expected = serde_json::to_value(compare(&matrix, 0.05).unwrap()).unwrap();
    assert_eq!(report, expected);
    assert_eq!(report["nodes"].as_array().unwrap().len(), 8);
    assert_eq!(report["pairwise"].as_array().unwrap().len(), 28);

    let flipped = json(&lamkit(["compare", "--scores", p(&path), "--direction", "lower-better"]));
    for i in 0..8 {
        let a = report["mean_ranks"][i].as_f64().unwrap();
        let b = flipped["mean_ranks"][i].as_f64().unwrap();
        assert!((a + b - 9.0).abs() < 1e-12);
    }
    assert_eq!(report["edges"], flipped["edges"]);
    assert!(stdout(&lamkit(["compare", "--scores", p(&path), "--format", "text"])).contains("mean rank"));
}

#[test]
fn compare_identical_pair() {
    let dir = TempDir::new().unwrap();
    let row = vec![0.7, 0.8, 0.75, 0.9];
    let path = write_matrix(dir.path(), &[row.clone(), row]);
    let r = json(&lamkit(["compare", "--scores", p(&path)]));
    assert_eq!(r["edges"].as_array().unwrap().len(), 1);
    assert_eq!(r["pairwise"][0]["p"], 1.0);
    let bad = lamkit(["compare", "--scores", p(&path), "--alpha-level", "1.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn trinomial_examples() {
    let r = json(&lamkit(["trinomial", "13", "1", "22"]));
    assert_eq!(r["n_d"], 12);
    assert!((r["p_one_sided"].as_f64().unwrap() - 0.0009).abs() <= 2e-4);
    assert_eq!(json(&lamkit(["trinomial", "0", "0", "10"]))["p_one_sided"], 1.0);
    assert!(json(&lamkit(["trinomial", "5", "5", "0"]))["p_one_sided"].as_f64().unwrap() >= 0.5);
    assert_eq!(lamkit(["trinomial", "0", "0", "0"]).status.code(), Some(2));
}

#[test]
fn pivot_builds_score_matrix() {
    let dir = TempDir::new().unwrap();
    let mut metric_files = Vec::new();
    for seed in ["1", "2"] {
        let (data, config) = synth(dir.path(), &format!("d{seed}"), "1.0,-0.5", &["--samples", "300", "--seed", seed]);
        let out = dir.path().join(format!("m{seed}.csv"));
        stdout(&lamkit([
            "evaluate", "--data", p(&data), "--config", p(&config), "--kind", "nnlr", "--folds", "3", "--out", p(&out),
        ]));
        metric_files.push(out);
    }
    let out = dir.path().join("matrix.csv");
    stdout(&lamkit(["pivot", "--metrics", p(&metric_files[0]), "--metrics", p(&metric_files[1]), "--out", p(&out)]));
    let text = std::fs::read_to_string(&out).unwrap();
    let matrix = ScoreMatrix::from_csv(text.as_bytes(), Direction::HigherBetter).unwrap();
    assert_eq!(matrix.classifiers(), ["NNLR", "LAM-NNLR"]);
    assert_eq!(matrix.datasets(), ["synth-1", "synth-2"]);
    assert!(dir.path().join("matrix.csv.manifest.json").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(lamkit(["frobnicate"]).status.code(), Some(1));
    assert_eq!(lamkit(["fit", "--kind", "nnlr"]).status.code(), Some(1));
    assert_eq!(lamkit(["--help"]).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_lamkit"))
        .args(["trinomial", "1", "1", "1"])
        .env("LAMKIT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_lamkit"))
        .args(["trinomial", "1", "1", "1"])
        .env("LAMKIT_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn missing_files_are_data_errors() {
    let o = lamkit(["fit", "--data", "/nonexistent/d.csv", "--config", "/nonexistent/c.json", "--kind", "nnlr"]);
    assert_eq!(o.status.code(), Some(2));
}
