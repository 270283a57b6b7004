use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shapfold::eval::Metrics;
use shapfold::explain::ShapMatrix;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shapfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapfold"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn metrics_in(text: &str) -> Metrics {
    let start = text.find('{').expect("json in output");
    serde_json::from_str(&text[start..]).unwrap()
}

/// Twenty rows over the four bird/penguin patterns; only non-penguin birds fly.
fn bird_csv(dir: &Path) -> PathBuf {
    let mut csv = String::from("bird,penguin,class\n");
    for i in 0..20 {
        let (bird, penguin) = [("yes", "no"), ("yes", "yes"), ("no", "no"), ("no", "yes")][i % 4];
        let class = if bird == "yes" && penguin == "no" {
            "flies"
        } else {
            "grounded"
        };
        csv.push_str(&format!("{bird},{penguin},{class}\n"));
    }
    let path = dir.join("birds.csv");
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn mine_five_transactions() {
    let db = repo().join("data/five_tx.txt");
    let db = db.to_str().unwrap();
    let o = shapfold(&["mine", db, "--min-util", "25"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 11);

    let o = shapfold(&["mine", db, "-k", "1"]);
    assert_eq!(stdout(&o), "{b,c,d,e} 40\n");

    let o = shapfold(&["mine", db, "--min-util", "41"]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
}

#[test]
fn mine_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.txt");
    fs::write(&path, "").unwrap();
    let o = shapfold(&["mine", path.to_str().unwrap(), "-k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
}

#[test]
fn mine_bad_line_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "a b:3:1 1\n").unwrap();
    let o = shapfold(&["mine", path.to_str().unwrap(), "-k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_validation_errors() {
    let cfg = repo().join("configs/cars.conf");
    let o = shapfold(&[
        "run",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "test_fraction=1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("test_fraction"));

    let o = shapfold(&["mine"]);
    assert_eq!(o.status.code(), Some(1));

    let o = shapfold(&[
        "run",
        "--set",
        "data=x.csv",
        "--set",
        "label=y",
        "--set",
        "positive=z",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = shapfold(&[
        "run",
        "--set",
        "label=y",
        "--set",
        "positive=z",
        "--seed",
        "1",
        "--data",
        dir.path().join("nope.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn eval_reproduces_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = repo().join("configs/cars.conf");
    let cfg = cfg.to_str().unwrap();
    let run = shapfold(&["run", "-c", cfg, "--out-dir", out]);
    assert!(run.status.success(), "{}", stderr(&run));
    let reported: Metrics =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();

    let theory = dir.path().join("theory.pl");
    let eval = shapfold(&["eval", "-t", theory.to_str().unwrap(), "-c", cfg]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    let again = metrics_in(&stdout(&eval));
    assert_eq!(
        (again.tp, again.fp, again.tn, again.fn_, again.clause_count),
        (
            reported.tp,
            reported.fp,
            reported.tn,
            reported.fn_,
            reported.clause_count
        )
    );
    assert_eq!(again.accuracy, reported.accuracy);
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn eval_names_unknown_feature() {
    let dir = tempfile::tempdir().unwrap();
    let theory = dir.path().join("t.pl");
    fs::write(&theory, "acceptable(A) :- colour(A,red).\n").unwrap();
    let cfg = repo().join("configs/cars.conf");
    let o = shapfold(&[
        "eval",
        "-t",
        theory.to_str().unwrap(),
        "-c",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn eval_reports_parse_line() {
    let dir = tempfile::tempdir().unwrap();
    let theory = dir.path().join("t.pl");
    fs::write(
        &theory,
        "acceptable(A) :- safety(A,high).\nacceptable(A) :- safety(A,\n",
    )
    .unwrap();
    let cfg = repo().join("configs/cars.conf");
    let o = shapfold(&[
        "eval",
        "-t",
        theory.to_str().unwrap(),
        "-c",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn eval_birds_default_with_exception() {
    let dir = tempfile::tempdir().unwrap();
    let data = bird_csv(dir.path());
    let theory = dir.path().join("birds.pl");
    fs::write(
        &theory,
        "flies(A) :- bird(A,yes), not ab0(A).\nab0(A) :- penguin(A,yes).\n",
    )
    .unwrap();
    let o = shapfold(&[
        "eval",
        "-t",
        theory.to_str().unwrap(),
        "--rows",
        "all",
        "--data",
        data.to_str().unwrap(),
        "--set",
        "label=class",
        "--set",
        "positive=flies",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics_in(&stdout(&o));
    assert_eq!((m.tp, m.fp, m.tn, m.fn_), (5, 0, 15, 0));

    // without the exception penguins fly too
    fs::write(&theory, "flies(A) :- bird(A,yes).\n").unwrap();
    let o = shapfold(&[
        "eval",
        "-t",
        theory.to_str().unwrap(),
        "--rows",
        "all",
        "--data",
        data.to_str().unwrap(),
        "--set",
        "label=class",
        "--set",
        "positive=flies",
        "--seed",
        "5",
    ]);
    assert_eq!(metrics_in(&stdout(&o)).fp, 5);
}

#[test]
fn explain_csv_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/cars.conf");
    let o = shapfold(&[
        "explain",
        "-c",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("shap.csv")).unwrap();
    let columns = text.lines().next().unwrap().split(',').count();
    let shap = ShapMatrix::read_csv(text.as_bytes(), columns - 1).unwrap();
    let rows = fs::read_to_string(repo().join("data/cars.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    let train = shap.attributions.len();
    assert!(
        train > rows * 3 / 4 && train < rows * 17 / 20,
        "{train} of {rows}"
    );

    // fed back in, the stored attributions give the same run as a fresh one
    let fresh = tempfile::tempdir().unwrap();
    let a = shapfold(&[
        "run",
        "-c",
        cfg.to_str().unwrap(),
        "--out-dir",
        fresh.path().to_str().unwrap(),
    ]);
    let imported = dir.path().join("shap.csv");
    let b = shapfold(&[
        "run",
        "-c",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--set",
        &format!("shap_csv={}", imported.display()),
    ]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        fs::read_to_string(fresh.path().join("theory.pl")).unwrap(),
        fs::read_to_string(dir.path().join("theory.pl")).unwrap()
    );
}
