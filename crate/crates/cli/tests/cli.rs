use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use spice_oracles::{inverse_gauss_jordan, proximal_gradient_lasso, Mat};

fn spice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = spice(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn uniform_rows(n: usize, p: usize, seed: u64) -> Mat {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn write_csv(path: &Path, header: &[String], rows: &Mat) {
    let mut text = header.join(",") + "\n";
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
        text += &(cells.join(",") + "\n");
    }
    fs::write(path, text).unwrap();
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

// divisor n, mean-centered
fn covariance(rows: &Mat) -> Mat {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / n)
                .collect()
        })
        .collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn read_numeric(path: &Path) -> Mat {
    read_csv(path)
        .1
        .iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.into_iter().map(|f| (f.clone(), fs::read(&f).unwrap())).collect()
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|d| {
            let out = tmp.path().join(d);
            ok(&[
                "simulate", "--models", "omega1", "--p", "5", "--reps", "2", "--seed", "9", "--out", s(&out),
            ]);
            dir_bytes(&out)
                .into_iter()
                .map(|(p, b)| (p.file_name().unwrap().to_owned(), b))
                .collect::<Vec<_>>()
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn malformed_csv_exits_2_and_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "a,b\n1,2\n3,oops\n4,5\n").unwrap();
    let out = spice(&["estimate", "--input", s(&input), "--lambda", "0.1", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(spice(&["simulate", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn zero_penalty_returns_the_inverse_sample_covariance() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = uniform_rows(60, 6, 3);
    let input = tmp.path().join("x.csv");
    write_csv(&input, &names(6), &rows);
    let out = tmp.path().join("fit");
    ok(&["estimate", "--input", s(&input), "--lambda", "0", "--out", s(&out)]);
    let omega = read_numeric(&out.join("omega_hat.csv"));
    let expected = inverse_gauss_jordan(&covariance(&rows)).unwrap();
    assert!(max_diff(&omega, &expected) < 1e-6, "{}", max_diff(&omega, &expected));
}

#[test]
fn covariance_fit_matches_proximal_gradient() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = uniform_rows(40, 5, 11);
    let input = tmp.path().join("x.csv");
    write_csv(&input, &names(5), &rows);
    let out = tmp.path().join("fit");
    ok(&["estimate", "--input", s(&input), "--lambda", "0.02", "--mode", "cov", "--out", s(&out)]);
    let omega = read_numeric(&out.join("omega_hat.csv"));
    let (expected, _) = proximal_gradient_lasso(&covariance(&rows), 0.02, 1e-12, 200_000);
    assert!(max_diff(&omega, &expected) < 1e-5, "{}", max_diff(&omega, &expected));

    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for key in ["estimator = spice", "lambda = 0.02", "converged = true", "nnz_offdiag"] {
        assert!(report.contains(key), "{report}");
    }
    // the zero pattern agrees with the written matrix
    let mask = read_csv(&out.join("zero_pattern.csv")).1;
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                assert_eq!(mask[i][j] == "1", omega[i][j] == 0.0, "({i},{j}) {}", mask[i][j]);
            }
        }
    }
}

#[test]
fn omega_hat_round_trips_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = uniform_rows(30, 4, 5);
    let input = tmp.path().join("x.csv");
    write_csv(&input, &names(4), &rows);
    let out = tmp.path().join("fit");
    ok(&["estimate", "--input", s(&input), "--lambda", "0.05", "--out", s(&out)]);
    let path = out.join("omega_hat.csv");
    let first = fs::read(&path).unwrap();
    let m = spice_cli::io::read_matrix(&path).unwrap();
    let copy = tmp.path().join("copy.csv");
    spice_cli::io::write_matrix(&copy, &names(4), &m).unwrap();
    assert_eq!(first, fs::read(&copy).unwrap());
}

#[test]
fn non_spice_estimators_report_na() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("x.csv");
    write_csv(&input, &names(3), &uniform_rows(20, 3, 8));
    for est in ["lw", "sample", "naive_bayes"] {
        let out = tmp.path().join(est);
        ok(&["estimate", "--input", s(&input), "--estimator", est, "--out", s(&out)]);
        let report = fs::read_to_string(out.join("report.txt")).unwrap();
        assert!(report.contains("lambda = NA"), "{report}");
    }
    let nb = read_numeric(&tmp.path().join("naive_bayes").join("omega_hat.csv"));
    assert!((0..3).all(|i| (0..3).all(|j| i == j || nb[i][j] == 0.0)));
}

fn labeled(rows: &Mat, labels: &[u8], path: &Path) {
    let mut header = names(rows[0].len());
    header.push("label".into());
    let with: Mat = rows
        .iter()
        .zip(labels)
        .map(|(r, &l)| r.iter().copied().chain([l as f64]).collect())
        .collect();
    write_csv(path, &header, &with);
}

fn report_errors(path: &Path) -> Vec<(String, f64)> {
    read_csv(path)
        .1
        .into_iter()
        .map(|r| (format!("{}/{}", r[0], r[1]), r[2].parse().unwrap()))
        .collect()
}

#[test]
fn separable_classes_give_zero_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rows = uniform_rows(30, 4, 21);
    let labels: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
    for (r, &l) in rows.iter_mut().zip(&labels) {
        r[0] += if l == 1 { 10.0 } else { -10.0 };
    }
    let input = tmp.path().join("x.csv");
    labeled(&rows, &labels, &input);
    let out = tmp.path().join("c");
    ok(&["classify", "--input", s(&input), "--splits", "5", "--folds", "3", "--out", s(&out)]);
    let errs = report_errors(&out.join("classification_report.csv"));
    assert_eq!(errs.len(), 3, "{errs:?}");
    for (name, e) in errs {
        assert_eq!(e, 0.0, "{name}");
    }
}

#[test]
fn null_labels_are_near_chance_and_classify_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = uniform_rows(60, 4, 33);
    let labels: Vec<u8> = (0..60).map(|i| (i % 2) as u8).collect();
    let input = tmp.path().join("x.csv");
    labeled(&rows, &labels, &input);
    let run = |d: &str| {
        let out = tmp.path().join(d);
        ok(&[
            "classify", "--input", s(&input), "--splits", "20", "--folds", "3", "--seed", "4", "--out", s(&out),
        ]);
        fs::read(out.join("classification_report.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    for (name, e) in report_errors(&tmp.path().join("a").join("classification_report.csv")) {
        assert!((30.0..=70.0).contains(&e), "{name}: {e}");
    }
}

#[test]
fn bench_writes_one_row_per_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["bench", "--p", "8", "--n", "50", "--repeats", "1", "--out", s(tmp.path())]);
    let (header, rows) = read_csv(&tmp.path().join("timing.csv"));
    assert_eq!(header, ["p", "seconds", "outer_iters"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "8");
}

fn kl_rows(dir: &Path) -> Vec<Vec<String>> {
    read_csv(&dir.join("kl_summary.csv")).1
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from_config");
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# small run\nmodels = omega1\np = 4\nn = 40\nreps = 1\nseed = 3\nestimators = spice,lw\nout = {}\n",
            s(&out)
        ),
    )
    .unwrap();
    ok(&["simulate", "--config", s(&cfg), "--reps", "2"]);
    let rows = kl_rows(&out);
    assert_eq!(rows.len(), 2, "{rows:?}");
    assert!(rows.iter().all(|r| r[5] == "2"), "{rows:?}");

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    assert_eq!(spice(&["simulate", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn sample_estimator_is_na_when_p_exceeds_n() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "simulate", "--models", "omega1", "--p", "12", "--n", "10", "--reps", "1", "--grid", "0.1:1:3", "--out",
        s(tmp.path()),
    ]);
    let rows = kl_rows(tmp.path());
    let sample = rows.iter().find(|r| r[2] == "sample").expect("sample row");
    assert_eq!(sample[3], "NA");
    let spice = rows.iter().find(|r| r[2] == "spice").unwrap();
    assert!(spice[3].parse::<f64>().unwrap() > 0.0);
}
