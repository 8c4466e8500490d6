use std::path::Path;
use std::process::{Command, Output};

fn quaddiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quaddiag"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key}= in output:\n{text}"))
}

fn write_mm(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    format!("mm:{}", path.display())
}

const EXAMPLE: &str = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2\n1 2 1\n2 2 3\n";

#[test]
fn estimate_is_deterministic_and_close() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_mm(dir.path(), "ex.mtx", EXAMPLE);
    let args = ["estimate", "--matrix", &m, "--n", "200000", "--seed", "9"];
    let a = quaddiag(&args);
    let b = quaddiag(&[
        "--threads",
        "3",
        "estimate",
        "--matrix",
        &m,
        "--n",
        "200000",
        "--seed",
        "9",
    ]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("wall_time_ms="));

    let out = stdout(&a);
    assert!(out.contains("queries=200000"));
    let g: Vec<f64> = out
        .lines()
        .skip_while(|l| *l != "index,estimate")
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // Five standard errors: sqrt(V_p / 4N) with V = 480, 820.
    assert!((g[0] - 2.0).abs() < 5.0 * (480.0f64 / 800_000.0).sqrt(), "{g:?}");
    assert!((g[1] - 3.0).abs() < 5.0 * (820.0f64 / 800_000.0).sqrt(), "{g:?}");
}

#[test]
fn estimate_median_reports_total_queries() {
    let o = quaddiag(&["estimate", "--matrix", "gauss:4", "--n", "50", "--median-T", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# samples=50 repeats=3 queries=150 seed=0"));
}

#[test]
fn predict_matches_frozen_sample_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_mm(dir.path(), "ex.mtx", EXAMPLE);

    let o = quaddiag(&["predict", "--matrix", &m, "--eps", "1", "--delta", "0.25", "--p", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(value(&out, "variance"), "480");
    assert_eq!(value(&out, "N"), "480");

    let o = quaddiag(&[
        "predict", "--matrix", &m, "--eps", "1", "--delta", "0.05", "--p", "first", "--median",
    ]);
    let out = stdout(&o);
    assert_eq!(value(&out, "N_prime"), "480");
    assert_eq!(value(&out, "T"), "24");
    assert_eq!(value(&out, "total_queries"), "11520");

    // Norm-wise: 1300 / (4 * 0.1 * 0.5 * 13) = 500.
    let o = quaddiag(&[
        "predict",
        "--matrix",
        &m,
        "--eps",
        "0.1",
        "--delta",
        "0.5",
        "--normwise",
    ]);
    let out = stdout(&o);
    assert_eq!(value(&out, "total_variance"), "1300");
    assert_eq!(value(&out, "N"), "500");
    assert_eq!(value(&out, "printed_closed_form"), "1400");
    assert_eq!(value(&out, "corrected_closed_form"), "1300");
}

#[test]
fn predict_grows_as_delta_shrinks() {
    let n = |delta: &str| -> u64 {
        let o = quaddiag(&[
            "predict", "--matrix", "gauss:6", "--eps", "0.1", "--delta", delta, "--p", "argmax",
        ]);
        value(&stdout(&o), "N").parse().unwrap()
    };
    assert!(n("0.9999") < n("0.5"));
    assert!(n("0.5") < n("0.0001"));
}

#[test]
fn experiment_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = quaddiag(&["experiment", "--matrix", "gauss:20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("matrix,selector,N,emp_rel_err_mean,theo_rel_err,repeats,seed")
    );
    assert_eq!(lines.count(), 28);
    for sel in ["first", "argmax", "argmin", "normwise"] {
        let svg = std::fs::read_to_string(out.join(format!("gauss_20_{sel}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    }
}

#[test]
fn zero_matrix_gives_nan_rows_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_mm(
        dir.path(),
        "zero.mtx",
        "%%MatrixMarket matrix coordinate real general\n3 3 0\n",
    );
    let out = dir.path().join("out");
    let o = quaddiag(&[
        "experiment",
        "--matrix",
        &m,
        "--grid",
        "10,20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!((cols[3], cols[4]), ("NaN", "NaN"), "{row}");
    }
}

#[test]
fn missing_matrix_market_file_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = quaddiag(&[
        "experiment",
        "--matrix",
        "mm:/nonexistent/msc10480.mtx",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping"));
    assert!(!out.join("results.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| quaddiag(args).status.code().unwrap();

    assert_eq!(code(&["estimate", "--matrix", "gauss:3", "--n", "10"]), 0);
    // Usage errors.
    assert_eq!(code(&["estimate", "--matrix", "gauss:3"]), 1);
    assert_eq!(code(&["estimate", "--matrix", "bogus:3", "--n", "10"]), 1);
    assert_eq!(code(&["estimate", "--matrix", "gauss:3", "--n", "0"]), 1);
    assert_eq!(code(&["estimate", "--matrix", "gauss:99999999999", "--n", "1"]), 1);
    assert_eq!(
        code(&["predict", "--matrix", "gauss:3", "--eps", "1", "--delta", "1.5"]),
        1
    );
    assert_eq!(
        code(&["predict", "--matrix", "gauss:3", "--eps", "1", "--delta", "0.5", "--p", "4"]),
        1
    );
    assert_eq!(
        code(&["experiment", "--matrix", "gauss:3", "--grid", "5,5", "--out", "x"]),
        1
    );
    // I/O and parse failures.
    assert_eq!(code(&["estimate", "--matrix", "mm:/nonexistent.mtx", "--n", "10"]), 2);
    let bad = write_mm(
        dir.path(),
        "bad.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n",
    );
    assert_eq!(code(&["estimate", "--matrix", &bad, "--n", "10"]), 2);
    let rect = write_mm(
        dir.path(),
        "rect.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 3 0\n",
    );
    assert_eq!(code(&["estimate", "--matrix", &rect, "--n", "10"]), 2);
    // An absolute element-wise target is fine on a zero matrix; the relative
    // norm-wise one is not.
    let zero = write_mm(
        dir.path(),
        "zero.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 0\n",
    );
    assert_eq!(
        code(&["predict", "--matrix", &zero, "--eps", "0.1", "--delta", "0.5", "--p", "1"]),
        0
    );
    assert_eq!(
        code(&[
            "predict",
            "--matrix",
            &zero,
            "--eps",
            "0.1",
            "--delta",
            "0.5",
            "--normwise"
        ]),
        3
    );
}
