use std::path::PathBuf;
use std::process::{Command, Output};

fn hgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgm"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn parse_csv(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| {
            let row: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(row.len(), header.len(), "ragged row {l}");
            row
        })
        .collect();
    (header, rows)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hgm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const EASY: &[&str] = &["--m", "3", "--beta", "1,2,3", "--n1", "10", "--n2", "20", "--q", "300"];

#[test]
fn moderate_beta_curve_is_monotone_and_saturates() {
    let out = hgm(&[&["p2wishart"], EASY, &["--series-error", "1e-12"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&out);
    assert_eq!(header, ["x", "prob"]);
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][0], 0.3);
    assert_eq!(rows[99][0], 300.0);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0] && w[0][1] <= w[1][1]));
    assert!(rows[99][1] > 0.999);
    // geometric spacing
    let r1 = rows[1][0] / rows[0][0];
    let r2 = rows[99][0] / rows[98][0];
    assert!((r1 - r2).abs() < 1e-9);
}

#[test]
fn spread_beta_with_tight_abserr_has_no_dip() {
    let out = hgm(&[
        "p2wishart", "--m", "3", "--beta", "1,20,300", "--n1", "10", "--n2", "20", "--q", "500", "--err",
        "1e-30,1e-10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(!stderr.contains("abserr seems not"), "{stderr}");
    let (_, rows) = parse_csv(&out);
    assert!(rows.windows(2).all(|w| w[0][1] <= w[1][1]));
    assert!(rows[99][1] > 0.97);
}

#[test]
fn loose_abserr_warns_on_stderr_only() {
    let out = hgm(&[
        "p2wishart", "--m", "3", "--beta", "1,20,300", "--n1", "10", "--n2", "20", "--q", "500", "--abserr",
        "1e-10", "--grid-points", "10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("abserr seems not to be small enough"));
    let (header, rows) = parse_csv(&out);
    assert_eq!(header.len(), 2);
    assert_eq!(rows.len(), 10);
}

#[test]
fn tied_beta_exits_five_and_points_to_null() {
    let out = hgm(&["p2wishart", "--m", "3", "--beta", "1,1,1", "--n1", "10", "--n2", "20", "--q", "5"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hgm null"));
}

#[test]
fn parameter_errors_exit_two() {
    for args in [
        &["p2wishart", "--m", "3", "--beta", "1,2", "--n1", "10", "--n2", "20", "--q", "5"][..],
        &["p2wishart", "--m", "2", "--beta", "1,2", "--n1", "10", "--n2", "20", "--q", "0.1"],
        &["p2wishart", "--m", "2", "--beta", "1,2", "--n1", "10", "--n2", "20", "--q", "5", "--grid-points", "1"],
        &["p2wishart", "--m", "2", "--beta", "1,2", "--n1", "1", "--n2", "20", "--q", "5"],
        &["p2wishart", "--m", "2", "--beta", "1,2", "--n1", "4", "--n2", "20", "--q", "5", "--err", "1e-20"],
        &["null", "--m", "2", "--beta", "1,2", "--n1", "4", "--n2", "6", "--q", "5"],
        &["p2wishart", "--m", "2"],
    ] {
        let out = hgm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn hopeless_initial_value_exits_three() {
    let out = hgm(&["p2wishart", "--m", "3", "--beta", "1,20,300", "--n1", "300", "--n2", "200", "--q", "1", "--q0", "0.1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn null_polynomial_and_series_agree() {
    let poly = hgm(&["null", "--m", "3", "--n1", "6", "--n2", "10", "--q", "10", "--grid-points", "7"]);
    // n2 = 11 makes (n2 - m - 1)/2 fractional, so the series branch runs
    let series = hgm(&["null", "--m", "3", "--n1", "6", "--n2", "11", "--q", "10", "--grid-points", "7"]);
    assert_eq!(poly.status.code(), Some(0));
    assert_eq!(series.status.code(), Some(0));
    let (_, a) = parse_csv(&poly);
    let (_, b) = parse_csv(&series);
    for (p, s) in a.iter().zip(&b) {
        // more denominator freedom pushes l1 down
        assert!(s[1] >= p[1] - 1e-12, "{p:?} {s:?}");
    }
    let scaled = hgm(&[
        "null", "--m", "3", "--beta", "2,2,2", "--n1", "6", "--n2", "10", "--q", "20", "--q0", "0.6", "--grid-points",
        "7",
    ]);
    let (_, c) = parse_csv(&scaled);
    for (p, s) in a.iter().zip(&c) {
        assert!((p[1] - s[1]).abs() < 1e-14);
    }
}

#[test]
fn minroot_tail_decreases_and_density_is_positive() {
    let base = ["--m", "2", "--beta", "1,2", "--n1", "6", "--n2", "8", "--q", "5", "--grid-points", "12"];
    let tail = hgm(&[&["minroot"], &base[..]].concat());
    assert_eq!(tail.status.code(), Some(0));
    let (_, rows) = parse_csv(&tail);
    assert!(rows.windows(2).all(|w| w[0][1] >= w[1][1]));
    assert!(rows[0][1] < 1.0 && rows[11][1] > 0.0);
    let dens = hgm(&[&["density"], &base[..]].concat());
    let (header, rows) = parse_csv(&dens);
    assert_eq!(header, ["x", "density"]);
    assert!(rows.iter().all(|r| r[1] > 0.0));
}

#[test]
fn mc_check_columns_and_env_overrides() {
    let out = Command::new(env!("CARGO_BIN_EXE_hgm"))
        .args(["mc-check", "--m", "2", "--beta", "1,2", "--n1", "6", "--n2", "8", "--q", "5"])
        .env_clear()
        .env("HGM_GRID_POINTS", "4")
        .env("HGM_N_SAMPLES", "20000")
        .env("HGM_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&out);
    assert_eq!(header, ["x", "prob", "mc_prob", "mc_se"]);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 4.0 * r[3].max(1e-4), "{r:?}");
    }
}

#[test]
fn output_is_bit_stable_and_gnuplot_script_references_it() {
    let csv = scratch("curve.csv");
    let gp = scratch("curve.gp");
    let args = [
        &["p2wishart"],
        EASY,
        &["--grid-points", "20", "--out", csv.to_str().unwrap(), "--gnuplot", gp.to_str().unwrap()],
    ]
    .concat();
    let first = hgm(&args);
    assert_eq!(first.status.code(), Some(0));
    assert!(first.stdout.is_empty());
    let a = std::fs::read(&csv).unwrap();
    let second = hgm(&[&["p2wishart"], EASY, &["--grid-points", "20"]].concat());
    assert_eq!(a, second.stdout);
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains(csv.to_str().unwrap()));
    assert!(script.contains("logscale x"));
    let line = String::from_utf8(a).unwrap().lines().nth(1).unwrap().to_string();
    // 17 significant digits
    assert_eq!(line.split(',').next().unwrap(), "2.9999999999999999e-1");
}

#[test]
fn linear_grid_and_err_alias() {
    let out = hgm(&[&["p2wishart"], EASY, &["--linear", "--grid-points", "4", "--err", "1e-20,1e-9"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = parse_csv(&out);
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert!((xs[1] - xs[0] - (xs[3] - xs[2])).abs() < 1e-9);
}
