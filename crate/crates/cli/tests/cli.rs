use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_np-g2")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn oracle_check_exit_codes() {
    for name in ["round_sphere", "squashed_sphere", "sine_cone"] {
        let o = run(&["oracle-check", name, "--samples", "1000", "--tol", "1e-9"]);
        assert_eq!(code(&o), 0, "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("pass"));
    }
    assert_eq!(code(&run(&["oracle-check", "flat"])), 2);
    assert_eq!(code(&run(&["oracle-check", "round_sphere", "--samples", "1"])), 2);
    assert_eq!(code(&run(&["oracle-check", "round_sphere", "--tol", "1e-18"])), 1);
}

#[test]
fn solve_summaries() {
    let dir = TempDir::new().unwrap();
    let json = p(&dir, "s.json");
    let o = run(&["solve", "--a", "-36", "--summary", &json]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["classification"], "round_like");
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 7, "{keys:?}");
    for k in ["a", "lambda", "termination", "t_star", "max_drift", "classification", "closing_report"] {
        assert!(keys.contains(&k), "{k}");
    }

    let o = run(&["solve", "--a", "21.6"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"], "squashed_like");
    assert_eq!(v["termination"]["kind"], "reached_t_max");
    assert!(v["closing_report"].is_null());

    assert_eq!(code(&run(&["solve", "--a", "0"])), 2);
    assert_eq!(code(&run(&["solve"])), 2);
    assert_eq!(code(&run(&["solve", "--a", "1", "--rtol", "-1"])), 2);
    assert_eq!(code(&run(&["solve", "--a", "1", "--bogus", "3"])), 2);
}

#[test]
fn degenerating_solve_closes() {
    let o = run(&["solve", "--a", "21.6", "--t-max", "12"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t_star = v["t_star"].as_f64().unwrap();
    assert!((t_star - 6.0 * std::f64::consts::PI / 5f64.sqrt()).abs() < 1e-4);
    assert_eq!(v["closing_report"]["verdict"]["verdict"], "closes_within_tol");
}

#[test]
fn csv_round_trip_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    assert_eq!(code(&run(&["solve", "--a", "10", "--output", &a])), 0);
    // the identity transform rewrites the file through the reader
    assert_eq!(code(&run(&["transform", "--tau", "id", &a, "--output", &b])), 0);
    let (sa, sb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(sb.strip_suffix("# tau=id\n").unwrap(), sa);
    let header = sa.lines().next().unwrap();
    assert_eq!(header, "t,f0,f1,f2,f3,f4,g1,g2,g3,R1,R2");
    assert!(sa.lines().filter(|l| !l.starts_with('#')).all(|l| l.split(',').count() == 11));
    assert!(sa.contains("# termination=reached_t_max\n# a=1.0000000000000000e1\n# lambda=1.0000000000000000e0\n"));
}

fn f_columns(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').take(6).map(str::to_string).collect())
        .collect()
}

#[test]
fn transform_and_residual() {
    let dir = TempDir::new().unwrap();
    let (orc, t12, t13, t1313, o) = (p(&dir, "o.csv"), p(&dir, "12.csv"), p(&dir, "13.csv"), p(&dir, "1313.csv"), p(&dir, "r.csv"));
    assert_eq!(code(&run(&["oracle-check", "round_sphere", "--samples", "1570", "--output", &orc])), 0);
    assert_eq!(code(&run(&["residual", &orc])), 0);

    assert_eq!(code(&run(&["transform", "--tau", "12", &orc, "--output", &t12])), 0);
    let (a, b) = (f_columns(Path::new(&orc)), f_columns(Path::new(&t12)));
    for (ra, rb) in a.iter().zip(&b) {
        let x = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
        assert_eq!(x(rb, 0), x(ra, 0));
        assert_eq!(x(rb, 1), -x(ra, 1));
        assert_eq!((x(rb, 2), x(rb, 3), x(rb, 4), x(rb, 5)), (x(ra, 3), x(ra, 2), x(ra, 5), x(ra, 4)));
    }
    let r = run(&["residual", &t12, "--tol", "1e-9"]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));

    assert_eq!(code(&run(&["transform", "--tau", "13", &orc, "--output", &t13])), 0);
    assert_eq!(code(&run(&["transform", "--tau", "13", &t13, "--output", &t1313])), 0);
    let back = f_columns(Path::new(&t1313));
    for (ra, rb) in a.iter().zip(&back) {
        for i in 0..6 {
            let (x, y): (f64, f64) = (ra[i].parse().unwrap(), rb[i].parse().unwrap());
            assert!((x - y).abs() <= 1e-14 * x.abs().max(10.0), "{x} {y}");
        }
    }

    assert_eq!(code(&run(&["transform", "--tau", "o", &orc, "--output", &o])), 0);
    assert_eq!(code(&run(&["residual", &o])), 0);
    assert_eq!(code(&run(&["transform", "--tau", "14", &orc])), 2);
}

#[test]
fn residual_failures() {
    let dir = TempDir::new().unwrap();
    let orc = p(&dir, "o.csv");
    assert_eq!(code(&run(&["oracle-check", "round_sphere", "--samples", "1570", "--output", &orc])), 0);
    let text = fs::read_to_string(&orc).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[800].split(',').map(str::to_string).collect();
    let t_bad = cells[0].clone();
    let f2: f64 = cells[3].parse().unwrap();
    cells[3] = format!("{:.16e}", f2 * 1.001);
    lines[800] = cells.join(",");
    let bad = p(&dir, "bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = run(&["residual", &bad]);
    assert_eq!(code(&o), 1);
    let t: f64 = t_bad.parse().unwrap();
    assert!(stdout(&o).contains("max constraint residual"), "{}", stdout(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(&format!("at t = {t}")), "{}", stdout(&o));

    let short = p(&dir, "short.csv");
    fs::write(&short, lines[..4].join("\n") + "\n# lambda=4\n").unwrap();
    assert_eq!(code(&run(&["residual", &short])), 2);
    fs::write(&short, "t,f0\n1,2\n").unwrap();
    assert_eq!(code(&run(&["residual", &short])), 2);
    assert_eq!(code(&run(&["residual", &p(&dir, "missing.csv")])), 2);
}

#[test]
fn sweeps() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "sweep.csv");
    let o = run(&["sweep", "--a-from", "1", "--a-to", "100", "--steps", "50", "--t-max", "0.5", "--output", &out]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "a,termination,t_star,max_drift,class,closing_verdict,closing_residual");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 50);
    let mut prev = f64::NEG_INFINITY;
    for r in &rows {
        let a: f64 = r[0].parse().unwrap();
        assert!(a > prev);
        prev = a;
        assert!(r[3].parse::<f64>().unwrap() < 1e-8);
    }

    let o = run(&["sweep", "--a-from", "-36", "--a-to", "-36", "--steps", "1", "--t-max", "10"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let row: Vec<&str> = s.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "round_like");
    assert_eq!(row[5], "closes_within_tol");

    assert_eq!(code(&run(&["sweep", "--a-from", "-1", "--a-to", "1", "--steps", "3"])), 2);
    let o = run(&["sweep", "--a-from", "-1", "--a-to", "1", "--steps", "3", "--split"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 3);
}
