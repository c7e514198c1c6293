use std::f64::consts::PI;

use np_g2::analysis::{
    classify_homogeneous, closing_diagnostics, closing_diagnostics_at_start, g2_quadratic_coefficient,
    g2_quadratic_expected, metric_norms, sweep, ClosingOptions, HomogeneityClass, SweepOptions, Verdict,
};
use np_g2::integrate::{solve, SolveConfig, Termination, Trajectory};

fn run(a: f64, t_max: f64) -> Trajectory {
    let mut c = SolveConfig::new(a);
    c.t_max = t_max;
    solve(&c).unwrap()
}

#[test]
fn homogeneous_runs_are_recognised() {
    let cases = [
        (-36.0, HomogeneityClass::RoundLike),
        (108.0 / 5.0, HomogeneityClass::SquashedLike),
        (36.0, HomogeneityClass::RoundLike),
        (-108.0 / 5.0, HomogeneityClass::SquashedLike),
        (10.0, HomogeneityClass::Generic),
    ];
    for (a, want) in cases {
        let c = classify_homogeneous(&run(a, 3.0), 1e-5);
        assert_eq!(c.class, want, "a = {a}: {c:?}");
    }
}

#[test]
fn classification_is_stable_under_tighter_tolerances() {
    for (a, want) in [(-36.0, HomogeneityClass::RoundLike), (108.0 / 5.0, HomogeneityClass::SquashedLike)] {
        let mut c = SolveConfig::new(a);
        c.rtol /= 10.0;
        c.atol /= 10.0;
        let got = classify_homogeneous(&solve(&c).unwrap(), 1e-5);
        assert_eq!(got.class, want);
        assert!(got.distance_round.min(got.distance_squashed) < 1e-7, "{got:?}");
    }
}

#[test]
fn homogeneous_runs_close() {
    let cases = [(-36.0, 2.0 * PI, 7.0), (108.0 / 5.0, 6.0 * PI / 5f64.sqrt(), 9.0)];
    for (a, t_star, t_max) in cases {
        let tr = run(a, t_max);
        match tr.termination {
            Termination::H0Zero { t_star: t } => assert!((t - t_star).abs() < 1e-4, "a = {a}: {t}"),
            other => panic!("a = {a}: {other}"),
        }
        let r = closing_diagnostics(&tr, &ClosingOptions::default(), 1e-5).unwrap();
        assert_eq!(r.verdict, Verdict::ClosesWithinTol, "a = {a}: {:?}", r.residuals);
        assert!((r.t_star - t_star).abs() < 1e-4);
        let s = closing_diagnostics_at_start(&tr, &ClosingOptions::default(), 1e-5).unwrap();
        assert!(s.verdict.closes(), "a = {a}: {:?}", s.residuals);
    }
}

#[test]
fn g2_quadratic_coefficients() {
    for a in [-36.0, 108.0 / 5.0, 10.0, 50.0] {
        let want = g2_quadratic_expected(a);
        let got = g2_quadratic_coefficient(&run(a, 0.5)).unwrap();
        assert!((got - want).abs() <= 1e-4 * want.abs(), "a = {a}: {got} vs {want}");
    }
    // the coefficient vanishes at a = 36
    assert_eq!(g2_quadratic_expected(36.0), 0.0);
    let got = g2_quadratic_coefficient(&run(36.0, 0.5)).unwrap();
    assert!(got.abs() < 1e-4, "{got}");
    assert!((g2_quadratic_expected(108.0 / 5.0) - 27.0 / 5.0).abs() < 1e-12);
}

#[test]
fn g2_tends_to_a_squared_over_nine() {
    for a in [-36.0, 10.0, 50.0] {
        let tr = run(a, 0.5);
        assert!(metric_norms(&tr).is_ok());
        let g2 = tr.sample_at(1e-3).unwrap().metric.g2;
        let limit = a * a / 9.0;
        assert!((g2 - limit).abs() <= 1e-6 * limit.max(1.0), "a = {a}: {g2}");
    }
}

#[test]
fn sweeps_report_each_row() {
    let mut base = SolveConfig::new(1.0);
    base.t_max = 9.0;
    let rows = sweep(&[-36.0, 108.0 / 5.0], &SweepOptions::new(base)).unwrap();
    assert_eq!(rows[0].class, Some(HomogeneityClass::RoundLike));
    assert_eq!(rows[1].class, Some(HomogeneityClass::SquashedLike));
    for r in &rows {
        assert_eq!(r.closing_verdict.as_deref(), Some("closes_within_tol"), "{r:?}");
        assert!(r.error.is_none());
    }

    base.t_max = 0.5;
    let rows = sweep(&[10.0, 20.0, 50.0], &SweepOptions::new(base)).unwrap();
    assert_eq!(rows.iter().map(|r| r.a).collect::<Vec<_>>(), vec![10.0, 20.0, 50.0]);
    for r in &rows {
        assert_eq!(r.termination, Some(Termination::ReachedTMax { t: 0.5 }));
        assert_eq!(r.class, Some(HomogeneityClass::Generic));
        assert_eq!(r.closing_verdict.as_deref(), Some("no_degeneration"));
        assert!(r.max_drift.unwrap() < 1e-8);
    }
}
