use np_g2::analysis::metric_norms_at;
use np_g2::g2_algebra::{is_admissible, metric_blocks_unchecked, FCoeffs};
use np_g2::integrate::{solve, SolveConfig, Termination};
use np_g2::checks::row_residuals;
use np_g2::np_system::{constraints, oracle, rescale, Oracle, OracleName, SolutionPath, TauElement, Transformed};
use np_g2::singular_ivp::{b_field, characteristic_polynomial, linearization, rhs_h, rhs_h_via_f, HState};
use proptest::prelude::*;

fn small_ints() -> impl Strategy<Value = FCoeffs> {
    prop::array::uniform5(-1000i32..1000).prop_map(|a| FCoeffs::from_array(a.map(f64::from)))
}

fn oracle_name() -> impl Strategy<Value = OracleName> {
    prop::sample::select(OracleName::ALL.to_vec())
}

fn permutation() -> impl Strategy<Value = TauElement> {
    prop::sample::select(TauElement::PERMUTATIONS.to_vec())
}

fn max_residual<P: SolutionPath>(p: &P, t: f64) -> f64 {
    let (f, fp) = p.eval(t).unwrap();
    row_residuals(&f, &fp, p.lambda()).into_iter().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    // integer inputs keep every sum exact, so the group law must hold bitwise
    #[test]
    fn s3_composition_is_exact(v in small_ints(), g in permutation(), h in permutation()) {
        let k = g.compose(h).expect("the six elements close under composition");
        prop_assert_eq!(g.apply(&h.apply(&v)), k.apply(&v));
    }

    #[test]
    fn s3_composition_is_associative(g in permutation(), h in permutation(), k in permutation()) {
        let left = g.compose(h).unwrap().compose(k).unwrap();
        let right = g.compose(h.compose(k).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn transpositions_are_involutions(v in small_ints()) {
        for t in [TauElement::T12, TauElement::T13, TauElement::T23] {
            prop_assert_eq!(t.apply(&t.apply(&v)), v);
        }
        let c = TauElement::T123;
        prop_assert_eq!(c.apply(&c.apply(&c.apply(&v))), v);
    }

    #[test]
    fn transformed_oracles_solve_the_system(name in oracle_name(), tau in permutation(), u in 0.02f64..0.98) {
        let (lo, hi) = name.domain();
        let t = lo + u * (hi - lo);
        let p = Transformed { inner: Oracle(name), tau };
        prop_assert!(max_residual(&p, t) < 1e-11);
    }

    #[test]
    fn time_reflected_oracles_solve_the_system(name in oracle_name(), u in 0.02f64..0.98) {
        let (lo, hi) = name.domain();
        let t = -(lo + u * (hi - lo));
        let p = Transformed { inner: Oracle(name), tau: TauElement::O };
        prop_assert!(max_residual(&p, t) < 1e-11);
    }

    #[test]
    fn rescaled_oracles_solve_the_system(name in oracle_name(), mu in 0.1f64..20.0, u in 0.02f64..0.98) {
        let p = rescale(Oracle(name), mu);
        let (lo, hi) = p.domain();
        prop_assert!(max_residual(&p, lo + u * (hi - lo)) < 1e-11);
        prop_assert!((p.lambda() - name.lambda() / mu).abs() < 1e-15);
    }

    #[test]
    fn constraints_are_tau_covariant(name in oracle_name(), tau in permutation(), u in 0.05f64..0.95) {
        let (lo, hi) = name.domain();
        let s = oracle(name, lo + u * (hi - lo)).unwrap();
        let g = tau.apply(&s.f);
        let c = constraints(&g, s.lambda);
        prop_assert!(c.r1.abs() < 1e-11 && c.r2.abs() < 1e-9 * (1.0 + g.max_abs().powi(4)));
    }

    #[test]
    fn shifted_determinant(a in prop_oneof![-100.0f64..-0.5, 0.5f64..100.0], lambda in 0.2f64..5.0, l in 0u32..=10) {
        let m = linearization(a, lambda).unwrap();
        let l = f64::from(l);
        let want = characteristic_polynomial(l);
        prop_assert!((m.shifted_det(l) - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn b_is_odd_and_rhs_forms_agree(
        h0 in prop_oneof![-40.0f64..-1.0, 1.0f64..40.0],
        h1 in 1.0f64..10.0,
        h2 in -50.0f64..50.0,
        h3 in -100.0f64..100.0,
        t in 0.01f64..1.0,
        lambda in 0.5f64..3.0,
    ) {
        let h = HState::new(h0, h1, h2, h3);
        let (p, m) = (b_field(&h, t, lambda).unwrap(), b_field(&h, -t, lambda).unwrap());
        for i in 0..4 {
            prop_assert_eq!(p[i], -m[i]);
        }
        let (x, y) = (rhs_h(&h, t, lambda), rhs_h_via_f(&h, t, lambda));
        let scale = x.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        for i in 0..4 {
            prop_assert!((x[i] - y[i]).abs() <= 1e-9 * scale, "{:?} {:?}", x, y);
        }
    }

    #[test]
    fn g3_bilinearity(v in prop::array::uniform5(-10.0f64..10.0)) {
        let f = FCoeffs::from_array(v);
        prop_assume!(is_admissible(&f));
        let (g1, g2, g3) = metric_norms_at(&f).unwrap();
        let m = metric_blocks_unchecked(&f);
        // |e + e'|^2 = |e|^2 + |e'|^2 + 2 <e, e'>
        prop_assert!((g3 - (m.g1 + m.g2 + 2.0 * m.g3)).abs() <= 1e-12 * (g1 + g2 + m.g3.abs()));
        prop_assert!((m.g1 - g1).abs() <= 1e-12 * g1 && (m.g2 - g2).abs() <= 1e-12 * g2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn family_exists_near_the_singular_orbit(a in 1.0f64..100.0) {
        let mut c = SolveConfig::new(a);
        c.t_max = 0.5;
        let tr = solve(&c).unwrap();
        prop_assert_eq!(tr.termination, Termination::ReachedTMax { t: 0.5 });
        prop_assert!(tr.max_drift < 1e-8);
        prop_assert!(tr.samples.iter().skip(1).all(|s| is_admissible(&s.f)));
        let g2_0 = tr.samples[0].metric.g2;
        prop_assert!((g2_0 - a * a / 9.0).abs() <= 1e-12 * g2_0);
    }
}
