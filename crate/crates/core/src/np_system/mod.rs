//! The nearly parallel system `d phi = lambda * phi` on the regular part,
//! written as an ODE for `(f0, ..., f4)` together with its two algebraic
//! first integrals.

mod oracle;
mod tau;

pub use oracle::{oracle, printed_metric, Oracle, OracleName, OracleSample};
pub use tau::{rescale, to_unit_lambda, Rescaled, SolutionPath, TauElement, Transformed};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2_algebra::{exterior_derivative, g11_residual, hodge_dual_unchecked, is_admissible, FCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValues {
    /// `f3 + f4 + (lambda / 6) f0^2`
    pub r1: f64,
    /// `b1 b2 - b3^2 - f0^6`
    pub r2: f64,
}

/// `(f0', f1', f2', f3', f4')`. Fails on non-admissible input.
pub fn rhs_f(f: &FCoeffs, lambda: f64) -> Result<FCoeffs> {
    if !is_admissible(f) {
        return Err(Error::NonAdmissible);
    }
    Ok(rhs_f_unchecked(f, lambda))
}

pub fn rhs_f_unchecked(f: &FCoeffs, lambda: f64) -> FCoeffs {
    let FCoeffs { f0, f1, f2, f3, f4 } = *f;
    let b1 = f1 * f4 - f3 * f3;
    let b2 = f2 * f3 - f4 * f4;
    let half_b3 = 0.5 * (f1 * f2 - f3 * f4);
    let inv3 = 1.0 / (f0 * f0 * f0);
    FCoeffs {
        f0: -1.5 / (f0 * f0 * f0 * f0) * ((f1 + f3) * b2 - (f2 + f4) * b1),
        f1: lambda * inv3 * (f1 * half_b3 - f3 * b1),
        f2: lambda * inv3 * (f4 * b2 - f2 * half_b3),
        f3: 6.0 * f0 + 0.5 * lambda * inv3 * (f1 * b2 - f4 * b1),
        f4: -6.0 * f0 + 0.5 * lambda * inv3 * (f3 * b2 - f2 * b1),
    }
}

pub fn constraints(f: &FCoeffs, lambda: f64) -> ConstraintValues {
    ConstraintValues {
        r1: f.f3 + f.f4 + lambda / 6.0 * f.f0 * f.f0,
        r2: f.b1() * f.b2() - f.b3() * f.b3() - f.f0.powi(6),
    }
}

/// Magnitude against which `R2` is judged: the sum of the absolute values of
/// its three terms. Vanishes only where the form degenerates completely.
pub fn r2_scale(f: &FCoeffs) -> f64 {
    (f.b1() * f.b2()).abs() + f.b3() * f.b3() + f.f0.powi(6)
}

/// `|R2| / r2_scale`, the scale-free constraint drift.
pub fn normalized_drift(f: &FCoeffs, lambda: f64) -> f64 {
    let scale = r2_scale(f);
    if scale == 0.0 {
        return 0.0;
    }
    constraints(f, lambda).r2.abs() / scale
}

/// Components of `d phi - lambda * phi` followed by the arc-length residual.
pub fn np_residual(f: &FCoeffs, fprime: &FCoeffs, lambda: f64) -> Result<[f64; 6]> {
    if !is_admissible(f) {
        return Err(Error::NonAdmissible);
    }
    let r = exterior_derivative(f, fprime) - lambda * hodge_dual_unchecked(f);
    let [a, b, c, d, e] = r.to_array();
    Ok([a, b, c, d, e, g11_residual(f)])
}

/// Which root of the quadratic constraint [`seed_on_constraint`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    /// Exactly one admissible root.
    Unique,
    /// `f1 = 0`, the constraint is linear in `f2`.
    Linear,
    /// Both roots admissible, no reference: smaller `|f2|`.
    SmallerMagnitude,
    /// Both roots admissible: closest to the reference `f2`.
    NearestReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub f: FCoeffs,
    pub root: RootChoice,
}

/// Completes `(f0, f1, f3)` to a point of the constraint set: `f4` from
/// `R1 = 0`, then `f2` from the quadratic `R2 = 0`.
pub fn seed_on_constraint(
    f0: f64,
    f1: f64,
    f3: f64,
    lambda: f64,
    reference: Option<&FCoeffs>,
) -> Result<Seed> {
    if f0 == 0.0 {
        return Err(Error::NonAdmissible);
    }
    let f4 = -f3 - lambda / 6.0 * f0 * f0;
    let b1 = f1 * f4 - f3 * f3;
    // R2 = qa f2^2 + qb f2 + qc
    let qa = -0.25 * f1 * f1;
    let qb = b1 * f3 + 0.5 * f1 * f3 * f4;
    let qc = -b1 * f4 * f4 - 0.25 * f3 * f3 * f4 * f4 - f0.powi(6);
    let point = |f2: f64| FCoeffs::new(f0, f1, f2, f3, f4);

    if qa == 0.0 {
        if qb == 0.0 {
            return Err(Error::Degenerate);
        }
        let f = point(-qc / qb);
        return if is_admissible(&f) {
            Ok(Seed { f, root: RootChoice::Linear })
        } else {
            Err(Error::NoAdmissibleRoot)
        };
    }

    let mut disc = qb * qb - 4.0 * qa * qc;
    // double roots come out slightly negative after rounding
    if disc < 0.0 && disc > -1e-12 * (qb * qb).max((4.0 * qa * qc).abs()) {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Err(Error::NoAdmissibleRoot);
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let roots = if q == 0.0 { [0.0, 0.0] } else { [q / qa, qc / q] };
    let admissible: Vec<FCoeffs> =
        roots.iter().map(|&r| point(r)).filter(is_admissible).collect();
    match admissible.as_slice() {
        [] => Err(Error::NoAdmissibleRoot),
        [f] => Ok(Seed { f: *f, root: RootChoice::Unique }),
        [x, y, ..] => {
            let (pick, root) = match reference {
                Some(r) => {
                    let closer = if (x.f2 - r.f2).abs() <= (y.f2 - r.f2).abs() { x } else { y };
                    (closer, RootChoice::NearestReference)
                }
                None => {
                    let smaller = if x.f2.abs() <= y.f2.abs() { x } else { y };
                    (smaller, RootChoice::SmallerMagnitude)
                }
            };
            Ok(Seed { f: *pick, root })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    const X_O: FCoeffs = FCoeffs::new(-4.5, 6.75, 6.75, -6.75, -6.75);

    #[test]
    fn rhs_at_base_point() {
        let d = rhs_f(&X_O, 4.0).unwrap();
        let want = [0.0, 27.0, -27.0, 0.0, 0.0];
        for (g, w) in d.to_array().iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{d:?}");
        }
        assert_eq!(rhs_f(&FCoeffs::new(0.0, 1.0, 1.0, -1.0, -1.0), 4.0), Err(Error::NonAdmissible));
    }

    #[test]
    fn rhs_matches_oracle_derivatives() {
        for (name, t) in [(OracleName::SineCone, std::f64::consts::FRAC_PI_2), (OracleName::SquashedSphere, FRAC_PI_4)] {
            let s = oracle(name, t).unwrap();
            let d = rhs_f(&s.f, s.lambda).unwrap();
            assert!((d - s.fprime).max_abs() < 1e-12, "{name:?}: {d:?} vs {:?}", s.fprime);
        }
    }

    #[test]
    fn constraint_examples() {
        let c = constraints(&X_O, 4.0);
        assert!(c.r1.abs() < 1e-12 && c.r2.abs() < 1e-9);
        let c = constraints(&FCoeffs::new(-2.0 * 3f64.sqrt(), 8.0, 8.0, -4.0, -4.0), 4.0);
        assert!(c.r1.abs() < 1e-12 && c.r2.abs() < 1e-9, "{c:?}");
        let c = constraints(&FCoeffs::new(1.0, 0.0, 0.0, 0.0, 0.0), 6.0);
        assert_eq!((c.r1, c.r2), (1.0, -1.0));
    }

    #[test]
    fn residual_examples() {
        let s = oracle(OracleName::RoundSphere, FRAC_PI_4).unwrap();
        let r = np_residual(&s.f, &s.fprime, 4.0).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
        let r = np_residual(&s.f, &FCoeffs::default(), 4.0).unwrap();
        assert!((r[0] + 27.0).abs() < 1e-12);
        let s = oracle(OracleName::SquashedSphere, 1.0).unwrap();
        let r = np_residual(&s.f, &s.fprime, s.lambda).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn seed_examples() {
        // roots 27/4 and 243/4 are both admissible here
        let s = seed_on_constraint(-4.5, 6.75, -6.75, 4.0, None).unwrap();
        assert_eq!(s.root, RootChoice::SmallerMagnitude);
        assert_relative_eq!(s.f.f2, 6.75, epsilon = 1e-12);
        assert_relative_eq!(s.f.f4, -6.75, epsilon = 1e-12);

        let s = seed_on_constraint(-2.0 * 3f64.sqrt(), 8.0, -4.0, 4.0, None).unwrap();
        assert_relative_eq!(s.f.f2, 8.0, epsilon = 1e-12);

        // f1 = 0: the constraint is linear in f2 and has the admissible solution f2 = 1
        let s = seed_on_constraint(1.0, 0.0, -1.0, 6.0, None).unwrap();
        assert_eq!(s.root, RootChoice::Linear);
        assert_eq!(s.f, FCoeffs::new(1.0, 0.0, 1.0, -1.0, 0.0));
        let c = constraints(&s.f, 6.0);
        assert_eq!((c.r1, c.r2), (0.0, 0.0));

        // f1 = f3 = 0 leaves no f2-dependence at all
        assert_eq!(seed_on_constraint(1.0, 0.0, 0.0, 6.0, None), Err(Error::Degenerate));
        assert_eq!(seed_on_constraint(0.0, 1.0, 1.0, 6.0, None), Err(Error::NonAdmissible));
    }

    #[test]
    fn seed_reference_selects_nearest() {
        let far = FCoeffs { f2: 100.0, ..X_O };
        let s = seed_on_constraint(-4.5, 6.75, -6.75, 4.0, Some(&far)).unwrap();
        assert_eq!(s.root, RootChoice::NearestReference);
        assert!((s.f.f2 - 60.75).abs() < 1e-10);
    }
}
