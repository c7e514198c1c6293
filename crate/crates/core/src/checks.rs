//! Verification of sampled paths: closed forms against the system, and
//! tabulated trajectories against the system via finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2_algebra::{exterior_derivative, hodge_dual_unchecked, is_admissible, FCoeffs};
use crate::io::{interior_points, TrajectoryTable};
use crate::np_system::{constraints, normalized_drift, np_residual, oracle, OracleName};

/// Names of the eight checked quantities: five components of
/// `d phi - lambda * phi`, the arc-length residual, `R1` and `R2`.
pub const RESIDUAL_COMPONENTS: [&str; 8] = ["s1", "s2", "s3", "s4", "s5", "g11", "R1", "R2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub oracle: OracleName,
    pub samples: usize,
    pub max_residual: f64,
    pub t_at_max: f64,
    pub component: String,
    pub tol: f64,
    pub pass: bool,
}

/// Absolute residuals of the closed form at `n` uniform interior points.
pub fn oracle_check(name: OracleName, n: usize, tol: f64) -> Result<OracleCheck> {
    if n < 2 {
        return Err(Error::InvalidConfig("oracle check needs at least 2 samples".into()));
    }
    let lambda = name.lambda();
    let (mut worst, mut at, mut comp) = (0.0_f64, f64::NAN, 0);
    for t in interior_points(name, n) {
        let s = oracle(name, t)?;
        let r = np_residual(&s.f, &s.fprime, lambda)?;
        let c = constraints(&s.f, lambda);
        for (i, v) in r.iter().chain([c.r1, c.r2].iter()).enumerate() {
            if !(v.abs() <= worst) {
                (worst, at, comp) = (v.abs(), t, i);
            }
        }
    }
    Ok(OracleCheck {
        oracle: name,
        samples: n,
        max_residual: worst,
        t_at_max: at,
        component: RESIDUAL_COMPONENTS[comp].to_string(),
        tol,
        pass: worst < tol,
    })
}

pub const FD_STENCIL: usize = 7;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

/// Weights of the derivative of order `m` at `x0` for the nodes `xs`
/// (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[m]).collect()
}

/// First derivatives of the `f`-columns on the table's own grid: centred
/// seven-point stencils, shifted inwards at the ends.
pub fn finite_difference(table: &TrajectoryTable) -> Result<Vec<FCoeffs>> {
    let n = table.rows.len();
    if n < FD_STENCIL {
        return Err(Error::InsufficientSamples { needed: FD_STENCIL, got: n });
    }
    let ts: Vec<f64> = table.rows.iter().map(|r| r.t).collect();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(FD_STENCIL / 2).min(n - FD_STENCIL);
            let w = fd_weights(ts[i], &ts[lo..lo + FD_STENCIL], 1);
            let d: [f64; 5] = std::array::from_fn(|c| {
                (0..FD_STENCIL).map(|k| w[k] * table.rows[lo + k].f.to_array()[c]).sum()
            });
            FCoeffs::from_array(d)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub lambda: f64,
    pub rows_checked: usize,
    /// Rows on a singular orbit (`f0 = 0`), where the system is not defined.
    pub rows_skipped: usize,
    pub max_residual: f64,
    pub t_at_max: f64,
    pub component: String,
    /// Largest of the pointwise `R1`, `R2` terms. These involve no
    /// differencing, so a single bad row shows up exactly where it is.
    pub max_constraint: f64,
    pub t_at_max_constraint: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Quantities checked per table row. The arc-length residual is omitted: it
/// vanishes exactly when `R2` does, and in the form `f0^2 + cbrt(D / 4)` it
/// loses all relative precision where `f0 -> 0`.
pub const ROW_COMPONENTS: [&str; 7] = ["s1", "s2", "s3", "s4", "s5", "R1", "R2"];

/// Scale-free residuals of one row. Non-admissible rows score infinity.
pub fn row_residuals(f: &FCoeffs, fprime: &FCoeffs, lambda: f64) -> [f64; 7] {
    if !is_admissible(f) {
        return [f64::INFINITY; 7];
    }
    let d = exterior_derivative(f, fprime).to_array();
    let s = (lambda * hodge_dual_unchecked(f)).to_array();
    // |lambda| |f| carries the same units as d phi and keeps the scale away
    // from zero where the path approaches a degeneration
    let floor = (lambda.abs() * f.max_abs()).max(f64::MIN_POSITIVE);
    let scale = d.iter().chain(s.iter()).fold(floor, |m, x| m.max(x.abs()));
    let c = constraints(f, lambda);
    let r1_scale = f.f3.abs() + f.f4.abs() + (lambda / 6.0 * f.f0 * f.f0).abs();
    let mut out = [0.0; 7];
    for i in 0..5 {
        out[i] = (d[i] - s[i]).abs() / scale;
    }
    out[5] = c.r1.abs() / r1_scale;
    out[6] = normalized_drift(f, lambda);
    out
}

/// Checks a tabulated path against the system at every row with `f0 != 0`.
/// `lambda` defaults to the table's footer value.
pub fn residual_check(table: &TrajectoryTable, lambda: Option<f64>, tol: f64) -> Result<ResidualCheck> {
    let lambda = match lambda {
        Some(l) => l,
        None => table.lambda()?,
    };
    let fprime = finite_difference(table)?;
    let (mut worst, mut at, mut comp) = (0.0_f64, f64::NAN, 0);
    let (mut worst_c, mut at_c) = (0.0_f64, f64::NAN);
    let (mut checked, mut skipped) = (0, 0);
    for (row, fp) in table.rows.iter().zip(&fprime) {
        if row.f.f0 == 0.0 {
            skipped += 1;
            continue;
        }
        checked += 1;
        let r = row_residuals(&row.f, fp, lambda);
        for (i, v) in r.iter().enumerate() {
            if !(*v <= worst) {
                (worst, at, comp) = (*v, row.t, i);
            }
        }
        let c = r[5].max(r[6]);
        if !(c <= worst_c) {
            (worst_c, at_c) = (c, row.t);
        }
    }
    Ok(ResidualCheck {
        lambda,
        rows_checked: checked,
        rows_skipped: skipped,
        max_residual: worst,
        t_at_max: at,
        component: ROW_COMPONENTS[comp].to_string(),
        max_constraint: worst_c,
        t_at_max_constraint: at_c,
        tol,
        pass: checked > 0 && worst < tol,
    })
}
