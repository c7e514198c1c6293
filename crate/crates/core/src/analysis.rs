//! Post-processing of trajectories: metric norms, the small-`t` expansion of
//! `g2`, comparison with the homogeneous solutions, smooth-closing
//! diagnostics at the far end, and parameter sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{polyfit, Fit, Parity};
use crate::g2_algebra::{is_admissible, FCoeffs};
use crate::integrate::{solve, Sample, SolveConfig, Termination, Trajectory};
use crate::np_system::{to_unit_lambda, Oracle, OracleName, SolutionPath, TauElement, Transformed};

/// `(g1, g2, g3)` = squared lengths of `e2`, `e5` and `e2 + e5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

/// Norms at one point; `g3 = g1 + g2 + 2 (f3 f4 - f1 f2) / (2 f0^2)`.
pub fn metric_norms_at(f: &FCoeffs) -> Result<(f64, f64, f64)> {
    if !is_admissible(f) {
        return Err(Error::NonAdmissible);
    }
    let f02 = f.f0 * f.f0;
    let g1 = (f.f3 * f.f3 - f.f1 * f.f4) / f02;
    let g2 = (f.f4 * f.f4 - f.f2 * f.f3) / f02;
    let cross = (f.f3 * f.f4 - f.f1 * f.f2) / (2.0 * f02);
    Ok((g1, g2, g1 + g2 + 2.0 * cross))
}

/// Norms along a trajectory. Samples carrying `h` use the `h`-form of the
/// metric, which is regular at `t = 0`.
pub fn metric_norms(traj: &Trajectory) -> Result<Vec<NormSample>> {
    traj.samples.iter().map(norms_of_sample).collect()
}

fn norms_of_sample(s: &Sample) -> Result<NormSample> {
    let m = s.metric;
    // g1, g2 > 0 is b1, b2 < 0 once the f0^2 denominator is cleared; g1
    // vanishes on the singular orbit itself.
    let singular_orbit = s.h.is_some() && s.t == 0.0;
    let g1_ok = m.g1 > 0.0 || (singular_orbit && m.g1 == 0.0);
    if !(g1_ok && m.g2 > 0.0 && m.g3.is_finite()) {
        return Err(Error::NonAdmissible);
    }
    Ok(NormSample { t: s.t, g1: m.g1, g2: m.g2, g3: m.g1 + m.g2 + 2.0 * m.g3 })
}

/// `-(5/576) a^2 + a/8 + 27/4`, the predicted `t^2` coefficient of `g2` at
/// `lambda = 1`.
pub fn g2_quadratic_expected(a: f64) -> f64 {
    -5.0 / 576.0 * a * a + a / 8.0 + 27.0 / 4.0
}

pub const G2_FIT_WINDOW: f64 = 0.05;
const G2_FIT_MIN_SAMPLES: usize = 5;

/// Fits `g2(t) - a^2/9 = c t^2 + d t^4 + e t^6` on the samples in
/// `(0, 0.05]` and returns `c`.
pub fn g2_quadratic_coefficient(traj: &Trajectory) -> Result<f64> {
    let a = traj.a.ok_or_else(|| Error::InvalidConfig("trajectory does not start at the singular orbit".into()))?;
    if traj.lambda != 1.0 {
        return Err(Error::InvalidConfig(format!("expected lambda = 1, got {}", traj.lambda)));
    }
    let pts: Vec<&Sample> = traj.samples.iter().filter(|s| s.t > 0.0 && s.t <= G2_FIT_WINDOW).collect();
    if pts.len() < G2_FIT_MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: G2_FIT_MIN_SAMPLES, got: pts.len() });
    }
    let g2_0 = a * a / 9.0;
    let xs: Vec<f64> = pts.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = pts.iter().map(|s| (s.metric.g2 - g2_0) / (s.t * s.t)).collect();
    let deg = if pts.len() >= 8 { 4 } else { 2 };
    Ok(polyfit(&xs, &ys, deg, Parity::Even)?.poly.coeffs[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityClass {
    RoundLike,
    SquashedLike,
    Generic,
}

impl HomogeneityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            HomogeneityClass::RoundLike => "round_like",
            HomogeneityClass::SquashedLike => "squashed_like",
            HomogeneityClass::Generic => "generic",
        }
    }
}

impl fmt::Display for HomogeneityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: HomogeneityClass,
    /// Sup relative distance to the nearer of the round sphere and its
    /// `tau_13` image (rescaled to `lambda = 1`).
    pub distance_round: f64,
    pub distance_squashed: f64,
}

/// Sup over samples in `(0, domain end)` of `|f - f_ref|_inf / |f_ref|_inf`.
pub fn sup_relative_distance<P: SolutionPath>(samples: &[Sample], reference: &P) -> f64 {
    let (lo, hi) = reference.domain();
    let mut worst = 0.0_f64;
    let mut any = false;
    for s in samples.iter().filter(|s| s.t > lo && s.t < hi) {
        match reference.eval(s.t) {
            Ok((f, _)) => {
                any = true;
                worst = worst.max((s.f - f).max_abs() / f.max_abs());
            }
            Err(_) => return f64::INFINITY,
        }
    }
    if any { worst } else { f64::INFINITY }
}

fn distance_to(samples: &[Sample], name: OracleName) -> f64 {
    let base = to_unit_lambda(Oracle(name));
    let direct = sup_relative_distance(samples, &base);
    let mirrored = sup_relative_distance(samples, &Transformed { inner: base, tau: TauElement::T13 });
    direct.min(mirrored)
}

/// Labels a `lambda = 1` singular-IVP trajectory by comparison with the
/// rescaled round and squashed spheres (and their `tau_13` images, which
/// start from `-a`).
pub fn classify_homogeneous(traj: &Trajectory, tol: f64) -> Classification {
    let distance_round = distance_to(&traj.samples, OracleName::RoundSphere);
    let distance_squashed = distance_to(&traj.samples, OracleName::SquashedSphere);
    let class = if traj.lambda != 1.0 {
        HomogeneityClass::Generic
    } else if distance_round < tol && distance_round <= distance_squashed {
        HomogeneityClass::RoundLike
    } else if distance_squashed < tol {
        HomogeneityClass::SquashedLike
    } else {
        HomogeneityClass::Generic
    };
    Classification { class, distance_round, distance_squashed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosingOptions {
    /// Window length as a fraction of the reference time (`t*`, or the end
    /// of the data for the start check).
    pub window_fraction: f64,
    pub samples: usize,
    pub degree: usize,
}

impl Default for ClosingOptions {
    fn default() -> Self {
        Self { window_fraction: 0.15, samples: 60, degree: 10 }
    }
}

/// Below this, `f2(0)` or `f0'(0)` (relative to their window scale) count as
/// degenerate.
pub const NONDEGENERACY_FLOOR: f64 = 1e-3;

/// Values of the reflected path at `s = 0`, from the fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectedLimit {
    pub f: FCoeffs,
    pub f0_prime: f64,
    pub f1_second: f64,
    pub f3_second: f64,
}

/// Dimensionless defects of the smooth-closing conditions; all vanish for a
/// path that closes smoothly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosingResiduals {
    /// rms of the parity-restricted fit (odd for `f0`, even otherwise) over
    /// the window maximum of the component.
    pub parity: [f64; 5],
    /// Values at `s = 0` over the window maximum of `|f|_inf`; `f1`, `f3`
    /// and `f4` may vanish to high order, so their own scale is unusable.
    pub value_f1: f64,
    pub value_f3: f64,
    pub value_f4: f64,
    /// `|f1''(0)| L^2 / max |f|_inf`, `L` the far end of the window.
    pub second_f1: f64,
    /// `|6 f0'(0) - f3''(0)| / (6 |f0'(0)| + |f3''(0)|)`
    pub gauge: f64,
    /// `|f2(0)| / max |f2|`; must stay above [`NONDEGENERACY_FLOOR`].
    pub nondegeneracy_f2: f64,
    /// `|f0'(0)| L / max |f0|`; must stay above [`NONDEGENERACY_FLOOR`].
    pub nondegeneracy_f0: f64,
}

impl ClosingResiduals {
    /// The largest defect (non-degeneracy excluded).
    pub fn max_defect(&self) -> f64 {
        self.parity
            .iter()
            .chain([self.value_f1, self.value_f3, self.value_f4, self.second_f1, self.gauge].iter())
            .fold(0.0_f64, |m, x| m.max(*x))
    }

    fn failures(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (i, p) in self.parity.iter().enumerate() {
            if !(*p < tol) {
                out.push(format!("parity_f{i}"));
            }
        }
        let named = [
            ("value_f1", self.value_f1),
            ("value_f3", self.value_f3),
            ("value_f4", self.value_f4),
            ("second_f1", self.second_f1),
            ("gauge", self.gauge),
        ];
        out.extend(named.iter().filter(|(_, v)| !(*v < tol)).map(|(n, _)| n.to_string()));
        if !(self.nondegeneracy_f2 >= NONDEGENERACY_FLOOR) {
            out.push("nondegeneracy_f2".into());
        }
        if !(self.nondegeneracy_f0 >= NONDEGENERACY_FLOOR) {
            out.push("nondegeneracy_f0".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "conditions", rename_all = "snake_case")]
pub enum Verdict {
    ClosesWithinTol,
    Fails(Vec<String>),
}

impl Verdict {
    pub fn closes(&self) -> bool {
        matches!(self, Verdict::ClosesWithinTol)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ClosesWithinTol => "closes_within_tol",
            Verdict::Fails(_) => "fails",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ClosesWithinTol => f.write_str("closes_within_tol"),
            Verdict::Fails(c) => write!(f, "fails({})", c.join(";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosingReport {
    pub t_star: f64,
    /// Fit window in the reflected variable `s`.
    pub window: (f64, f64),
    pub limit: ReflectedLimit,
    pub residuals: ClosingResiduals,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Conditions at `s = 0` for a path given on a window of `s > 0`.
fn closing_from_window(t_star: f64, ss: &[f64], fs: &[FCoeffs], opts: &ClosingOptions, tol: f64) -> Result<ClosingReport> {
    let comp = |i: usize| -> Vec<f64> { fs.iter().map(|f| f.to_array()[i]).collect() };
    let window_max = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let fit = |i: usize, parity| -> Result<(Fit, f64)> {
        let v = comp(i);
        Ok((polyfit(ss, &v, opts.degree, parity)?, window_max(&v)))
    };
    let rel = |x: f64, scale: f64| if scale == 0.0 { if x == 0.0 { 0.0 } else { f64::INFINITY } } else { x.abs() / scale };

    let fits: Vec<(Fit, f64)> = (0..5)
        .map(|i| fit(i, if i == 0 { Parity::Odd } else { Parity::Even }))
        .collect::<Result<_>>()?;
    let parity: [f64; 5] = std::array::from_fn(|i| rel(fits[i].0.rms, fits[i].1));
    let p = |i: usize| &fits[i].0.poly;
    let l = ss.iter().fold(0.0_f64, |m, s| m.max(*s));
    let scale = fs.iter().fold(0.0_f64, |m, f| m.max(f.max_abs()));

    let f0_prime = p(0).derivative_at_zero(1);
    let f1_second = p(1).derivative_at_zero(2);
    let f3_second = p(3).derivative_at_zero(2);
    let limit = ReflectedLimit {
        f: FCoeffs::from_array(std::array::from_fn(|i| p(i).eval(0.0))),
        f0_prime,
        f1_second,
        f3_second,
    };
    let residuals = ClosingResiduals {
        parity,
        value_f1: rel(limit.f.f1, scale),
        value_f3: rel(limit.f.f3, scale),
        value_f4: rel(limit.f.f4, scale),
        second_f1: rel(f1_second * l * l, scale),
        gauge: rel(6.0 * f0_prime - f3_second, 6.0 * f0_prime.abs() + f3_second.abs()),
        nondegeneracy_f2: rel(limit.f.f2, fits[2].1),
        nondegeneracy_f0: rel(f0_prime * l, fits[0].1),
    };
    let failures = residuals.failures(tol);
    let verdict = if failures.is_empty() { Verdict::ClosesWithinTol } else { Verdict::Fails(failures) };
    Ok(ClosingReport { t_star, window: (ss[0], l), limit, residuals, tol, verdict })
}

/// Closing conditions at the far singular orbit. With `s = t* - t` the path
/// `(f0, f2, f1, f4, f3)(t* - s)` (time reflection composed with `tau_12`)
/// should satisfy the same parity and jet conditions as the solution does at
/// `t = 0`. The fit window is the last `window_fraction * t*` of the trusted
/// part of the trajectory.
pub fn closing_diagnostics(traj: &Trajectory, opts: &ClosingOptions, tol: f64) -> Result<ClosingReport> {
    let Termination::H0Zero { t_star } = traj.termination else {
        return Err(Error::NoDegeneration);
    };
    let t_hi = traj.degeneration.map_or(t_star, |d| d.t_trust).min(traj.span.1);
    let w = opts.window_fraction * t_star;
    check_window(opts, w, t_hi)?;
    let samples = traj.resample(t_hi - w, t_hi, opts.samples)?;
    let mut ss = Vec::with_capacity(samples.len());
    let mut fs = Vec::with_capacity(samples.len());
    for s in samples.iter().rev() {
        let f = s.f;
        ss.push(t_star - s.t);
        fs.push(FCoeffs::new(f.f0, f.f2, f.f1, f.f4, f.f3));
    }
    closing_from_window(t_star, &ss, &fs, opts, tol)
}

/// The start-check window is at most `min(0.1, 0.05 |a|)`: solutions vary
/// on scales shorter than their lifetime, and for small `|a|` on a scale
/// proportional to `|a|`.
pub const START_WINDOW_CAP: f64 = 0.1;
pub const START_WINDOW_PER_A: f64 = 0.05;

/// The same conditions read at `t = 0` without reflection; every smooth
/// singular-IVP solution passes.
pub fn closing_diagnostics_at_start(traj: &Trajectory, opts: &ClosingOptions, tol: f64) -> Result<ClosingReport> {
    let Some(a) = traj.a else {
        return Err(Error::InvalidConfig("trajectory does not start at the singular orbit".into()));
    };
    let t_ref = traj.termination.t_star().unwrap_or(traj.span.1);
    let w = (opts.window_fraction * t_ref).min(START_WINDOW_CAP).min(START_WINDOW_PER_A * a.abs());
    check_window(opts, w, traj.span.1)?;
    let samples = traj.resample(0.0, w, opts.samples)?;
    let ss: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let fs: Vec<FCoeffs> = samples.iter().map(|s| s.f).collect();
    closing_from_window(0.0, &ss, &fs, opts, tol)
}

fn check_window(opts: &ClosingOptions, w: f64, available: f64) -> Result<()> {
    if opts.samples < opts.degree + 1 {
        return Err(Error::FitWindowTooSmall(format!("{} samples for degree {}", opts.samples, opts.degree)));
    }
    if !(w > 0.0) || w > available {
        return Err(Error::FitWindowTooSmall(format!("window {w} exceeds the {available} available")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub termination: Option<Termination>,
    pub t_star: Option<f64>,
    pub max_drift: Option<f64>,
    pub class: Option<HomogeneityClass>,
    pub closing_verdict: Option<String>,
    /// Largest closing defect, when the diagnostic could be run.
    pub closing_residual: Option<f64>,
    /// Set when the row could not be computed completely.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub base: SolveConfig,
    pub closing: ClosingOptions,
    pub closing_tol: f64,
    pub classify_tol: f64,
}

impl SweepOptions {
    pub fn new(base: SolveConfig) -> Self {
        Self { base, closing: ClosingOptions::default(), closing_tol: 1e-5, classify_tol: 1e-5 }
    }
}

pub fn sweep_row(a: f64, opts: &SweepOptions) -> SweepRow {
    let mut row = SweepRow {
        a,
        termination: None,
        t_star: None,
        max_drift: None,
        class: None,
        closing_verdict: None,
        closing_residual: None,
        error: None,
    };
    let mut cfg = opts.base;
    cfg.a = a;
    let traj = match solve(&cfg) {
        Ok(t) => t,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.termination = Some(traj.termination);
    row.t_star = traj.termination.t_star();
    row.max_drift = Some(traj.max_drift);
    row.class = Some(classify_homogeneous(&traj, opts.classify_tol).class);
    if let Err(e) = metric_norms(&traj) {
        row.error = Some(format!("metric norms: {e}"));
    }
    match closing_diagnostics(&traj, &opts.closing, opts.closing_tol) {
        Ok(r) => {
            row.closing_verdict = Some(r.verdict.to_string());
            row.closing_residual = Some(r.residuals.max_defect());
        }
        Err(Error::NoDegeneration) => row.closing_verdict = Some("no_degeneration".into()),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One row per grid value, in grid order; rows are computed in parallel and a
/// failing row never aborts the sweep.
pub fn sweep(a_grid: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if a_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(a_grid.par_iter().map(|&a| sweep_row(a, opts)).collect())
}
