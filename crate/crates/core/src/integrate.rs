//! Adaptive integration of the singular IVP (in `h`-variables, after a
//! Taylor startup) and of the regular `f`-system from an interior point,
//! with event detection and dense output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2_algebra::{is_admissible, FCoeffs, MetricBlocks};
use crate::fit::{polyfit, Parity};
use crate::np_system::{constraints, normalized_drift, r2_scale, rhs_f_unchecked, ConstraintValues};
use crate::singular_ivp::{f_from_h, initial_state, rhs_h, taylor_startup, HState, TruncatedEvenSeries};
use crate::stepper::{Control, DenseStep, Dopri5, StepOutcome, Stats, Tolerances};

/// Bisection stops once the bracket is this short.
pub const EVENT_TIME_TOL: f64 = 1e-10;

/// Number of extra samples placed in `(0, ORIGIN_WINDOW]` for small-`t` fits.
pub const ORIGIN_SAMPLES: usize = 20;
pub const ORIGIN_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventThresholds {
    pub h0_zero_tol: f64,
    /// Applied to the scale-free ratios `b1 / (|f1 f4| + f3^2)` and
    /// `b2 / (|f2 f3| + f4^2)`.
    pub positivity_margin: f64,
    /// Applied to [`run_drift`].
    pub drift_max: f64,
}

impl Default for EventThresholds {
    fn default() -> Self {
        Self { h0_zero_tol: 1e-10, positivity_margin: 1e-10, drift_max: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub a: f64,
    pub lambda: f64,
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub series_order: usize,
    pub t_switch: f64,
    pub events: EventThresholds,
    /// Uniform samples on `(0, t_max]`; the origin and a cluster of points
    /// near it are always added.
    pub sample_count: usize,
    /// See [`TRUST_TOL`].
    pub trust_tol: f64,
}

impl SolveConfig {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            lambda: 1.0,
            t_max: 3.0,
            rtol: 1e-10,
            atol: 1e-12,
            series_order: 8,
            t_switch: 1e-3,
            events: EventThresholds::default(),
            sample_count: 300,
            trust_tol: TRUST_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.a.is_finite() && self.a != 0.0) {
            return bad(format!("a must be finite and nonzero, got {}", self.a));
        }
        if !(self.lambda.is_finite() && self.lambda != 0.0) {
            return bad(format!("lambda must be finite and nonzero, got {}", self.lambda));
        }
        if !(self.t_switch > 0.0 && self.t_switch < self.t_max && self.t_max.is_finite()) {
            return bad(format!("need 0 < t_switch < t_max, got {} and {}", self.t_switch, self.t_max));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive".into());
        }
        if self.series_order < 2 || self.series_order % 2 == 1 {
            return bad(format!("series_order must be even and >= 2, got {}", self.series_order));
        }
        let e = &self.events;
        if !(e.h0_zero_tol >= 0.0 && e.positivity_margin >= 0.0 && e.drift_max > 0.0) {
            return bad("event thresholds must be non-negative (drift_max positive)".into());
        }
        if !(self.trust_tol > 0.0) {
            return bad("trust_tol must be positive".into());
        }
        if self.sample_count == 0 {
            return bad("sample_count must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `f1 f4 - f3^2 < 0`
    B1,
    /// `f2 f3 - f4^2 < 0`
    B2,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inequality::B1 => "f1f4-f3^2",
            Inequality::B2 => "f2f3-f4^2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTMax { t: f64 },
    H0Zero { t_star: f64 },
    PositivityFailure { t_star: f64, which: Inequality },
    DriftExceeded { t_star: f64 },
    StepUnderflow { t_star: f64 },
}

impl Termination {
    pub fn kind(&self) -> &'static str {
        match self {
            Termination::ReachedTMax { .. } => "reached_t_max",
            Termination::H0Zero { .. } => "h0_zero",
            Termination::PositivityFailure { .. } => "positivity_failure",
            Termination::DriftExceeded { .. } => "drift_exceeded",
            Termination::StepUnderflow { .. } => "step_underflow",
        }
    }

    /// The event time; `None` when the run reached its end point.
    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Termination::ReachedTMax { .. } => None,
            Termination::H0Zero { t_star }
            | Termination::PositivityFailure { t_star, .. }
            | Termination::DriftExceeded { t_star }
            | Termination::StepUnderflow { t_star } => Some(t_star),
        }
    }

    /// Where the trajectory ends.
    pub fn end_time(&self) -> f64 {
        match *self {
            Termination::ReachedTMax { t } => t,
            _ => self.t_star().unwrap(),
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::ReachedTMax { .. } => f.write_str("reached_t_max"),
            Termination::PositivityFailure { t_star, which } => write!(f, "positivity_failure({which}) at t={t_star}"),
            other => write!(f, "{} at t={}", other.kind(), other.t_star().unwrap()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Present for singular-IVP trajectories.
    pub h: Option<HState>,
    pub f: FCoeffs,
    pub metric: MetricBlocks,
    pub constraints: ConstraintValues,
    /// `|R2|` in units of the run's constraint scale, see [`run_drift`].
    pub drift: f64,
}

/// Metric blocks from `h`, with the powers of `t` cancelled analytically so
/// that the limit `t -> 0` is exact.
pub fn metric_from_h(h: &HState, t: f64, lambda: f64) -> MetricBlocks {
    let h4 = h.h4(lambda);
    let t2 = t * t;
    let h02 = h.h0 * h.h0;
    MetricBlocks {
        g1: t2 * (h.h3 * h.h3 - t2 * h.h1 * h4) / h02,
        g2: (t2 * h4 * h4 - h.h2 * h.h3) / h02,
        g3: t2 * (h.h3 * h4 - h.h1 * h.h2) / (2.0 * h02),
    }
}

fn metric_from_f(f: &FCoeffs) -> MetricBlocks {
    let f02 = f.f0 * f.f0;
    MetricBlocks { g1: -f.b1() / f02, g2: -f.b2() / f02, g3: -f.b3() / f02 }
}

/// `|R2(f)| / max(scale, r2_scale(f))`. With `scale` the largest
/// [`r2_scale`] seen so far on the run this measures the constraint error
/// against the natural size of the solution; dividing by the pointwise scale
/// alone would blow up near a degeneration, where all terms of `R2` vanish.
pub fn run_drift(f: &FCoeffs, lambda: f64, scale: f64) -> f64 {
    let s = scale.max(r2_scale(f));
    if s == 0.0 {
        return 0.0;
    }
    constraints(f, lambda).r2.abs() / s
}

fn sample_from_h(t: f64, h: HState, lambda: f64, scale: f64) -> Sample {
    let f = f_from_h(&h, t, lambda);
    Sample {
        t,
        h: Some(h),
        f,
        metric: metric_from_h(&h, t, lambda),
        constraints: constraints(&f, lambda),
        drift: run_drift(&f, lambda, scale),
    }
}

fn sample_from_f(t: f64, f: FCoeffs, lambda: f64, scale: f64) -> Sample {
    Sample {
        t,
        h: None,
        f,
        metric: metric_from_f(&f),
        constraints: constraints(&f, lambda),
        drift: run_drift(&f, lambda, scale),
    }
}

fn ratio(num: f64, scale: f64) -> f64 {
    if scale == 0.0 { num.signum() } else { num / scale }
}

/// Scale-free versions of `b1` and `b2`; both must stay below
/// `-positivity_margin`.
pub fn positivity_ratios(f: &FCoeffs) -> (f64, f64) {
    (
        ratio(f.b1(), (f.f1 * f.f4).abs() + f.f3 * f.f3),
        ratio(f.b2(), (f.f2 * f.f3).abs() + f.f4 * f.f4),
    )
}

fn bisect(mut lo: f64, mut hi: f64, bad: impl Fn(f64) -> bool) -> f64 {
    // invariant: !bad(lo), bad(hi); works for either ordering of lo, hi
    while (hi - lo).abs() > EVENT_TIME_TOL {
        let mid = 0.5 * (lo + hi);
        if bad(mid) { hi = mid } else { lo = mid }
    }
    hi
}

/// Checks one accepted step for the events, returning the earliest.
/// Component 0 of the state is the quantity whose sign change means
/// degeneration (`h0` or `f0`); `to_f` reconstructs the coefficients and
/// `drift_scale` is the constraint scale of the run so far.
pub fn detect_events<const N: usize>(
    step: &DenseStep<N>,
    lambda: f64,
    thresholds: &EventThresholds,
    drift_scale: f64,
    to_f: impl Fn(f64, &[f64; N]) -> FCoeffs,
) -> Option<Termination> {
    let (t0, t1) = (step.t0, step.t1);
    let mut best: Option<(f64, Termination)> = None;
    let mut offer = |t: f64, e: Termination| {
        if best.is_none_or(|(bt, _)| (t - t0).abs() < (bt - t0).abs()) {
            best = Some((t, e));
        }
    };

    let (v0, v1) = (step.y0[0], step.y1[0]);
    if v0.signum() != v1.signum() || v1 == 0.0 {
        let s0 = v0.signum();
        let t_star = bisect(t0, t1, |t| step.eval(t)[0].signum() != s0);
        offer(t_star, Termination::H0Zero { t_star });
    } else if v1.abs() <= thresholds.h0_zero_tol {
        let tol = thresholds.h0_zero_tol;
        let t_star = if v0.abs() <= tol { t0 } else { bisect(t0, t1, |t| step.eval(t)[0].abs() <= tol) };
        offer(t_star, Termination::H0Zero { t_star });
    }

    let margin = -thresholds.positivity_margin;
    let fail = |t: f64, y: &[f64; N]| -> Option<Inequality> {
        let (r1, r2) = positivity_ratios(&to_f(t, y));
        if !(r1 < margin) {
            Some(Inequality::B1)
        } else if !(r2 < margin) {
            Some(Inequality::B2)
        } else {
            None
        }
    };
    if fail(t1, &step.y1).is_some() {
        let t_star = bisect(t0, t1, |t| fail(t, &step.eval(t)).is_some());
        let which = fail(t_star, &step.eval(t_star)).or(fail(t1, &step.y1)).unwrap();
        offer(t_star, Termination::PositivityFailure { t_star, which });
    }

    let drifted = |t: f64, y: &[f64; N]| !(run_drift(&to_f(t, y), lambda, drift_scale) <= thresholds.drift_max);
    if drifted(t1, &step.y1) {
        let t_star = bisect(t0, t1, |t| drifted(t, &step.eval(t)));
        offer(t_star, Termination::DriftExceeded { t_star });
    }

    best.map(|(_, e)| e)
}

/// How the degeneration time of a singular-IVP run was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degeneration {
    pub t_star: f64,
    /// End of the stretch on which the numerical solution is trusted.
    pub t_trust: f64,
    /// `false`: sign change of `h0` seen directly; `true`: zero of a
    /// polynomial fit of `h0` on the trusted stretch.
    pub extrapolated: bool,
    /// Disagreement between fits of two degrees (zero when not extrapolated).
    pub spread: f64,
}

/// Trust threshold on the disagreement of `h0` between a run and its
/// companion at 10x looser tolerances, relative to `max |h0|`.
pub const TRUST_TOL: f64 = 1e-8;
/// Width of the extrapolation window as a fraction of `t_trust`.
pub const EXTRAPOLATION_WINDOW: f64 = 0.1;
const EXTRAPOLATION_POINTS: usize = 60;
const EXTRAPOLATION_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
enum Dense {
    H { series: TruncatedEvenSeries, t_switch: f64, steps: Vec<DenseStep<4>> },
    F { steps: Vec<DenseStep<5>> },
}

fn locate<const N: usize>(steps: &[DenseStep<N>], t: f64) -> Option<usize> {
    let first = steps.first()?;
    let forward = first.t1 >= first.t0;
    let i = steps.partition_point(|s| if forward { s.t1 < t } else { s.t1 > t });
    steps.get(i).filter(|s| s.contains(t)).map(|_| i)
}

/// A solution sampled on a grid, plus the dense output it was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: f64,
    /// The singular-IVP parameter, if the run started at `t = 0`.
    pub a: Option<f64>,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub degeneration: Option<Degeneration>,
    /// Largest [`run_drift`] over accepted steps and samples.
    pub max_drift: f64,
    pub stats: Stats,
    /// Interval covered by the dense output (increasing).
    pub span: (f64, f64),
    dense: Dense,
    /// Running maximum of `r2_scale` at the end of each step.
    step_scales: Vec<f64>,
}

impl Trajectory {
    /// Evaluates the dense output at any `t` inside [`Trajectory::span`].
    pub fn sample_at(&self, t: f64) -> Result<Sample> {
        let (lo, hi) = self.span;
        let out = Error::OutOfDomain { name: "trajectory", t };
        if !(t >= lo && t <= hi) {
            return Err(out);
        }
        match &self.dense {
            Dense::H { series, t_switch, steps } => {
                if t <= *t_switch {
                    let h = series.eval(t);
                    let scale = r2_scale(&f_from_h(&h, t, self.lambda));
                    return Ok(sample_from_h(t, h, self.lambda, scale));
                }
                let i = locate(steps, t).ok_or(out)?;
                let scale = if i == 0 { 0.0 } else { self.step_scales[i - 1] };
                Ok(sample_from_h(t, HState::from_array(steps[i].eval(t)), self.lambda, scale))
            }
            Dense::F { steps } => {
                let i = locate(steps, t).ok_or(out)?;
                let scale = if i == 0 { 0.0 } else { self.step_scales[i - 1] };
                Ok(sample_from_f(t, FCoeffs::from_array(steps[i].eval(t)), self.lambda, scale))
            }
        }
    }

    /// `f'` at `t`, from the vector field at the dense-output state.
    pub fn fprime_at(&self, t: f64) -> Result<FCoeffs> {
        Ok(rhs_f_unchecked(&self.sample_at(t)?.f, self.lambda))
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Resamples on `n` uniform points of `[lo, hi]`.
    pub fn resample(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<Sample>> {
        (0..n)
            .map(|i| {
                let t = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
                self.sample_at(t)
            })
            .collect()
    }

    pub fn series(&self) -> Option<&TruncatedEvenSeries> {
        match &self.dense {
            Dense::H { series, .. } => Some(series),
            Dense::F { .. } => None,
        }
    }

    fn h0_at(&self, t: f64) -> Result<f64> {
        let s = self.sample_at(t)?;
        Ok(s.h.map_or(s.f.f0, |h| h.h0))
    }
}

fn output_grid(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_lo + (t_hi - t_lo) * k as f64 / n as f64).collect()
}

fn termination_of(outcome: StepOutcome<Termination>, t_end: f64) -> Termination {
    match outcome {
        StepOutcome::Reached => Termination::ReachedTMax { t: t_end },
        StepOutcome::Stopped(e) => e,
        StepOutcome::Underflow(t) => Termination::StepUnderflow { t_star: t },
    }
}

/// Integration only: series startup, stepping, events. No sampling.
fn solve_raw(config: &SolveConfig) -> Result<Trajectory> {
    config.validate()?;
    let lambda = config.lambda;
    let init = initial_state(config.a, lambda)?;
    let series = taylor_startup(&init, config.series_order).map_err(|e| Error::StartupFailure(Box::new(e)))?;
    let y0 = series.eval(config.t_switch).to_array();

    let sys = |t: f64, y: &[f64; 4]| rhs_h(&HState::from_array(*y), t, lambda);
    let to_f = |t: f64, y: &[f64; 4]| f_from_h(&HState::from_array(*y), t, lambda);
    let mut stepper = Dopri5::new(Tolerances { rtol: config.rtol, atol: config.atol });
    let mut steps: Vec<DenseStep<4>> = Vec::new();
    let mut step_scales: Vec<f64> = Vec::new();
    let mut scale = r2_scale(&to_f(config.t_switch, &y0));
    let mut max_drift = 0.0_f64;

    let outcome = stepper.integrate(&sys, config.t_switch, y0, config.t_max, |step| {
        let ev = detect_events(step, lambda, &config.events, scale, to_f);
        let f1 = to_f(step.t1, &step.y1);
        if ev.is_none() {
            max_drift = max_drift.max(run_drift(&f1, lambda, scale));
        }
        scale = scale.max(r2_scale(&f1));
        steps.push(step.clone());
        step_scales.push(scale);
        ev.map_or(Control::Continue, Control::Stop)
    });
    let termination = termination_of(outcome, config.t_max);
    Ok(Trajectory {
        lambda,
        a: Some(config.a),
        samples: Vec::new(),
        termination,
        degeneration: None,
        max_drift,
        stats: stepper.stats,
        span: (0.0, termination.end_time()),
        dense: Dense::H { series, t_switch: config.t_switch, steps },
        step_scales,
    })
}

/// Numerical solutions approach a degeneration along an unstable direction
/// (perturbations grow like `(t* - t)^-6`), so in floating point the run
/// usually stops on another event just before `h0` reaches zero. The stretch
/// where the run is reliable is found by comparison with a companion run at
/// 10x looser tolerances, and `t*` is the zero of a polynomial fit of `h0`
/// on the end of that stretch.
fn locate_degeneration(main: &Trajectory, config: &SolveConfig) -> Result<Option<Degeneration>> {
    let t_event = main.termination.end_time();
    let mut loose = *config;
    loose.rtol *= 10.0;
    loose.atol *= 10.0;
    let companion = solve_raw(&loose)?;
    let t_common = t_event.min(companion.termination.end_time());

    let n = 4000;
    let grid = |k: usize| config.t_switch + (t_common - config.t_switch) * k as f64 / n as f64;
    let mut h_max = 0.0_f64;
    let mut t_trust = t_common;
    for k in 0..=n {
        let t = grid(k);
        let (hm, hc) = (main.h0_at(t)?, companion.h0_at(t)?);
        h_max = h_max.max(hm.abs());
        if (hm - hc).abs() > config.trust_tol * h_max {
            t_trust = grid(k.saturating_sub(1));
            break;
        }
    }

    if matches!(main.termination, Termination::H0Zero { .. }) && t_trust >= t_common {
        return Ok(Some(Degeneration { t_star: t_event, t_trust: t_event, extrapolated: false, spread: 0.0 }));
    }

    let w = EXTRAPOLATION_WINDOW * t_trust;
    let xs: Vec<f64> = (0..EXTRAPOLATION_POINTS).map(|i| -w + w * i as f64 / (EXTRAPOLATION_POINTS - 1) as f64).collect();
    let ys = xs.iter().map(|x| main.h0_at(t_trust + x)).collect::<Result<Vec<_>>>()?;
    let reach = (2.0 * (t_event - t_trust)).max(w);
    let root = |deg| -> Result<Option<f64>> { Ok(polyfit(&xs, &ys, deg, Parity::Full)?.poly.root_in(0.0, reach)) };
    let Some(r) = root(EXTRAPOLATION_DEGREE)? else { return Ok(None) };
    let spread = root(EXTRAPOLATION_DEGREE + 2)?.map_or(f64::INFINITY, |r2| (r2 - r).abs());
    Ok(Some(Degeneration { t_star: t_trust + r, t_trust, extrapolated: true, spread }))
}

/// Solves the singular IVP with parameter `config.a`.
/// Sorts and drops points that coincide up to rounding, which would make
/// finite differences on the output meaningless.
fn merge_close(ts: &mut Vec<f64>) {
    ts.sort_by(f64::total_cmp);
    let scale = ts.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
    ts.dedup_by(|b, a| (*b - *a).abs() <= 1e-9 * scale);
}

pub fn solve(config: &SolveConfig) -> Result<Trajectory> {
    let mut traj = solve_raw(config)?;
    let reached = matches!(traj.termination, Termination::ReachedTMax { .. });
    let mut t_last = traj.termination.end_time();
    if !reached {
        if let Some(d) = locate_degeneration(&traj, config)? {
            traj.termination = Termination::H0Zero { t_star: d.t_star };
            t_last = d.t_trust;
            traj.degeneration = Some(d);
        }
    }

    let mut ts = output_grid(0.0, t_last, config.sample_count);
    ts.extend((1..=ORIGIN_SAMPLES).map(|k| ORIGIN_WINDOW * k as f64 / ORIGIN_SAMPLES as f64));
    let keep_end = reached || traj.degeneration.is_some_and(|d| d.extrapolated);
    ts.retain(|&t| t < t_last || (keep_end && t <= t_last));
    merge_close(&mut ts);
    traj.samples = ts.into_iter().map(|t| traj.sample_at(t)).collect::<Result<_>>()?;
    traj.max_drift = traj.samples.iter().fold(traj.max_drift, |m, s| m.max(s.drift));
    Ok(traj)
}

/// Integrates the regular system directly from an admissible point on the
/// constraint set, forward or backward in time.
pub fn integrate_f(
    start: FCoeffs,
    lambda: f64,
    t0: f64,
    t_end: f64,
    tol: Tolerances,
    thresholds: &EventThresholds,
    sample_count: usize,
) -> Result<Trajectory> {
    if !is_admissible(&start) {
        return Err(Error::NonAdmissible);
    }
    let c = constraints(&start, lambda);
    let r1_scale = start.f3.abs() + start.f4.abs() + (lambda / 6.0 * start.f0 * start.f0).abs();
    if !(c.r1.abs() <= 1e-10 * r1_scale.max(1.0) && normalized_drift(&start, lambda) <= 1e-10) {
        return Err(Error::ConstraintViolatedAtStart { r1: c.r1, r2: c.r2 });
    }
    if sample_count == 0 || !(t_end.is_finite() && t0.is_finite()) {
        return Err(Error::InvalidConfig("need finite times and at least one sample".into()));
    }

    let sys = |_t: f64, y: &[f64; 5]| rhs_f_unchecked(&FCoeffs::from_array(*y), lambda).to_array();
    let to_f = |_t: f64, y: &[f64; 5]| FCoeffs::from_array(*y);
    let mut stepper = Dopri5::new(tol);
    let mut steps: Vec<DenseStep<5>> = Vec::new();
    let mut step_scales: Vec<f64> = Vec::new();
    let mut scale = r2_scale(&start);
    let mut max_drift = run_drift(&start, lambda, scale);

    let outcome = stepper.integrate(&sys, t0, start.to_array(), t_end, |step| {
        let ev = detect_events(step, lambda, thresholds, scale, to_f);
        let f1 = to_f(step.t1, &step.y1);
        if ev.is_none() {
            max_drift = max_drift.max(run_drift(&f1, lambda, scale));
        }
        scale = scale.max(r2_scale(&f1));
        steps.push(step.clone());
        step_scales.push(scale);
        ev.map_or(Control::Continue, Control::Stop)
    });
    let termination = termination_of(outcome, t_end);
    let stop = termination.end_time();
    let reached = matches!(termination, Termination::ReachedTMax { .. });

    let mut ts = output_grid(t0, stop, sample_count);
    if !reached {
        ts.retain(|&t| t != stop);
    }
    merge_close(&mut ts);

    let mut traj = Trajectory {
        lambda,
        a: None,
        samples: Vec::new(),
        termination,
        degeneration: None,
        max_drift,
        stats: stepper.stats,
        span: (t0.min(stop), t0.max(stop)),
        dense: Dense::F { steps },
        step_scales,
    };
    let s0 = r2_scale(&start);
    traj.samples = ts
        .into_iter()
        .map(|t| if t == t0 { Ok(sample_from_f(t, start, lambda, s0)) } else { traj.sample_at(t) })
        .collect::<Result<_>>()?;
    traj.max_drift = traj.samples.iter().fold(traj.max_drift, |m, s| m.max(s.drift));
    Ok(traj)
}

/// Default tolerances for [`integrate_f`].
pub const DEFAULT_TOLERANCES: Tolerances = Tolerances { rtol: 1e-10, atol: 1e-12 };
