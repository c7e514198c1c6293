//! Dormand–Prince 5(4) with the 4th-order continuous extension of Hairer,
//! Nørsett and Wanner. Works in either time direction.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> OdeSystem<N> for F {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

/// One accepted step with its interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let theta = (t - self.t0) / h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 { (self.t0, self.t1) } else { (self.t1, self.t0) };
        t >= lo && t <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub rhs_evals: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// What the driver should do after an accepted step.
pub enum Control<E> {
    Continue,
    Stop(E),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<E> {
    Reached,
    Stopped(E),
    /// Step size fell below the floor at the given time.
    Underflow(f64),
}

pub struct Dopri5 {
    pub tol: Tolerances,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    pub max_steps: usize,
    pub stats: Stats,
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol, safety: 0.9, min_factor: 0.2, max_factor: 10.0, max_steps: 1_000_000, stats: Stats::default() }
    }

    fn error_norm<const N: usize>(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = self.tol.atol + self.tol.rtol * y0[i].abs().max(y1[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    }

    fn initial_step<const N: usize, S: OdeSystem<N>>(&mut self, sys: &S, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, span: f64) -> f64 {
        let sc: [f64; N] = std::array::from_fn(|i| self.tol.atol + self.tol.rtol * y0[i].abs());
        let rms = |v: &[f64; N]| (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / N as f64).sqrt();
        let (d0, d1) = (rms(y0), rms(f0));
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        let y1: [f64; N] = std::array::from_fn(|i| y0[i] + dir * h0 * f0[i]);
        let f1 = sys.rhs(t0 + dir * h0, &y1);
        self.stats.rhs_evals += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates from `(t0, y0)` to `t_end`, handing each accepted step to
    /// `on_step`, which may stop the integration.
    pub fn integrate<const N: usize, S, E>(
        &mut self,
        sys: &S,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: impl FnMut(&DenseStep<N>) -> Control<E>,
    ) -> StepOutcome<E>
    where
        S: OdeSystem<N>,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        if span == 0.0 {
            return StepOutcome::Reached;
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = sys.rhs(t, &y);
        self.stats.rhs_evals += 1;
        let mut h = self.initial_step(sys, t, &y, &k1, dir, span);

        for _ in 0..self.max_steps {
            let remaining = (t_end - t).abs();
            if remaining <= 0.0 {
                return StepOutcome::Reached;
            }
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return StepOutcome::Underflow(t);
            }
            let hs = dir * h;

            let stage = |coef: &[(f64, &[f64; N])]| -> [f64; N] {
                std::array::from_fn(|i| y[i] + hs * coef.iter().map(|(c, k)| c * k[i]).sum::<f64>())
            };
            let k2 = sys.rhs(t + C2 * hs, &stage(&[(A21, &k1)]));
            let k3 = sys.rhs(t + C3 * hs, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = sys.rhs(t + C4 * hs, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = sys.rhs(t + C5 * hs, &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = sys.rhs(t + hs, &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_end } else { t + hs };
            let k7 = sys.rhs(t_new, &y_new);
            self.stats.rhs_evals += 6;

            let err: [f64; N] = std::array::from_fn(|i| {
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            let mut en = self.error_norm(&y, &y_new, &err);
            if !en.is_finite() || y_new.iter().any(|x| !x.is_finite()) {
                en = f64::INFINITY;
            }

            if en <= 1.0 {
                self.stats.accepted += 1;
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = hs * k1[i] - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - hs * k7[i] - bspl;
                    rcont[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let step = DenseStep { t0: t, t1: t_new, y0: y, y1: y_new, rcont };
                if let Control::Stop(e) = on_step(&step) {
                    return StepOutcome::Stopped(e);
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                if last {
                    return StepOutcome::Reached;
                }
                let fac = if en == 0.0 { self.max_factor } else { (self.safety * en.powf(-0.2)).clamp(self.min_factor, self.max_factor) };
                h *= fac;
            } else {
                self.stats.rejected += 1;
                let fac = if en.is_finite() { (self.safety * en.powf(-0.2)).clamp(self.min_factor, 1.0) } else { self.min_factor };
                h *= fac;
            }
        }
        StepOutcome::Underflow(t)
    }
}
