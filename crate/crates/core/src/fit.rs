//! Least-squares polynomial fits with optional parity restriction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Full,
    Even,
    Odd,
}

impl Parity {
    fn powers(self, degree: usize) -> Vec<usize> {
        (0..=degree)
            .filter(|k| match self {
                Parity::Full => true,
                Parity::Even => k % 2 == 0,
                Parity::Odd => k % 2 == 1,
            })
            .collect()
    }
}

/// `p(x) = sum_k coeffs[k] x^k`; absent powers are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let c = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect::<Vec<_>>();
        Polynomial { coeffs: if c.is_empty() { vec![0.0] } else { c } }
    }

    /// `k`-th derivative at zero.
    pub fn derivative_at_zero(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        self.coeffs.get(k).copied().unwrap_or(0.0) * fact
    }

    /// Even and odd parts.
    pub fn split_parity(&self) -> (Polynomial, Polynomial) {
        let pick = |odd: usize| Polynomial {
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == odd { *c } else { 0.0 }).collect(),
        };
        (pick(0), pick(1))
    }

    /// A root in `[lo, hi]` if `p` changes sign there, by bisection.
    pub fn root_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (self.eval(a), self.eval(b));
        if fa == 0.0 {
            return Some(a);
        }
        if fb == 0.0 {
            return Some(b);
        }
        if fa.signum() == fb.signum() {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.eval(m).signum() == fa.signum() { a = m } else { b = m }
        }
        Some(0.5 * (a + b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub poly: Polynomial,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

/// Fits `ys ~ p(xs)` with `deg p <= degree`, restricted to the given parity.
/// The abscissae are scaled internally to keep the system well conditioned.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize, parity: Parity) -> Result<Fit> {
    let powers = parity.powers(degree);
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig("polyfit: length mismatch".into()));
    }
    if xs.len() < powers.len() {
        return Err(Error::InsufficientSamples { needed: powers.len(), got: xs.len() });
    }
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale = if scale == 0.0 { 1.0 } else { scale };
    let a = DMatrix::from_fn(xs.len(), powers.len(), |i, j| (xs[i] / scale).powi(powers[j] as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-14).map_err(|e| Error::InvalidConfig(format!("polyfit: {e}")))?;
    let mut coeffs = vec![0.0; degree + 1];
    for (j, &p) in powers.iter().enumerate() {
        coeffs[p] = sol[j] / scale.powi(p as i32);
    }
    let r = &a * &sol - &b;
    let rms = (r.norm_squared() / xs.len() as f64).sqrt();
    Ok(Fit { poly: Polynomial { coeffs }, rms })
}
