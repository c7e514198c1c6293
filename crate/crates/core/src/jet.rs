//! Truncated power series in one variable, `sum_{k <= n} c_k t^k`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by `f64` and [`Jet`], so the vector fields can be
/// written once and evaluated either pointwise or on series.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// The constant `c` in the same representation as `like`.
    fn constant(c: f64, like: &Self) -> Self;

    fn scale(self, c: f64) -> Self {
        let k = Self::constant(c, &self);
        k * self
    }
}

impl Scalar for f64 {
    fn constant(c: f64, _like: &Self) -> Self {
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// Truncated to degree `degree`; missing coefficients are zero.
    pub fn new(mut coeffs: Vec<f64>, degree: usize) -> Self {
        coeffs.resize(degree + 1, 0.0);
        Self { coeffs }
    }

    pub fn constant(c: f64, degree: usize) -> Self {
        Self::new(vec![c], degree)
    }

    /// The identity series `t`.
    pub fn variable(degree: usize) -> Self {
        Self::new(vec![0.0, 1.0], degree)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `t * d/dt`, which keeps the degree.
    pub fn euler_derivative(&self) -> Jet {
        let c = self.coeffs.iter().enumerate().map(|(k, x)| k as f64 * x).collect();
        Jet { coeffs: c }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Jet {
        let b = &self.coeffs;
        assert!(b[0] != 0.0, "jet reciprocal needs a nonzero constant term");
        let mut r = vec![0.0; b.len()];
        r[0] = 1.0 / b[0];
        for k in 1..b.len() {
            let s: f64 = (1..=k).map(|j| b[j] * r[k - j]).sum();
            r[k] = -s * r[0];
        }
        Jet { coeffs: r }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn zip_with(self, o: Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.coeffs.len(), o.coeffs.len());
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| op(*a, *b)).collect();
        Jet { coeffs: c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.zip_with(o, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.zip_with(o, |a, b| a - b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { coeffs: self.coeffs.into_iter().map(|x| -x).collect() }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in o.coeffs[..n - i].iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Jet { coeffs: c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Scalar for Jet {
    fn constant(c: f64, like: &Self) -> Self {
        Jet::constant(c, like.degree())
    }

    fn scale(self, c: f64) -> Self {
        Jet { coeffs: self.coeffs.into_iter().map(|x| c * x).collect() }
    }
}
