//! Pointwise algebra of the invariant 3-form
//!
//! ```text
//! phi = f0 (e125 + e136 + e147) + f1 e234 + f2 e567
//!     + f3 (e237 - e246 + e345) + f4 (e267 - e357 + e456)
//! ```
//!
//! along the transverse geodesic: its Gram blocks, the induced metric, the
//! Hodge dual `*phi`, the exterior derivative `d phi`, and the limit form at
//! the singular orbit.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the scaled arc-length residual, see [`g11_residual_scaled`].
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-9;

/// Five coefficients of an invariant 3-form (or of its `t`-derivative).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FCoeffs {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl FCoeffs {
    pub const fn new(f0: f64, f1: f64, f2: f64, f3: f64, f4: f64) -> Self {
        Self { f0, f1, f2, f3, f4 }
    }

    pub const fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub const fn to_array(self) -> [f64; 5] {
        [self.f0, self.f1, self.f2, self.f3, self.f4]
    }

    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `f1 f4 - f3^2`
    pub fn b1(self) -> f64 {
        self.f1 * self.f4 - self.f3 * self.f3
    }

    /// `f2 f3 - f4^2`
    pub fn b2(self) -> f64 {
        self.f2 * self.f3 - self.f4 * self.f4
    }

    /// `(f1 f2 - f3 f4) / 2`
    pub fn b3(self) -> f64 {
        0.5 * (self.f1 * self.f2 - self.f3 * self.f4)
    }

    /// The quartic `f1^2 f2^2 - 6 f1 f2 f3 f4 + 4 f1 f4^3 + 4 f2 f3^3 - 3 f3^2 f4^2`,
    /// equal to `-4 (b1 b2 - b3^2)`.
    pub fn discriminant(self) -> f64 {
        let FCoeffs { f1, f2, f3, f4, .. } = self;
        f1 * f1 * f2 * f2 - 6.0 * f1 * f2 * f3 * f4 + 4.0 * f1 * f4.powi(3) + 4.0 * f2 * f3.powi(3)
            - 3.0 * f3 * f3 * f4 * f4
    }
}

impl Add for FCoeffs {
    type Output = FCoeffs;
    fn add(self, o: FCoeffs) -> FCoeffs {
        FCoeffs::new(self.f0 + o.f0, self.f1 + o.f1, self.f2 + o.f2, self.f3 + o.f3, self.f4 + o.f4)
    }
}

impl Sub for FCoeffs {
    type Output = FCoeffs;
    fn sub(self, o: FCoeffs) -> FCoeffs {
        FCoeffs::new(self.f0 - o.f0, self.f1 - o.f1, self.f2 - o.f2, self.f3 - o.f3, self.f4 - o.f4)
    }
}

impl Mul<FCoeffs> for f64 {
    type Output = FCoeffs;
    fn mul(self, o: FCoeffs) -> FCoeffs {
        FCoeffs::new(self * o.f0, self * o.f1, self * o.f2, self * o.f3, self * o.f4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramBlocks {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// Determinant of the full 7x7 matrix of the bilinear form.
    pub det_b: f64,
}

/// Induced metric `1 (+) [[g1 I, g3 I], [g3 I, g2 I]]` in the adapted frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBlocks {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl MetricBlocks {
    pub fn is_positive_definite(&self) -> bool {
        self.g1 > 0.0 && self.g1 * self.g2 - self.g3 * self.g3 > 0.0
    }
}

/// Coefficients of an invariant 4-form in the basis
/// `e1^e234, e1^e567, e1^(e237 - e246 + e345), e1^(e267 - e357 + e456)`
/// and `alpha = e2356 + e2457 + e3467`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourForm {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
}

impl FourForm {
    pub const fn to_array(self) -> [f64; 5] {
        [self.s1, self.s2, self.s3, self.s4, self.s5]
    }

    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Sub for FourForm {
    type Output = FourForm;
    fn sub(self, o: FourForm) -> FourForm {
        FourForm {
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
            s3: self.s3 - o.s3,
            s4: self.s4 - o.s4,
            s5: self.s5 - o.s5,
        }
    }
}

impl Mul<FourForm> for f64 {
    type Output = FourForm;
    fn mul(self, o: FourForm) -> FourForm {
        FourForm { s1: self * o.s1, s2: self * o.s2, s3: self * o.s3, s4: self * o.s4, s5: self * o.s5 }
    }
}

/// Limit 3-form at the singular orbit, `A w123 + B (...)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPointForm {
    pub a: f64,
    pub b: f64,
    pub stable: bool,
}

pub fn gram_blocks(f: &FCoeffs) -> GramBlocks {
    let d = f.discriminant();
    GramBlocks { b1: f.b1(), b2: f.b2(), b3: f.b3(), det_b: f.f0.powi(9) * d * d * d / 64.0 }
}

pub fn is_admissible(f: &FCoeffs) -> bool {
    f.f0 != 0.0 && f.b1() < 0.0 && f.b2() < 0.0
}

/// `f0^2 + cbrt(D / 4)` with the sign-preserving real cube root; zero exactly
/// when `t` is an arc-length parameter.
pub fn g11_residual(f: &FCoeffs) -> f64 {
    f.f0 * f.f0 + (f.discriminant() / 4.0).cbrt()
}

/// [`g11_residual`] divided by `max(1, f0^2)`, so that the normalization test
/// is insensitive to the overall scale of the coefficients.
pub fn g11_residual_scaled(f: &FCoeffs) -> f64 {
    g11_residual(f) / (f.f0 * f.f0).max(1.0)
}

fn check_normalized(f: &FCoeffs, tol: f64) -> Result<()> {
    if !is_admissible(f) {
        return Err(Error::NonAdmissible);
    }
    let residual = g11_residual_scaled(f);
    if !(residual.abs() <= tol) {
        return Err(Error::NotNormalized { residual, tol });
    }
    Ok(())
}

pub fn metric_blocks(f: &FCoeffs) -> Result<MetricBlocks> {
    metric_blocks_with_tol(f, DEFAULT_NORMALIZATION_TOL)
}

pub fn metric_blocks_with_tol(f: &FCoeffs, tol: f64) -> Result<MetricBlocks> {
    check_normalized(f, tol)?;
    Ok(metric_blocks_unchecked(f))
}

/// The metric block formulas without admissibility or gauge checks.
pub fn metric_blocks_unchecked(f: &FCoeffs) -> MetricBlocks {
    let q = f.f0 * f.f0;
    MetricBlocks { g1: -f.b1() / q, g2: -f.b2() / q, g3: -f.b3() / q }
}

pub fn hodge_dual(f: &FCoeffs) -> Result<FourForm> {
    hodge_dual_with_tol(f, DEFAULT_NORMALIZATION_TOL)
}

pub fn hodge_dual_with_tol(f: &FCoeffs, tol: f64) -> Result<FourForm> {
    check_normalized(f, tol)?;
    Ok(hodge_dual_unchecked(f))
}

/// `*phi` in arc-length gauge, where the prefactor reduces to `1 / (2 f0^3)`.
pub fn hodge_dual_unchecked(f: &FCoeffs) -> FourForm {
    let FCoeffs { f0, f1, f2, f3, f4 } = *f;
    let k = 0.5 / f0.powi(3);
    FourForm {
        s1: k * (f1 * f1 * f2 - 3.0 * f1 * f3 * f4 + 2.0 * f3.powi(3)),
        s2: -k * (f1 * f2 * f2 - 3.0 * f2 * f3 * f4 + 2.0 * f4.powi(3)),
        s3: k * (f1 * f2 * f3 - 2.0 * f1 * f4 * f4 + f3 * f3 * f4),
        s4: -k * (f1 * f2 * f4 - 2.0 * f2 * f3 * f3 + f3 * f4 * f4),
        s5: -f0 * f0,
    }
}

/// `d phi` from the coefficients and their `t`-derivatives, using
/// `d omega = 6 (phi3 - phi4)` and `d phi3 = d phi4 = 6 alpha`.
pub fn exterior_derivative(f: &FCoeffs, fprime: &FCoeffs) -> FourForm {
    FourForm {
        s1: fprime.f1,
        s2: fprime.f2,
        s3: fprime.f3 - 6.0 * f.f0,
        s4: fprime.f4 + 6.0 * f.f0,
        s5: 6.0 * (f.f3 + f.f4),
    }
}

pub fn singular_point_form(f2_at_0: f64, f0prime_at_0: f64) -> SingularPointForm {
    let a = -8.0 / 27.0 * f2_at_0;
    let b = -2.0 / 9.0 * f0prime_at_0;
    SingularPointForm { a, b, stable: a * b < 0.0 }
}
