//! The system near the singular orbit `t = 0`.
//!
//! Substituting `f0 = t h0, f1 = t^4 h1, f2 = h2, f3 = t^2 h3, f4 = t^2 h4`
//! with `h4 = -h3 - (lambda / 6) h0^2` turns the regular system into
//! `h' = A(h) / t + B(h, t)`, with `A(h_bar) = 0` at the initial data and
//! `B` odd in `t`. Smooth solutions are even in `t` and are started here
//! from their Taylor series.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2_algebra::FCoeffs;
use crate::jet::{Jet, Scalar};
use crate::np_system::rhs_f_unchecked;

/// Desingularized variables; `h4` is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HState {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl HState {
    pub const fn new(h0: f64, h1: f64, h2: f64, h3: f64) -> Self {
        Self { h0, h1, h2, h3 }
    }

    pub const fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.h0, self.h1, self.h2, self.h3]
    }

    pub fn h4(&self, lambda: f64) -> f64 {
        -self.h3 - lambda / 6.0 * self.h0 * self.h0
    }
}

pub fn f_from_h(h: &HState, t: f64, lambda: f64) -> FCoeffs {
    let t2 = t * t;
    FCoeffs::new(t * h.h0, t2 * t2 * h.h1, h.h2, t2 * h.h3, t2 * h.h4(lambda))
}

/// Inverse of [`f_from_h`] for `t != 0`.
pub fn h_from_f(f: &FCoeffs, t: f64) -> HState {
    let t2 = t * t;
    HState::new(f.f0 / t, f.f1 / (t2 * t2), f.f2, f.f3 / t2)
}

fn h4_of<T: Scalar>(h0: &T, h3: &T, lambda: f64) -> T {
    -h3.clone() - (h0.clone() * h0.clone()).scale(lambda / 6.0)
}

/// `A(h)` for any [`Scalar`]; used pointwise and on series.
pub fn a_field_generic<T: Scalar>(h: &[T; 4], lambda: f64) -> [T; 4] {
    let [h0, h1, h2, h3] = h.clone();
    let h0_3 = h0.clone() * h0.clone() * h0.clone();
    let h0_4 = h0_3.clone() * h0.clone();
    let h3_2 = h3.clone() * h3.clone();
    let zero = T::constant(0.0, &h0);
    [
        -h0.clone() - (h2 * h3_2.clone()).scale(3.0) / h0_4,
        h1.scale(-4.0) + (h3_2 * h3.clone()).scale(lambda) / h0_3,
        zero,
        h3.scale(-2.0) + h0.scale(6.0),
    ]
}

/// `B(h, t)` for any [`Scalar`], transcribed term by term from the
/// substituted system (the last component's `t^2 (h1 h4^2 + h1 h4^2)` is
/// written as `2 t^2 h1 h4^2`).
pub fn b_field_generic<T: Scalar>(h: &[T; 4], t: &T, lambda: f64) -> [T; 4] {
    let [h0, h1, h2, h3] = h.clone();
    let h4 = h4_of(&h0, &h3, lambda);
    let t2 = t.clone() * t.clone();
    let h0_3 = h0.clone() * h0.clone() * h0.clone();
    let h0_4 = h0_3.clone() * h0.clone();
    let h4_2 = h4.clone() * h4.clone();
    let h1h2 = h1.clone() * h2.clone();
    let h3h4 = h3.clone() * h4.clone();
    let lt_h03 = (t.clone() / h0_3).scale(lambda);

    let b0 = {
        let inner = t.clone() * (h3.clone() - h4.clone()) * (h1h2.clone() + h3h4.clone())
            - (t2.clone() * t.clone() * h1.clone() * h4_2.clone()).scale(2.0);
        (inner / h0_4).scale(-1.5)
    };
    let b1 = {
        let inner = h1.clone() * h1h2.clone() - h1.clone() * h3h4.clone() - (h1.clone() * h3h4.clone()).scale(2.0);
        (lt_h03.clone() * inner).scale(0.5)
    };
    let b2 = {
        let inner = h4.clone() * (h2.clone() * h3.clone() - t2.clone() * h4_2.clone())
            - (h2.clone() * (h1h2 - h3h4)).scale(0.5);
        lt_h03.clone() * inner
    };
    let b3 = {
        let inner = h1.clone() * h2 * h3.clone() + h3.clone() * h3 * h4
            - (t2 * h1 * h4_2).scale(2.0);
        (lt_h03 * inner).scale(0.5)
    };
    [b0, b1, b2, b3]
}

pub fn a_field(h: &HState, lambda: f64) -> Result<[f64; 4]> {
    if h.h0 == 0.0 {
        return Err(Error::ZeroH0);
    }
    Ok(a_field_generic(&h.to_array(), lambda))
}

pub fn b_field(h: &HState, t: f64, lambda: f64) -> Result<[f64; 4]> {
    if h.h0 == 0.0 {
        return Err(Error::ZeroH0);
    }
    Ok(b_field_generic(&h.to_array(), &t, lambda))
}

/// `A(h) / t + B(h, t)` for `t != 0`.
pub fn rhs_h(h: &HState, t: f64, lambda: f64) -> [f64; 4] {
    let hv = h.to_array();
    let a = a_field_generic(&hv, lambda);
    let b = b_field_generic(&hv, &t, lambda);
    std::array::from_fn(|i| a[i] / t + b[i])
}

/// `h'` computed through the regular `f`-system and the chain rule, without
/// going through `A` and `B`. Only valid for `t != 0`.
pub fn rhs_h_via_f(h: &HState, t: f64, lambda: f64) -> [f64; 4] {
    let f = f_from_h(h, t, lambda);
    let fp = rhs_f_unchecked(&f, lambda);
    let t2 = t * t;
    [
        (fp.f0 - h.h0) / t,
        (fp.f1 - 4.0 * t2 * t * h.h1) / (t2 * t2),
        fp.f2,
        (fp.f3 - 2.0 * t * h.h3) / t2,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub a: f64,
    pub lambda: f64,
    pub h_bar: HState,
    /// Residual `|A(h_bar)|_inf`, zero up to rounding.
    pub a_residual: f64,
}

impl InitialData {
    /// `h3(0) = 3 h0(0)`, the smooth-extension condition in `h` form.
    pub fn satisfies_extension_condition(&self) -> bool {
        self.h_bar.h3 == 3.0 * self.h_bar.h0
    }
}

/// `h_bar = (a, 27 lambda / 4, -a^3 / 27, 3a)`, the unique zero of `A` with
/// `h0 = a` and `h3 = 3 a`.
pub fn initial_state(a: f64, lambda: f64) -> Result<InitialData> {
    if a == 0.0 {
        return Err(Error::ZeroA);
    }
    let h_bar = HState::new(a, 27.0 / 4.0 * lambda, -a * a * a / 27.0, 3.0 * a);
    let res = a_field_generic(&h_bar.to_array(), lambda);
    let a_residual = res.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(InitialData { a, lambda, h_bar, a_residual })
}

/// Jacobian of `A` at an arbitrary point.
pub fn jacobian_a(h: &HState, lambda: f64) -> Matrix4<f64> {
    let HState { h0, h2, h3, .. } = *h;
    let (h0_4, h0_5) = (h0.powi(4), h0.powi(5));
    Matrix4::new(
        -1.0 + 12.0 * h2 * h3 * h3 / h0_5, 0.0, -3.0 * h3 * h3 / h0_4, -6.0 * h2 * h3 / h0_4,
        -3.0 * lambda * h3.powi(3) / h0_4, -4.0, 0.0, 3.0 * lambda * h3 * h3 / h0.powi(3),
        0.0, 0.0, 0.0, 0.0,
        6.0, 0.0, 0.0, -2.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationMatrix(pub Matrix4<f64>);

impl LinearizationMatrix {
    /// `det(dA - l I)`.
    pub fn shifted_det(&self, l: f64) -> f64 {
        (self.0 - Matrix4::identity() * l).determinant()
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.0[(i, j)]))
    }
}

/// `dA` at the initial data for parameter `a`.
pub fn linearization(a: f64, lambda: f64) -> Result<LinearizationMatrix> {
    let init = initial_state(a, lambda)?;
    Ok(LinearizationMatrix(jacobian_a(&init.h_bar, lambda)))
}

/// The predicted characteristic value `l (l + 4) (l^2 + 7 l + 6)`.
pub fn characteristic_polynomial(l: f64) -> f64 {
    l * (l + 4.0) * (l * l + 7.0 * l + 6.0)
}

/// Even Taylor jet `h(t) = sum_k c_{2k} t^{2k}` of the smooth solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedEvenSeries {
    pub order: usize,
    pub lambda: f64,
    /// `c_0, c_2, ..., c_order`
    pub coeffs: Vec<[f64; 4]>,
}

impl TruncatedEvenSeries {
    pub fn eval(&self, t: f64) -> HState {
        let t2 = t * t;
        let mut acc = [0.0; 4];
        for c in self.coeffs.iter().rev() {
            for i in 0..4 {
                acc[i] = acc[i] * t2 + c[i];
            }
        }
        HState::from_array(acc)
    }

    pub fn derivative(&self, t: f64) -> [f64; 4] {
        let t2 = t * t;
        let mut acc = [0.0; 4];
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            for i in 0..4 {
                acc[i] = acc[i] * t2 + 2.0 * k as f64 * c[i];
            }
        }
        // acc = sum 2k c_{2k} t^{2k-2}
        acc.map(|x| x * t)
    }

    /// Coefficient of `t^power`; odd powers vanish.
    pub fn coefficient(&self, power: usize) -> [f64; 4] {
        if power % 2 == 1 {
            return [0.0; 4];
        }
        self.coeffs.get(power / 2).copied().unwrap_or([0.0; 4])
    }

    /// `|h'(t) - A(h(t)) / t - B(h(t), t)|_inf`.
    pub fn residual(&self, t: f64) -> f64 {
        let h = self.eval(t);
        let d = self.derivative(t);
        let r = rhs_h(&h, t, self.lambda);
        d.iter().zip(r).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// Taylor coefficients up to `t^order` by matching powers in
/// `t h' = A(h) + t B(h, t)`: at `t^{2k}` this is the linear system
/// `(2k I - dA) c_{2k} = (terms in c_0 .. c_{2k-2})`.
pub fn taylor_startup(init: &InitialData, order: usize) -> Result<TruncatedEvenSeries> {
    if order < 2 || order % 2 == 1 {
        return Err(Error::InvalidConfig(format!("series order must be even and >= 2, got {order}")));
    }
    let lambda = init.lambda;
    let da = jacobian_a(&init.h_bar, lambda);
    let mut coeffs = vec![init.h_bar.to_array()];

    for k in 1..=order / 2 {
        let deg = 2 * k;
        let h: [Jet; 4] = std::array::from_fn(|i| {
            let mut c = vec![0.0; deg + 1];
            for (j, cj) in coeffs.iter().enumerate() {
                c[2 * j] = cj[i];
            }
            Jet::new(c, deg)
        });
        let t = Jet::variable(deg);
        let a = a_field_generic(&h, lambda);
        let b = b_field_generic(&h, &t, lambda);
        // with c_{2k} = 0 the t^{2k} coefficient of t h' - A - t B is -(rhs)
        let r0 = Vector4::from_fn(|i, _| {
            let e = h[i].euler_derivative() - a[i].clone() - t.clone() * b[i].clone();
            e.coeff(deg)
        });
        let m = Matrix4::identity() * deg as f64 - da;
        let c = m.lu().solve(&(-r0)).ok_or(Error::SingularRecurrence { order: deg })?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularRecurrence { order: deg });
        }
        coeffs.push([c[0], c[1], c[2], c[3]]);
    }
    Ok(TruncatedEvenSeries { order, lambda, coeffs })
}
