use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2_algebra::FCoeffs;

/// A solution `t -> (f(t), f'(t))` of the regular system with a fixed `lambda`.
pub trait SolutionPath {
    fn lambda(&self) -> f64;
    /// Open interval of definition.
    fn domain(&self) -> (f64, f64);
    fn eval(&self, t: f64) -> Result<(FCoeffs, FCoeffs)>;
}

impl<P: SolutionPath + ?Sized> SolutionPath for &P {
    fn lambda(&self) -> f64 {
        (**self).lambda()
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn eval(&self, t: f64) -> Result<(FCoeffs, FCoeffs)> {
        (**self).eval(t)
    }
}

/// Elements of `S3` acting through outer automorphisms, plus the time
/// reflection `o`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauElement {
    Identity,
    /// `(f0(t), ..) -> (-f0(-t), f1(-t), .., f4(-t))`
    O,
    T12,
    T13,
    T23,
    T123,
    T132,
}

impl TauElement {
    pub const PERMUTATIONS: [TauElement; 6] = [
        TauElement::Identity,
        TauElement::T12,
        TauElement::T13,
        TauElement::T23,
        TauElement::T123,
        TauElement::T132,
    ];

    /// Pointwise action on coefficients. For [`TauElement::O`] this is only the
    /// sign flip of `f0`; the time reflection belongs to [`Transformed`].
    pub fn apply(self, f: &FCoeffs) -> FCoeffs {
        let FCoeffs { f0, f1, f2, f3, f4 } = *f;
        let s = -f1 - f2 - 3.0 * (f3 + f4);
        let a = match self {
            TauElement::Identity => [f0, f1, f2, f3, f4],
            TauElement::O => [-f0, f1, f2, f3, f4],
            TauElement::T12 => [-f0, f2, f1, f4, f3],
            TauElement::T13 => [-f0, f1, s, -f1 - f3, f1 + 2.0 * f3 + f4],
            TauElement::T23 => [-f0, s, f2, f2 + f3 + 2.0 * f4, -f2 - f4],
            TauElement::T123 => [f0, s, f1, f1 + 2.0 * f3 + f4, -f1 - f3],
            TauElement::T132 => [f0, f2, s, -f2 - f4, f2 + f3 + 2.0 * f4],
        };
        FCoeffs::from_array(a)
    }

    /// Integer matrix of the linear action, rows indexed by output component.
    pub fn matrix(self) -> [[i64; 5]; 5] {
        let mut m = [[0i64; 5]; 5];
        for (j, col) in (0..5).map(|j| (j, unit(j))) {
            let image = self.apply(&col).to_array();
            for i in 0..5 {
                m[i][j] = image[i] as i64;
            }
        }
        m
    }

    /// The permutation element equal to `self ∘ other` (apply `other` first),
    /// or `None` if the product is not among the printed six.
    pub fn compose(self, other: TauElement) -> Option<TauElement> {
        let (a, b) = (self.matrix(), other.matrix());
        let mut p = [[0i64; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                p[i][j] = (0..5).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        let candidates: &[TauElement] = if self == TauElement::O || other == TauElement::O {
            &[TauElement::Identity, TauElement::O]
        } else {
            &Self::PERMUTATIONS
        };
        candidates.iter().copied().find(|e| e.matrix() == p)
    }

    pub fn reflects_time(self) -> bool {
        self == TauElement::O
    }
}

fn unit(j: usize) -> FCoeffs {
    let mut a = [0.0; 5];
    a[j] = 1.0;
    FCoeffs::from_array(a)
}

impl fmt::Display for TauElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TauElement::Identity => "id",
            TauElement::O => "o",
            TauElement::T12 => "12",
            TauElement::T13 => "13",
            TauElement::T23 => "23",
            TauElement::T123 => "123",
            TauElement::T132 => "132",
        };
        f.write_str(s)
    }
}

impl FromStr for TauElement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "id" | "identity" => TauElement::Identity,
            "o" => TauElement::O,
            "12" => TauElement::T12,
            "13" => TauElement::T13,
            "23" => TauElement::T23,
            "123" => TauElement::T123,
            "132" => TauElement::T132,
            _ => return Err(Error::UnknownTau(s.to_string())),
        })
    }
}

/// A path mapped through a [`TauElement`]; `o` also reflects time.
#[derive(Debug, Clone)]
pub struct Transformed<P> {
    pub inner: P,
    pub tau: TauElement,
}

impl<P: SolutionPath> SolutionPath for Transformed<P> {
    fn lambda(&self) -> f64 {
        self.inner.lambda()
    }

    fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.domain();
        if self.tau.reflects_time() {
            (-hi, -lo)
        } else {
            (lo, hi)
        }
    }

    fn eval(&self, t: f64) -> Result<(FCoeffs, FCoeffs)> {
        if self.tau.reflects_time() {
            let (f, fp) = self.inner.eval(-t)?;
            let g = FCoeffs::new(-f.f0, f.f1, f.f2, f.f3, f.f4);
            let gp = FCoeffs::new(fp.f0, -fp.f1, -fp.f2, -fp.f3, -fp.f4);
            Ok((g, gp))
        } else {
            let (f, fp) = self.inner.eval(t)?;
            Ok((self.tau.apply(&f), self.tau.apply(&fp)))
        }
    }
}

/// `f0(t) -> mu^2 f0(t / mu)`, `fi(t) -> mu^3 fi(t / mu)`: a solution with
/// constant `lambda / mu`.
#[derive(Debug, Clone)]
pub struct Rescaled<P> {
    pub inner: P,
    pub mu: f64,
}

impl<P: SolutionPath> SolutionPath for Rescaled<P> {
    fn lambda(&self) -> f64 {
        self.inner.lambda() / self.mu
    }

    fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.domain();
        let (a, b) = (self.mu * lo, self.mu * hi);
        (a.min(b), a.max(b))
    }

    fn eval(&self, t: f64) -> Result<(FCoeffs, FCoeffs)> {
        let mu = self.mu;
        let (f, fp) = self.inner.eval(t / mu)?;
        let (m2, m3) = (mu * mu, mu * mu * mu);
        let g = FCoeffs::new(m2 * f.f0, m3 * f.f1, m3 * f.f2, m3 * f.f3, m3 * f.f4);
        let gp = FCoeffs::new(mu * fp.f0, m2 * fp.f1, m2 * fp.f2, m2 * fp.f3, m2 * fp.f4);
        Ok((g, gp))
    }
}

pub fn rescale<P: SolutionPath>(path: P, mu: f64) -> Rescaled<P> {
    assert!(mu != 0.0, "rescaling factor must be nonzero");
    Rescaled { inner: path, mu }
}

/// Rescale so that the result solves the system with `lambda = 1`.
pub fn to_unit_lambda<P: SolutionPath>(path: P) -> Rescaled<P> {
    let mu = path.lambda();
    rescale(path, mu)
}
