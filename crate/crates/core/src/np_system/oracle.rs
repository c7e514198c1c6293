//! Closed-form solutions: the sine-cone over the homogeneous nearly Kähler
//! `S3 x S3`, and the round and squashed 7-spheres. Derivatives are
//! differentiated by hand.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tau::SolutionPath;
use crate::error::{Error, Result};
use crate::g2_algebra::{FCoeffs, MetricBlocks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleName {
    SineCone,
    RoundSphere,
    SquashedSphere,
}

impl OracleName {
    pub const ALL: [OracleName; 3] =
        [OracleName::SineCone, OracleName::RoundSphere, OracleName::SquashedSphere];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleName::SineCone => "sine_cone",
            OracleName::RoundSphere => "round_sphere",
            OracleName::SquashedSphere => "squashed_sphere",
        }
    }

    pub fn lambda(self) -> f64 {
        match self {
            OracleName::SineCone | OracleName::RoundSphere => 4.0,
            OracleName::SquashedSphere => 12.0 / 5f64.sqrt(),
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            OracleName::SineCone => (0.0, PI),
            _ => (0.0, FRAC_PI_2),
        }
    }
}

impl fmt::Display for OracleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OracleName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownOracle(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub f: FCoeffs,
    pub fprime: FCoeffs,
    pub lambda: f64,
}

pub fn oracle(name: OracleName, t: f64) -> Result<OracleSample> {
    let (lo, hi) = name.domain();
    if !(t > lo && t < hi) {
        return Err(Error::OutOfDomain { name: name.as_str(), t });
    }
    let (f, fprime) = closed_form(name, t);
    Ok(OracleSample { f, fprime, lambda: name.lambda() })
}

fn closed_form(name: OracleName, t: f64) -> (FCoeffs, FCoeffs) {
    let (s, c) = t.sin_cos();
    match name {
        OracleName::SineCone => {
            let r3 = 3f64.sqrt();
            let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
            let f = FCoeffs::new(
                -2.0 * r3 * s2,
                8.0 * s4,
                8.0 * s4,
                -4.0 * r3 * s3 * c - 4.0 * s4,
                4.0 * r3 * s3 * c - 4.0 * s4,
            );
            let w = 3.0 * s2 * c * c - s4;
            let fp = FCoeffs::new(
                -4.0 * r3 * s * c,
                32.0 * s3 * c,
                32.0 * s3 * c,
                -4.0 * r3 * w - 16.0 * s3 * c,
                4.0 * r3 * w - 16.0 * s3 * c,
            );
            (f, fp)
        }
        OracleName::RoundSphere => {
            let (s2, c2) = (s * s, c * c);
            let f = FCoeffs::new(-9.0 * s * c, 27.0 * s2 * s2, 27.0 * c2 * c2, -27.0 * s2 * c2, -27.0 * s2 * c2);
            let d34 = -54.0 * s * c * (c2 - s2);
            let fp = FCoeffs::new(-9.0 * (c2 - s2), 108.0 * s2 * s * c, -108.0 * c2 * c * s, d34, d34);
            (f, fp)
        }
        OracleName::SquashedSphere => {
            let r5 = 5f64.sqrt();
            let k = 27.0 / r5;
            let (s2, c2) = (s * s, c * c);
            let (s3c3, s5c, sc5) = (s2 * s * c2 * c, s2 * s2 * s * c, s * c2 * c2 * c);
            let f = FCoeffs::new(
                9.0 / r5 * s * c,
                k * (3.0 * s2 * s2 * c2 - 0.2 * s2 * s2 * s2),
                k * (3.0 * c2 * c2 * s2 - 0.2 * c2 * c2 * c2),
                k * s2 * c2 * (c2 - 2.2 * s2),
                k * s2 * c2 * (s2 - 2.2 * c2),
            );
            let fp = FCoeffs::new(
                9.0 / r5 * (c2 - s2),
                k * (12.0 * s3c3 - 7.2 * s5c),
                k * (-12.0 * s3c3 + 7.2 * sc5),
                k * (2.0 * sc5 - 12.8 * s3c3 + 4.4 * s5c),
                k * (12.8 * s3c3 - 2.0 * s5c - 4.4 * sc5),
            );
            (f, fp)
        }
    }
}

/// The metric blocks as printed alongside each closed form.
pub fn printed_metric(name: OracleName, t: f64) -> MetricBlocks {
    let (s, c) = t.sin_cos();
    let (s2, c2) = (s * s, c * c);
    match name {
        OracleName::SineCone => MetricBlocks { g1: 4.0 * s2, g2: 4.0 * s2, g3: -2.0 * s2 },
        OracleName::RoundSphere => MetricBlocks { g1: 9.0 * s2, g2: 9.0 * c2, g3: 0.0 },
        OracleName::SquashedSphere => MetricBlocks {
            g1: 7.2 * s2 * (1.25 - s2),
            g2: 7.2 * c2 * (1.25 - c2),
            g3: -7.2 * s2 * c2,
        },
    }
}

/// One of the closed-form solutions as a [`SolutionPath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Oracle(pub OracleName);

impl SolutionPath for Oracle {
    fn lambda(&self) -> f64 {
        self.0.lambda()
    }
    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }
    fn eval(&self, t: f64) -> Result<(FCoeffs, FCoeffs)> {
        let s = oracle(self.0, t)?;
        Ok((s.f, s.fprime))
    }
}
