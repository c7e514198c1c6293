//! Numerics for `SU(2)^3`-invariant nearly parallel G2-structures on the
//! cohomogeneity-one 7-manifold with principal orbit `S3 x S3`.

// `!(x < tol)` is used on purpose: NaN must fail the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod checks;
pub mod error;
pub mod fit;
pub mod g2_algebra;
pub mod integrate;
pub mod io;
pub mod jet;
pub mod np_system;
pub mod singular_ivp;
pub mod stepper;

pub use error::{Error, Result};
pub use g2_algebra::FCoeffs;
