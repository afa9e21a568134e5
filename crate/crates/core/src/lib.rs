//! Dimensions of homogeneous linear systems of plane curves `L_d(m^n)`.
//!
//! * [`calculus`]: virtual and expected dimensions, the twist selection and
//!   the fibered-product dimension of a degeneration `n = n1 * n2`.
//! * [`oracle`]: actual (generic) dimension from the rank of the
//!   Taylor-vanishing conditions matrix over a prime field.
//! * [`certify`]: recursive non-speciality certificates whose leaves are
//!   rank witnesses, plus an independent verifier.
//! * [`store`]: JSON-lines memoization of results and certificates.
//! * [`tables`] and [`selftest`]: closed-form case tables and the property
//!   grids that cross-check the formulas.

pub mod calculus;
pub mod certify;
pub mod error;
pub mod exec;
pub mod oracle;
pub mod selftest;
pub mod store;
pub mod sweep;
pub mod tables;

pub use calculus::{CaseLabel, FiberedProduct, KSelection, SystemSpec, VecDim};
pub use error::{Error, Result};
pub use exec::Exec;
