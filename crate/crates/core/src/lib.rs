//! Numerical experiments on joint universality and generalized strong
//! recurrence of the Riemann zeta function.
//!
//! The pipeline fits finite Euler products with rational phases to target
//! functions on a rectangle in the strip `1/2 < Re s < 1`, locates vertical
//! shifts whose prime phases land near the fitted ones, and certifies the
//! shifts by direct evaluation of zeta.

pub mod complexfn;
pub mod dioph;
pub mod error;
pub mod eulerfit;
pub mod lattice;
pub mod primes;
pub mod recurrence;
pub mod zetaeval;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
