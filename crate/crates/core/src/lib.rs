//! Localized fixed-point traces, Todd cocycles and index pairings for crossed
//! products of conformal maps of the plane.
//!
//! The crate is layered bottom-up:
//!
//! * [`jets`]: truncated Taylor arithmetic in one holomorphic variable and in `(z, z̄)`.
//! * [`expr`]: closed-form scalar fields with exact derivatives and compact bump cutoffs.
//! * [`groupoid`]: conformal partial maps, group actions and their fixed points.
//! * [`algebra`]: the graded crossed product of forms and its differentials.
//! * [`quadrature`]: adaptive tensor Gauss–Legendre quadrature.
//! * [`cocycles`]: the localized trace, the Todd cocycle and its companions.
//! * [`tensoralg`]: truncated tensor words, liftings and collapse functionals.
//! * [`index`]: cap-product pairings and anomaly components.
//! * [`dist`]: checks of the renormalized Cauchy-kernel distributions.
//! * [`scenario`], [`report`], [`suite`]: the configuration format, JSON reports and the
//!   seeded verification suite used by the command-line front end.

pub mod algebra;
pub mod cocycles;
pub mod dist;
pub mod expr;
pub mod groupoid;
pub mod index;
pub mod jets;
pub mod quadrature;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod tensoralg;

pub use num_complex::Complex64 as C64;

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
