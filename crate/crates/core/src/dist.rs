//! Renormalized Cauchy-kernel distributions paired with test functions.
//!
//! The kernel of order `n` at `z0` is `∂_z^{n−1}(1/π(z − z0))`, paired by
//! moving all derivatives onto the test function:
//!
//! ```text
//! ⟨K, φ⟩ = ((−1)^{n−1}/π) ∬ ∂_z^{n−1}φ(z) / (z − z0) dx dy
//! ```
//!
//! The remaining `1/(z − z0)` singularity is removed by polar coordinates
//! about `z0` (`dx dy / (z − z0) = e^{−iθ} dr dθ`) over a disk covering the
//! support, so the quadrature sees a smooth integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Bounds, ExprError, ScalarField, Support};
use crate::groupoid::{ConformalMap, MapError};
use crate::quadrature::{integrate_rect, Quad, QuadratureSpec};

/// Highest kernel order accepted.
pub const N_MAX: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("test function must have compact support")]
    Unbounded,
    #[error("kernel order {0} outside 1..={N_MAX}")]
    Order(usize),
    #[error("coordinate change must be affine or Möbius")]
    NotMobius,
}

/// `∂_z^{n−1}(1/π(z − z0)) + delta·δ²(z − z0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormKernel {
    pub n: usize,
    pub z0: C64,
    /// Coefficient of an added Dirac term; zero is the conformally invariant choice.
    #[serde(default)]
    pub delta: C64,
}

impl RenormKernel {
    pub fn new(n: usize, z0: C64) -> Self {
        RenormKernel { n, z0, delta: C64::new(0.0, 0.0) }
    }

    pub fn with_delta(self, delta: C64) -> Self {
        RenormKernel { delta, ..self }
    }
}

fn bounds_of(phi: &ScalarField) -> Result<Option<Bounds>, DistError> {
    match phi.support() {
        Support::Empty => Ok(None),
        Support::Unbounded => Err(DistError::Unbounded),
        Support::Bounded(b) => Ok(Some(b)),
    }
}

/// `∬ f(z) / (z − z0) dx dy` over the support box of `f`.
pub fn cauchy_integral(z0: C64, f: &ScalarField, spec: &QuadratureSpec) -> Result<Quad, DistError> {
    let Some(b) = bounds_of(f)? else { return Ok(Quad::zero()) };
    if !b.contains(z0) {
        return Ok(integrate_rect(b.lo, b.hi, spec, &|z: C64| Ok::<_, ExprError>(f.eval(z)? / (z - z0)))?);
    }
    let radius = b.corners().iter().map(|c| (c - z0).norm()).fold(0.0, f64::max);
    let polar = |p: C64| -> Result<C64, ExprError> {
        let e = C64::from_polar(1.0, p.im);
        Ok(f.eval(z0 + e * p.re)? * e.conj())
    };
    Ok(integrate_rect(C64::new(0.0, 0.0), C64::new(radius, 2.0 * PI), spec, &polar)?)
}

/// `⟨K, φ⟩`.
pub fn pair_kernel(k: &RenormKernel, phi: &ScalarField, spec: &QuadratureSpec) -> Result<Quad, DistError> {
    if k.n == 0 || k.n > N_MAX {
        return Err(DistError::Order(k.n));
    }
    let sign = if k.n % 2 == 1 { 1.0 } else { -1.0 };
    let q = cauchy_integral(k.z0, &phi.deriv(k.n - 1, 0), spec)?.scale(C64::new(sign / PI, 0.0));
    if k.delta == C64::new(0.0, 0.0) {
        return Ok(q);
    }
    Ok(Quad { value: q.value + k.delta * phi.eval(k.z0)?, ..q })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub defect: f64,
    pub est_error: f64,
    pub converged: bool,
}

impl IdentityCheck {
    fn new(lhs: Quad, rhs: Quad) -> Self {
        IdentityCheck {
            lhs: lhs.value,
            rhs: rhs.value,
            defect: (lhs.value - rhs.value).norm(),
            est_error: lhs.est_error + rhs.est_error,
            converged: lhs.converged && rhs.converged,
        }
    }
}

/// `−(1/π) ∬ ∂_z̄φ / (z − z0)` against `φ(z0)`.
pub fn check_dolbeault(z0: C64, phi: &ScalarField, spec: &QuadratureSpec) -> Result<IdentityCheck, DistError> {
    let lhs = cauchy_integral(z0, &phi.d_zbar(), spec)?.scale(C64::new(-1.0 / PI, 0.0));
    let rhs = Quad { value: phi.eval(z0)?, ..Quad::zero() };
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Both sides of `∂_z^{n−1}(1/(z−z0)) ((z−z0)/(w−w0))ⁿ = ∂_w^{n−1}(1/(w−w0))`
/// for `w = h(z)`, paired with `φ`; the right side is paired in `w` with
/// the transported density `φ(h⁻¹ w) |(h⁻¹)'(w)|²`.
pub fn check_covariance(n: usize, h: &ConformalMap, z0: C64, phi: &ScalarField, spec: &QuadratureSpec) -> Result<IdentityCheck, DistError> {
    let [a, b, c, d] = h.matrix().ok_or(DistError::NotMobius)?;
    let det = a * d - b * c;
    // (z − z0)/(h(z) − h(z0)) = (cz + d)(cz0 + d)/det.
    let s = (c * z0 + d) / det;
    let ratio = ScalarField::z().scale(c * s).add(&ScalarField::constant(d * s));
    let lhs = pair_kernel(&RenormKernel::new(n, z0), &ratio.powi(n as u32).mul(phi), spec)?;
    let h_inv = Arc::new(h.inverse().ok_or(MapError::NotInvertible)?);
    let jac = ScalarField::map_derivative(&h_inv, 1, false).mul(&ScalarField::map_derivative(&h_inv, 1, true));
    let moved = phi.pullback(&h_inv).mul(&jac);
    if moved.support() == Support::Unbounded {
        return Err(DistError::Unbounded);
    }
    let rhs = pair_kernel(&RenormKernel::new(n, h.eval(z0)?), &moved, spec)?;
    Ok(IdentityCheck::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BumpCutoff;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bump(center: C64, a: f64, b: f64) -> ScalarField {
        ScalarField::bump(BumpCutoff::new(center, a, b).unwrap())
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_tol(1e-9)
    }

    #[test]
    fn regular_kernel_matches_plain_quadrature() {
        let phi = ScalarField::z().add(&ScalarField::real(1.0)).mul(&bump(c(2.0, 0.0), 0.3, 0.6));
        let got = pair_kernel(&RenormKernel::new(1, c(0.0, 0.0)), &phi, &spec()).unwrap();
        let plain = integrate_rect(c(1.4, -0.6), c(2.6, 0.6), &spec(), &|z: C64| Ok::<_, ExprError>(phi.eval(z)? / (PI * z))).unwrap();
        assert!((got.value - plain.value).norm() < 1e-8);
    }

    #[test]
    fn even_test_functions_vanish_against_the_odd_kernel() {
        let z0 = c(0.3, -0.2);
        let radial = bump(z0, 0.5, 1.0);
        let even = ScalarField::z().add(&ScalarField::constant(-z0)).powi(2).mul(&radial);
        for phi in [radial, even] {
            assert!(pair_kernel(&RenormKernel::new(1, z0), &phi, &spec()).unwrap().value.norm() < 1e-8);
        }
    }

    #[test]
    fn second_order_kernel_matches_principal_value() {
        // With no derivative moved, ⟨K₂, φ⟩ = −(1/π) PV∬ φ/(z − z0)²; the angular
        // integral kills the first-order Taylor terms, which are subtracted.
        let z0 = c(0.1, 0.05);
        let phi = ScalarField::z()
            .mul(&ScalarField::zbar())
            .add(&ScalarField::z().scale(c(0.5, 1.0)))
            .add(&ScalarField::real(2.0))
            .mul(&bump(c(0.0, 0.0), 0.4, 1.0));
        let jet = phi.jet2(z0, 1).unwrap();
        let (f0, fz, fzb) = (jet.coeff(0, 0), jet.coeff(1, 0), jet.coeff(0, 1));
        let radius = 1.0 + z0.norm() + 0.1;
        let oracle = integrate_rect(c(0.0, 0.0), c(radius, 2.0 * PI), &spec(), &|p: C64| {
            let e = C64::from_polar(1.0, p.im);
            let v = phi.eval(z0 + e * p.re)? - f0 - fz * e * p.re - fzb * e.conj() * p.re;
            Ok::<_, ExprError>(-v * e.conj() * e.conj() / (PI * p.re.max(1e-300)))
        })
        .unwrap();
        let got = pair_kernel(&RenormKernel::new(2, z0), &phi, &spec()).unwrap();
        assert!((got.value - oracle.value).norm() < 1e-7, "{} vs {}", got.value, oracle.value);
    }

    #[test]
    fn dolbeault_relation() {
        let z0 = c(0.2, 0.1);
        let phi = bump(c(0.0, 0.0), 0.5, 1.0);
        assert!(check_dolbeault(z0, &phi, &spec()).unwrap().defect < 1e-7);
        let far = check_dolbeault(c(3.0, 0.0), &phi, &spec()).unwrap();
        assert!(far.lhs.norm() < 1e-7 && far.rhs == c(0.0, 0.0));
        let vanishing = ScalarField::z().add(&ScalarField::constant(-z0)).mul(&phi);
        assert!(check_dolbeault(z0, &vanishing, &spec()).unwrap().lhs.norm() < 1e-7);
    }

    #[test]
    fn covariance_under_scaling_and_mobius() {
        let phi = ScalarField::z().add(&ScalarField::real(1.5)).mul(&bump(c(0.05, 0.0), 0.2, 0.5));
        let s = QuadratureSpec::with_tol(1e-8);
        let scale = ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0));
        for n in 1..=2 {
            assert!(check_covariance(n, &scale, c(0.0, 0.0), &phi, &s).unwrap().defect < 1e-6);
        }
        let mob = ConformalMap::mobius(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        let r = check_covariance(3, &mob, c(0.0, 0.0), &phi, &s).unwrap();
        assert!(r.defect < 1e-5, "{r:?}");
        assert!(r.lhs.norm() > 1e-3);
    }

    #[test]
    fn dirac_term_shifts_by_its_weight() {
        let z0 = c(0.0, 0.1);
        let phi = ScalarField::zbar().add(&ScalarField::real(1.0)).mul(&bump(c(0.0, 0.0), 0.4, 0.8));
        let k = RenormKernel::new(2, z0);
        let base = pair_kernel(&k, &phi, &spec()).unwrap().value;
        let shifted = pair_kernel(&k.with_delta(c(0.7, -0.2)), &phi, &spec()).unwrap().value;
        assert!((shifted - base - c(0.7, -0.2) * phi.eval(z0).unwrap()).norm() < 1e-12);
    }
}
