//! Algebraic invariants as randomized properties.

mod common;

use common::{bump, c, mobius_scenario, single};
use conformal_index::algebra::{CrossedForm, Ctx};
use conformal_index::cocycles::phi_trace;
use conformal_index::dist::{check_dolbeault, pair_kernel, RenormKernel};
use conformal_index::expr::ScalarField;
use conformal_index::groupoid::ConformalMap;
use conformal_index::jets::Jet1;
use conformal_index::quadrature::QuadratureSpec;
use conformal_index::suite::{lifting_exactness, trace_property, Sampler};
use conformal_index::tensoralg::Trunc;
use conformal_index::C64;
use proptest::prelude::*;

fn cplx(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn jet(order: usize) -> impl Strategy<Value = Jet1> {
    prop::collection::vec(cplx(2.0), order + 1).prop_map(|cs| Jet1::new(c(0.0, 0.0), cs))
}

fn close(a: &Jet1, b: &Jet1, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= tol * (1.0 + y.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_product_is_commutative_and_associative(a in jet(6), b in jet(6), d in jet(6)) {
        let ab = a.mul(&b).unwrap();
        prop_assert!(close(&ab, &b.mul(&a).unwrap(), 1e-12));
        prop_assert!(close(&ab.mul(&d).unwrap(), &a.mul(&b.mul(&d).unwrap()).unwrap(), 1e-10));
    }

    #[test]
    fn jet_reciprocal_inverts(mut a in jet(6), lead in cplx(2.0)) {
        prop_assume!(lead.norm() > 0.3);
        a = a.add_constant(lead - a.value());
        let one = a.mul(&a.recip().unwrap()).unwrap();
        prop_assert!(close(&one, &Jet1::constant(c(0.0, 0.0), c(1.0, 0.0), 6), 1e-9));
    }

    #[test]
    fn jet_derivative_obeys_leibniz(a in jet(6), b in jet(6)) {
        let lhs = a.mul(&b).unwrap().derivative();
        let rhs = a.derivative().mul(&b.truncate(5)).unwrap().add(&a.truncate(5).mul(&b.derivative()).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn prefix_form_round_trips(k0 in cplx(2.0), k1 in cplx(2.0), z in cplx(0.8)) {
        let f = ScalarField::constant(k0)
            .add(&ScalarField::z().mul(&ScalarField::zbar()).scale(k1))
            .mul(&bump(c(0.0, 0.0), 0.5, 1.0));
        let g = ScalarField::parse(&f.to_prefix().unwrap()).unwrap();
        prop_assert!((f.eval(z).unwrap() - g.eval(z).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn phi_is_linear(s in cplx(2.0), k in prop::collection::vec(cplx(1.0), 4), lambda in cplx(3.0)) {
        prop_assume!((lambda - c(1.0, 0.0)).norm() > 0.2 && lambda.norm() > 0.1);
        let act = single(ConformalMap::affine(lambda, c(0.0, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let g = act.generator("g").unwrap();
        let f1 = ScalarField::constant(k[0]).add(&ScalarField::z().scale(k[1])).mul(&bump(c(0.0, 0.0), 0.5, 1.0));
        let f2 = ScalarField::constant(k[2]).add(&ScalarField::zbar().scale(k[3])).mul(&bump(c(0.1, 0.0), 0.5, 1.0));
        let (a, b) = (CrossedForm::scalar(g.clone(), f1), CrossedForm::scalar(g, f2));
        let sum = phi_trace(&a.add(&b.scale(s)), &ctx).unwrap().value;
        let parts = phi_trace(&a, &ctx).unwrap().value + s * phi_trace(&b, &ctx).unwrap().value;
        prop_assert!((sum - parts).norm() < 1e-12 * (1.0 + parts.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trace_property_over_seeds(seed in any::<u64>()) {
        let check = trace_property(&mobius_scenario(), &mut Sampler::new(seed), 3, 1e-9).unwrap();
        prop_assert!(check.pass, "{check:?}");
    }

    #[test]
    fn liftings_are_exact_over_seeds(seed in any::<u64>()) {
        let check = lifting_exactness(&mobius_scenario(), &mut Sampler::new(seed), 2, &[2, 3]).unwrap();
        prop_assert!(check.pass, "{check:?}");
    }

    #[test]
    fn kernel_pairing_is_linear(n in 1usize..=3, z0 in cplx(0.4), alpha in cplx(2.0), beta in cplx(2.0), center in cplx(0.5)) {
        let spec = QuadratureSpec::with_tol(1e-9);
        let k = RenormKernel::new(n, z0);
        let phi = ScalarField::z().add(&ScalarField::real(1.0)).mul(&bump(center, 0.3, 0.7));
        let psi = ScalarField::zbar().mul(&ScalarField::z()).mul(&bump(c(0.0, 0.0), 0.4, 0.9));
        let both = pair_kernel(&k, &phi.scale(alpha).add(&psi.scale(beta)), &spec).unwrap();
        let sep = alpha * pair_kernel(&k, &phi, &spec).unwrap().value + beta * pair_kernel(&k, &psi, &spec).unwrap().value;
        prop_assert!((both.value - sep).norm() < 1e-7 * (1.0 + sep.norm()), "{} vs {}", both.value, sep);
    }

    #[test]
    fn dirac_weight_shifts_exactly(z0 in cplx(0.3), w in cplx(2.0)) {
        let spec = QuadratureSpec::with_tol(1e-8);
        let phi = ScalarField::z().add(&ScalarField::real(2.0)).mul(&bump(c(0.0, 0.0), 0.4, 0.8));
        let k = RenormKernel::new(2, z0);
        let base = pair_kernel(&k, &phi, &spec).unwrap().value;
        let shifted = pair_kernel(&k.with_delta(w), &phi, &spec).unwrap().value;
        prop_assert!((shifted - base - w * phi.eval(z0).unwrap()).norm() < 1e-8);
    }
}

/// The Dolbeault defect should track the requested tolerance.
#[test]
fn dolbeault_defect_converges_with_tolerance() {
    let phi = ScalarField::z().add(&ScalarField::real(0.5)).mul(&bump(c(0.1, -0.1), 0.3, 0.9));
    for z0 in [c(0.0, 0.0), c(0.35, 0.2), c(-0.5, 0.4)] {
        let mut last = f64::INFINITY;
        for tol in [1e-4, 1e-5, 1e-6] {
            let r = check_dolbeault(z0, &phi, &QuadratureSpec::with_tol(tol)).unwrap();
            assert!(r.converged);
            assert!(r.defect < 10.0 * tol, "z0 = {z0}, tol = {tol}: {}", r.defect);
            assert!(r.defect <= last.max(1e-12), "defect grew at tol = {tol}");
            last = r.defect;
        }
    }
}
