//! Localized traces at fixed points of order one, two and three against
//! independently coded closed forms.

mod common;

use common::{bump, c, poly_field, series, single};
use conformal_index::algebra::{CrossedForm, Ctx};
use conformal_index::cocycles::phi_trace;
use conformal_index::groupoid::ConformalMap;
use conformal_index::tensoralg::Trunc;
use conformal_index::C64;

fn phi(g: ConformalMap, a: &[C64]) -> C64 {
    let act = single(g);
    let ctx = Ctx::new(&act, Trunc::Full);
    let x = CrossedForm::scalar(act.generator("g").unwrap(), poly_field(a).mul(&bump(c(0.0, 0.0), 0.5, 1.0)));
    phi_trace(&x, &ctx).unwrap().value
}

/// `−(1/(n−1)!) ∂^{n−1}(Hⁿ a)(0)` for a fixed point of order `n` at the origin,
/// by plain series division of `zⁿ` by `g(z) − z`.
fn series_oracle(g: &[C64], a: &[C64], n: usize) -> C64 {
    let shifted: Vec<C64> = g.iter().enumerate().map(|(k, ck)| if k == 1 { ck - 1.0 } else { *ck }).skip(n).collect();
    let h = series::recip(&shifted, n);
    -series::mul(&h, a, n)[n - 1]
}

fn derivs(g: &[C64]) -> impl Fn(usize) -> C64 + '_ {
    move |k| g.get(k).copied().unwrap_or_default() * (1..=k).product::<usize>() as f64
}

/// The order-three expansion with the prefactor taken as `p/g‴`.
fn order_three_display(g: &[C64], a: &[C64], p: f64) -> C64 {
    let d = derivs(g);
    let (g3, g4, g5) = (d(3), d(4), d(5));
    let (a0, a1, a2) = (a[0], a[1], 2.0 * a.get(2).copied().unwrap_or_default());
    (p / g3) * (g5 / g3 / 10.0 * a0 - (g4 / g3).powi(2) / 8.0 * a0 + g4 / g3 / 2.0 * a1 - a2)
}

#[test]
fn simple_fixed_point_of_a_dilation() {
    for lambda in [c(2.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)] {
        let a = [c(1.5, -0.5), c(0.3, 0.0), c(0.0, 2.0)];
        let got = phi(ConformalMap::affine(lambda, c(0.0, 0.0)), &a);
        let want = a[0] / (1.0 - lambda);
        assert!((got - want).norm() < 1e-9, "λ = {lambda}: {got} vs {want}");
    }
}

#[test]
fn order_two_expansion() {
    for g in [
        vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.5), c(0.2, 0.0)],
    ] {
        let a = [c(2.0, 0.0), c(1.0, 1.0), c(-3.0, 0.0)];
        let d = derivs(&g);
        let display = 2.0 / d(2) * (d(3) / d(2) / 3.0 * a[0] - a[1]);
        let got = phi(ConformalMap::poly(g.clone()), &a);
        assert!((got - display).norm() < 1e-9, "{got} vs {display}");
        assert!((got - series_oracle(&g, &a, 2)).norm() < 1e-9);
    }
}

#[test]
fn order_three_expansion_matches_series_oracle() {
    for eps in [c(0.25, 0.0), c(0.1, 0.2)] {
        let g = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), eps];
        let a = [c(2.0, 0.0), c(1.0, 1.0), c(-3.0, 0.0)];
        let got = phi(ConformalMap::poly(g.clone()), &a);
        assert!((got - series_oracle(&g, &a, 3)).norm() < 1e-9);
        assert!((got - order_three_display(&g, &a, 3.0)).norm() < 1e-9);
    }
}

#[test]
fn literal_order_three_prefactor_is_half_the_trace() {
    // The commonly quoted expansion carries 3/(2g‴); the general jet formula
    // gives 3/g‴ with the same bracket.
    let g = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.25, 0.0), c(1.0 / 3.0, 0.0)];
    let a = [c(2.0, 0.0), c(1.0, 0.0), c(-3.0, 0.0)];
    let got = phi(ConformalMap::poly(g.clone()), &a);
    let literal = order_three_display(&g, &a, 1.5);
    assert!(got.norm() > 1.0);
    assert!((got - 2.0 * literal).norm() < 1e-12 * got.norm());
}
