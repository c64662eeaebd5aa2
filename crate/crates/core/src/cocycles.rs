//! The localized trace `Φ`, the cyclic 2-cocycles `[Γ]`, `c₁` and `Td`, and
//! the Hochschild and cyclicity checkers.
//!
//! `Φ` is a sum over isolated automorphisms `(g, z0)` of order `n`:
//!
//! ```text
//! Φ(a) = Σ −1/(n−1)! ∂_z^{n−1}(Hⁿ(z) a(g, z))|_{z0},   Hⁿ = (z − z0)ⁿ / (g(z) − z)
//! ```
//!
//! which only needs the holomorphic Taylor coefficients of `a(g)` at `z0`.
//! Coefficients must be locally constant in their cutoff there (plateau
//! precondition), so the extraction is exact up to rounding.
//!
//! The 2-cocycles integrate `(1,1)`-forms over the identity-germ labels with
//! `∫ F dz∧dz̄ = −2i ∬ F dx dy`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, CrossedForm, Ctx, FormKey};
use crate::expr::{ExprError, JetOpts, ScalarField, Support, DEFAULT_GLUE_ORDER};
use crate::groupoid::{h_jet_padded, Automorphism, ConformalMap, GroupAction, GroupError, Label, MapError, Order};
use crate::quadrature::{integrate_rect, Quad, QuadratureSpec};
use crate::tensoralg::TKey;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("integrand has unbounded support")]
    Unbounded,
    #[error("{what}: paths disagree by {defect:e} (bound {bound:e})")]
    Inconsistent { what: String, defect: f64, bound: f64 },
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
}

/// One isolated automorphism's share of `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub label: Label,
    pub tensor: TKey,
    pub z0: C64,
    pub order: usize,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleValue {
    pub value: C64,
    pub est_error: f64,
    pub contributions: Vec<Contribution>,
}

/// Sum in a fixed pairwise order; every `Φ` entry point reduces through this.
pub fn ordered_sum(values: &[C64]) -> C64 {
    match values.len() {
        0 => C64::new(0.0, 0.0),
        1 => values[0],
        n => ordered_sum(&values[..n / 2]) + ordered_sum(&values[n / 2..]),
    }
}

const STRICT: JetOpts = JetOpts { strict: true, glue_order: DEFAULT_GLUE_ORDER };

/// `−1/(m−1)! ∂^{m−1}(H^m tr a)(z0)` for one matrix coefficient, with the
/// order padded to `m = n + pad`.
pub fn localized_term(
    matrix: &[ScalarField],
    n_size: usize,
    aut: &Automorphism,
    map: &ConformalMap,
    pad: usize,
    action: &GroupAction,
) -> Result<Option<Contribution>, CocycleError> {
    let Order::Finite(n) = aut.order else { return Ok(None) };
    let m = n + pad;
    let opts = action.order_opts();
    if m > opts.jet_order {
        return Err(GroupError::OrderTooHigh { z0: aut.z0, max: opts.jet_order }.into());
    }
    let h = match (&aut.h_jet, pad) {
        (Some(h), 0) => h.clone(),
        _ => h_jet_padded(map, aut.z0, n, m, opts)?,
    };
    let mut a = vec![C64::new(0.0, 0.0); m];
    for i in 0..n_size {
        let jet = matrix[i * n_size + i].jet2_with(aut.z0, m - 1, &STRICT)?;
        for (j, c) in a.iter_mut().enumerate() {
            *c += jet.coeff(j, 0);
        }
    }
    let terms: Vec<C64> = (0..m).map(|k| h.coeff(k) * a[m - 1 - k]).collect();
    Ok(Some(Contribution {
        label: aut.label.clone(),
        tensor: TKey::empty(),
        z0: aut.z0,
        order: n,
        value: -ordered_sum(&terms),
    }))
}

/// Automorphisms per label, computed once per call.
struct AutCache<'c, 'a> {
    ctx: &'c Ctx<'a>,
    found: BTreeMap<Label, Vec<Automorphism>>,
}

impl<'c, 'a> AutCache<'c, 'a> {
    fn new(ctx: &'c Ctx<'a>) -> Self {
        AutCache { ctx, found: BTreeMap::new() }
    }

    fn get(&mut self, label: &Label) -> Result<&[Automorphism], GroupError> {
        if !self.found.contains_key(label) {
            let auts = self.ctx.action.automorphisms(label)?;
            self.found.insert(label.clone(), auts);
        }
        Ok(&self.found[label])
    }
}

/// Per-automorphism contributions of the degree-zero part of `x`, in key
/// order then fixed-point order.
pub fn phi_contributions(x: &CrossedForm, ctx: &Ctx, pad: usize) -> Result<Vec<Contribution>, CocycleError> {
    let mut cache = AutCache::new(ctx);
    let mut tasks: Vec<(&FormKey, &Vec<ScalarField>, Automorphism)> = Vec::new();
    for (k, m) in x.terms() {
        if k.p + k.q != 0 {
            continue;
        }
        for aut in cache.get(&k.label)? {
            tasks.push((k, m, aut.clone()));
        }
    }
    let results: Vec<Result<Option<Contribution>, CocycleError>> = tasks
        .par_iter()
        .map(|(k, m, aut)| {
            let map = ctx.map(&k.label)?;
            let c = localized_term(m, x.n(), aut, &map, pad, ctx.action)?;
            Ok(c.map(|c| Contribution { tensor: k.tensor.clone(), ..c }))
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// `Φ(x)`, summed over all tensor keys.
pub fn phi_trace(x: &CrossedForm, ctx: &Ctx) -> Result<CocycleValue, CocycleError> {
    let contributions = phi_contributions(x, ctx, 0)?;
    let values: Vec<C64> = contributions.iter().map(|c| c.value).collect();
    Ok(CocycleValue { value: ordered_sum(&values), est_error: 0.0, contributions })
}

/// `Φ` applied coefficientwise in the tensor key.
pub fn phi_words(x: &CrossedForm, ctx: &Ctx) -> Result<BTreeMap<TKey, C64>, CocycleError> {
    Ok(group_by_key(&phi_contributions(x, ctx, 0)?))
}

pub(crate) fn group_by_key(cs: &[Contribution]) -> BTreeMap<TKey, C64> {
    let mut grouped: BTreeMap<TKey, Vec<C64>> = BTreeMap::new();
    for c in cs {
        grouped.entry(c.tensor.clone()).or_default().push(c.value);
    }
    grouped.into_iter().map(|(k, v)| (k, ordered_sum(&v))).collect()
}

const MINUS_2I: C64 = C64::new(0.0, -2.0);

/// `∫` of the `(1,1)` part over identity-germ labels, per tensor key.
pub fn integrate_units(x: &CrossedForm, ctx: &Ctx, spec: &QuadratureSpec) -> Result<BTreeMap<TKey, Quad>, CocycleError> {
    let n = x.n();
    let mut groups: BTreeMap<TKey, Vec<&ScalarField>> = BTreeMap::new();
    for (k, m) in x.terms() {
        if (k.p, k.q) != (1, 1) || !ctx.action.is_identity_germ(&k.label)? {
            continue;
        }
        let diag = groups.entry(k.tensor.clone()).or_default();
        diag.extend((0..n).map(|i| &m[i * n + i]).filter(|f| !f.is_zero()));
    }
    let mut out = BTreeMap::new();
    for (key, fields) in groups {
        let support = fields.iter().fold(Support::Empty, |s, f| s.union(&f.support()));
        let bounds = match support {
            Support::Empty => continue,
            Support::Unbounded => return Err(CocycleError::Unbounded),
            Support::Bounded(b) => b,
        };
        let integrand = |z: C64| -> Result<C64, ExprError> {
            let mut acc = C64::new(0.0, 0.0);
            for f in &fields {
                acc += f.eval(z)?;
            }
            Ok(acc)
        };
        let q = integrate_rect(bounds.lo, bounds.hi, spec, &integrand)?;
        out.insert(key, q.scale(MINUS_2I));
    }
    Ok(out)
}

/// [`integrate_units`] summed over tensor keys.
pub fn integrate_total(x: &CrossedForm, ctx: &Ctx, spec: &QuadratureSpec) -> Result<Quad, CocycleError> {
    Ok(integrate_units(x, ctx, spec)?.into_values().fold(Quad::zero(), Quad::combine))
}

fn triple(a: &[CrossedForm]) -> Result<[&CrossedForm; 3], CocycleError> {
    match a {
        [a0, a1, a2] => Ok([a0, a1, a2]),
        _ => Err(CocycleError::Arity { expected: 3, got: a.len() }),
    }
}

/// `[Γ](a0, a1, a2) = ∫ a0 da1 da2`.
pub fn fundamental_class(a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<Quad, CocycleError> {
    let [a0, a1, a2] = triple(a)?;
    let w = a0.mul(&a1.d().mul(&a2.d(), ctx)?, ctx)?;
    integrate_total(&w, ctx, spec)
}

/// `c₁(a0, a1, a2) = ∫ a0 (da1 δa2 + δa1 da2)`.
pub fn chern1(a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<Quad, CocycleError> {
    let [a0, a1, a2] = triple(a)?;
    let inner = a1.d().mul(&a2.delta(ctx)?, ctx)?.add(&a1.delta(ctx)?.mul(&a2.d(), ctx)?);
    integrate_total(&a0.mul(&inner, ctx)?, ctx, spec)
}

/// `Td = [Γ] − c₁/2`, with the direct `∫ a0 ∇a1 ∇a2` alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ToddValue {
    pub value: Quad,
    pub fundamental: Quad,
    pub chern1: Quad,
    pub direct: Quad,
    pub defect: f64,
}

/// Both Todd paths without the consistency check.
pub fn todd_paths(a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<ToddValue, CocycleError> {
    let [a0, a1, a2] = triple(a)?;
    let fundamental = fundamental_class(a, ctx, spec)?;
    let c1 = chern1(a, ctx, spec)?;
    let value = fundamental.combine(c1.scale(C64::new(-0.5, 0.0)));
    let w = a0.mul(&a1.nabla(ctx)?.mul(&a2.nabla(ctx)?, ctx)?, ctx)?;
    let direct = integrate_total(&w, ctx, spec)?;
    let defect = (value.value - direct.value).norm();
    Ok(ToddValue { value, fundamental, chern1: c1, direct, defect })
}

/// The Todd cocycle; fails when the two paths disagree beyond `2·tol`.
pub fn todd(a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<ToddValue, CocycleError> {
    let t = todd_paths(a, ctx, spec)?;
    let bound = 2.0 * spec.tol;
    if t.defect > bound {
        return Err(CocycleError::Inconsistent { what: "todd".into(), defect: t.defect, bound });
    }
    Ok(t)
}

/// Cochains the checkers accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cocycle {
    Phi,
    Fundamental,
    Chern1,
    Todd,
}

impl Cocycle {
    /// Number of arguments.
    pub fn arity(self) -> usize {
        match self {
            Cocycle::Phi => 1,
            _ => 3,
        }
    }

    pub fn eval(self, a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<C64, CocycleError> {
        if a.len() != self.arity() {
            return Err(CocycleError::Arity { expected: self.arity(), got: a.len() });
        }
        Ok(match self {
            Cocycle::Phi => phi_trace(&a[0], ctx)?.value,
            Cocycle::Fundamental => fundamental_class(a, ctx, spec)?.value,
            Cocycle::Chern1 => chern1(a, ctx, spec)?.value,
            Cocycle::Todd => todd(a, ctx, spec)?.value.value,
        })
    }
}

/// `bφ(a0, …, a_{k+1})`.
pub fn hochschild_b(c: Cocycle, a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<C64, CocycleError> {
    let k = c.arity() - 1;
    if a.len() != k + 2 {
        return Err(CocycleError::Arity { expected: k + 2, got: a.len() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=k {
        let mut args: Vec<CrossedForm> = Vec::with_capacity(k + 1);
        args.extend_from_slice(&a[..i]);
        args.push(a[i].mul(&a[i + 1], ctx)?);
        args.extend_from_slice(&a[i + 2..]);
        let v = c.eval(&args, ctx, spec)?;
        acc += if i % 2 == 0 { v } else { -v };
    }
    let mut args = vec![a[k + 1].mul(&a[0], ctx)?];
    args.extend_from_slice(&a[1..=k]);
    let v = c.eval(&args, ctx, spec)?;
    acc += if (k + 1).is_multiple_of(2) { v } else { -v };
    Ok(acc)
}

/// `|φ(a0, a1, a2) − φ(a2, a0, a1)|` for a 2-cochain.
pub fn cyclicity_defect(c: Cocycle, a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<f64, CocycleError> {
    let [a0, a1, a2] = triple(a)?;
    let x = c.eval(&[a0.clone(), a1.clone(), a2.clone()], ctx, spec)?;
    let y = c.eval(&[a2.clone(), a0.clone(), a1.clone()], ctx, spec)?;
    Ok((x - y).norm())
}

/// The same data in the coordinate `w = h(z)`: labels act by `h g h⁻¹` and
/// coefficients are pulled back by `h⁻¹`, with `dz` and `dz̄` rescaled.
pub fn transport_coordinates(
    x: &CrossedForm,
    h: &ConformalMap,
    action: &GroupAction,
) -> Result<(GroupAction, CrossedForm), CocycleError> {
    let moved = action.conjugated(h)?;
    let h_inv = std::sync::Arc::new(h.inverse().ok_or(GroupError::Map(MapError::NotInvertible))?);
    let dh = ScalarField::map_derivative(&h_inv, 1, false);
    let dh_bar = ScalarField::map_derivative(&h_inv, 1, true);
    let mut out = CrossedForm::zero(x.n());
    for (k, m) in x.terms() {
        let mut fields = Vec::with_capacity(m.len());
        for f in m {
            let mut g = f.pullback(&h_inv);
            if g.support() == Support::Unbounded && f.support() != Support::Unbounded {
                return Err(GroupError::Map(MapError::Pole(h_inv.eval(C64::new(0.0, 0.0)).unwrap_or_default())).into());
            }
            if k.p == 1 {
                g = g.mul(&dh);
            }
            if k.q == 1 {
                g = g.mul(&dh_bar);
            }
            fields.push(g);
        }
        out = out.add(&CrossedForm::term(x.n(), k.clone(), fields));
    }
    Ok((moved, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BumpCutoff;
    use crate::groupoid::Generator;
    use crate::quadrature::integrate_interval;
    use crate::tensoralg::Trunc;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bump(center: C64, a: f64, b: f64) -> ScalarField {
        ScalarField::bump(BumpCutoff::new(center, a, b).unwrap())
    }

    fn single(map: ConformalMap) -> GroupAction {
        GroupAction::free(vec![Generator { name: "g".into(), map }])
    }

    fn phi_of(act: &GroupAction, f: ScalarField) -> C64 {
        let ctx = Ctx::new(act, Trunc::Full);
        let x = CrossedForm::scalar(act.generator("g").unwrap(), f);
        phi_trace(&x, &ctx).unwrap().value
    }

    #[test]
    fn dilation_by_two() {
        let act = single(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let v = phi_of(&act, bump(c(0.0, 0.0), 1.0, 2.0));
        assert!((v - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn parabolic_order_two() {
        let act = single(ConformalMap::poly(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]));
        let a = ScalarField::z().scale(c(3.0, 0.0)).add(&ScalarField::real(5.0)).mul(&bump(c(0.0, 0.0), 0.3, 0.6));
        let ctx = Ctx::new(&act, Trunc::Full);
        let x = CrossedForm::scalar(act.generator("g").unwrap(), a);
        let v = phi_trace(&x, &ctx).unwrap();
        assert!((v.value - c(-3.0, 0.0)).norm() < 1e-12);
        assert_eq!(v.contributions.len(), 1);
        assert_eq!(v.contributions[0].order, 2);
        for pad in 1..=2 {
            let p = phi_contributions(&x, &ctx, pad).unwrap();
            assert!((p[0].value - v.contributions[0].value).norm() < 1e-12);
        }
    }

    #[test]
    fn order_three_matches_symbolic_oracle() {
        // g = z + z³ + εz⁴ + z⁵/3, a = 2 + z − 3z²; sympy gives −2ε² + ε + 11/3.
        let eps = 0.25;
        let g = ConformalMap::poly(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(eps, 0.0), c(1.0 / 3.0, 0.0)]);
        let act = single(g);
        let a = ScalarField::real(2.0)
            .add(&ScalarField::z())
            .add(&ScalarField::z().powi(2).scale(c(-3.0, 0.0)))
            .mul(&bump(c(0.0, 0.0), 0.5, 1.0));
        let want = -2.0 * eps * eps + eps + 11.0 / 3.0;
        assert!((phi_of(&act, a) - c(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn plateau_precondition_is_enforced() {
        let act = single(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let x = CrossedForm::scalar(act.generator("g").unwrap(), bump(c(0.5, 0.0), 0.2, 0.6));
        assert!(matches!(phi_trace(&x, &ctx), Err(CocycleError::Expr(ExprError::PlateauViolation(_)))));
    }

    #[test]
    fn identity_labels_do_not_contribute() {
        let act = single(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let x = CrossedForm::scalar(act.unit(), bump(c(0.0, 0.0), 1.0, 2.0));
        assert_eq!(phi_trace(&x, &ctx).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn integral_of_radial_bump() {
        let act = GroupAction::trivial();
        let ctx = Ctx::new(&act, Trunc::Full);
        let b = BumpCutoff::new(c(0.0, 0.0), 1.0, 2.0).unwrap();
        let x = CrossedForm::term(1, FormKey::new(act.unit(), TKey::empty(), 1, 1), vec![ScalarField::bump(b)]);
        let spec = QuadratureSpec::with_tol(1e-9);
        let got = integrate_total(&x, &ctx, &spec).unwrap().value;
        let radial = integrate_interval::<()>(0.0, 2.0, &spec, &|r| Ok(c(b.value(c(r, 0.0)) * r, 0.0))).unwrap();
        let want = radial.value * 2.0 * std::f64::consts::PI * MINUS_2I;
        assert!((got - want).norm() < 1e-6);
    }

    #[test]
    fn integral_ignores_non_identity_labels() {
        let act = single(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let key = FormKey::new(act.generator("g").unwrap(), TKey::empty(), 1, 1);
        let x = CrossedForm::term(1, key, vec![bump(c(0.0, 0.0), 1.0, 2.0)]);
        assert!(integrate_units(&x, &ctx, &QuadratureSpec::default()).unwrap().is_empty());
    }

    #[test]
    fn fundamental_class_vanishes_on_repeated_scalar() {
        let act = GroupAction::trivial();
        let ctx = Ctx::new(&act, Trunc::Full);
        let f = CrossedForm::scalar(act.unit(), ScalarField::z().mul(&ScalarField::zbar()).mul(&bump(c(0.0, 0.0), 0.5, 1.0)));
        let a0 = CrossedForm::scalar(act.unit(), bump(c(0.0, 0.0), 0.5, 1.0));
        let v = fundamental_class(&[a0, f.clone(), f], &ctx, &QuadratureSpec::default()).unwrap();
        assert!(v.value.norm() < 1e-12);
    }

    #[test]
    fn chern_class_vanishes_for_affine_actions() {
        let act = single(ConformalMap::affine(c(0.5, 0.1), c(0.2, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let g = act.generator("g").unwrap();
        let a = CrossedForm::scalar(g.clone(), ScalarField::z().mul(&bump(c(0.0, 0.0), 0.5, 1.0)));
        let b = CrossedForm::scalar(act.inv(&g), ScalarField::zbar().mul(&bump(c(0.1, 0.0), 0.5, 1.0)));
        let v = chern1(&[a.clone(), b, a], &ctx, &QuadratureSpec::default()).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
    }

    #[test]
    fn transport_by_scaling_preserves_phi() {
        let act = single(ConformalMap::poly(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]));
        let ctx = Ctx::new(&act, Trunc::Full);
        let a = ScalarField::z().add(&ScalarField::real(2.0)).mul(&bump(c(0.0, 0.0), 0.3, 0.6));
        let x = CrossedForm::scalar(act.generator("g").unwrap(), a);
        let before = phi_trace(&x, &ctx).unwrap().value;
        let (moved, y) = transport_coordinates(&x, &ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)), &act).unwrap();
        let after = phi_trace(&y, &Ctx::new(&moved, Trunc::Full)).unwrap().value;
        assert!((before - after).norm() < 1e-9);
    }

    #[test]
    fn transport_by_translation_moves_fixed_point() {
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let act = GroupAction::cyclic(3, Generator { name: "r".into(), map: ConformalMap::affine(w, c(0.0, 0.0)) }).unwrap();
        let ctx = Ctx::new(&act, Trunc::Full);
        let x = CrossedForm::scalar(act.generator("r").unwrap(), ScalarField::z().add(&ScalarField::real(1.0)).mul(&bump(c(0.0, 0.0), 0.5, 1.0)));
        let before = phi_trace(&x, &ctx).unwrap();
        let (moved, y) = transport_coordinates(&x, &ConformalMap::affine(c(1.0, 0.0), c(1.0, 0.0)), &act).unwrap();
        let after = phi_trace(&y, &Ctx::new(&moved, Trunc::Full)).unwrap();
        assert_eq!(after.contributions.len(), 1);
        assert!((after.contributions[0].z0 - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(after.contributions[0].order, before.contributions[0].order);
        assert!((before.value - after.value).norm() < 1e-12);
        assert!((before.value - 1.0 / (1.0 - w)).norm() < 1e-12);
    }

    #[test]
    fn trace_property_on_a_pair() {
        let act = single(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let ctx = Ctx::new(&act, Trunc::Full);
        let g = act.generator("g").unwrap();
        let a = CrossedForm::scalar(g.clone(), ScalarField::z().add(&ScalarField::real(1.0)).mul(&bump(c(0.0, 0.0), 0.5, 1.5)))
            .add(&CrossedForm::scalar(act.unit(), bump(c(0.0, 0.0), 1.0, 2.0)));
        let b = CrossedForm::scalar(g, ScalarField::zbar().add(&ScalarField::real(3.0)).mul(&bump(c(0.0, 0.0), 1.0, 2.0)));
        let d = hochschild_b(Cocycle::Phi, &[a, b], &ctx, &QuadratureSpec::default()).unwrap();
        assert!(d.norm() < 1e-12);
    }
}
