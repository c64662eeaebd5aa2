//! Cap-product pairings of liftings with the localized trace and the Todd
//! cocycle, and the two components of the anomaly.
//!
//! Results are maps from normalized tensor keys (see [`Trunc::natural`]) to
//! numbers. A [`Collapse`] functional turns them into one number.
//! Constant parts of the liftings have vanishing differentials and sit on
//! the unit label, so they drop out of both the `Φ` and the integral terms.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, CrossedForm, Ctx};
use crate::cocycles::{group_by_key, integrate_units, localized_term, ordered_sum, phi_contributions, CocycleError, Contribution};
use crate::expr::{ExprError, ScalarField, Support};
use crate::groupoid::{GroupAction, GroupError};
use crate::quadrature::{integrate_rect, Quad, QuadratureSpec};
use crate::tensoralg::{certify_idempotent, certify_inverse, lift_idempotent, lift_invertible, Collapse, CollapseError, TKey, Trunc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Collapse(#[from] CollapseError),
    #[error("anomaly Δ¹: explicit and ∇ paths disagree by {defect:e} (bound {bound:e})")]
    Inconsistent { defect: f64, bound: f64 },
    #[error("{0}")]
    Input(String),
}

impl From<GroupError> for IndexError {
    fn from(e: GroupError) -> Self {
        IndexError::Cocycle(e.into())
    }
}

impl From<ExprError> for IndexError {
    fn from(e: ExprError) -> Self {
        IndexError::Cocycle(e.into())
    }
}

/// Settings shared by both pairings.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingOpts {
    pub trunc: Trunc,
    /// Series length when the truncation does not imply one.
    pub terms: usize,
    pub quadrature: QuadratureSpec,
    pub collapse: Option<Collapse>,
}

impl Default for PairingOpts {
    fn default() -> Self {
        PairingOpts { trunc: Trunc::Words(3), terms: 3, quadrature: QuadratureSpec::default(), collapse: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingResult {
    /// `Φ`-part minus integral part, per normalized key.
    #[serde(skip)]
    pub words: BTreeMap<TKey, C64>,
    #[serde(skip)]
    pub phi_part: BTreeMap<TKey, C64>,
    #[serde(skip)]
    pub integral_part: BTreeMap<TKey, C64>,
    pub collapsed: Option<C64>,
    pub est_error: f64,
    pub converged: bool,
    /// Longest key carrying a nonzero coefficient.
    pub max_word_len: usize,
    pub dropped_words: u64,
    #[serde(skip)]
    pub contributions: Vec<Contribution>,
}

fn natural_sum(values: BTreeMap<TKey, C64>, ctx: &Ctx) -> BTreeMap<TKey, C64> {
    let mut grouped: BTreeMap<TKey, Vec<C64>> = BTreeMap::new();
    for (k, v) in values {
        grouped.entry(ctx.trunc.natural(&k, ctx.action)).or_default().push(v);
    }
    grouped.into_iter().map(|(k, v)| (k, ordered_sum(&v))).filter(|(_, v)| *v != C64::new(0.0, 0.0)).collect()
}

fn natural_quads(values: BTreeMap<TKey, Quad>, ctx: &Ctx) -> (BTreeMap<TKey, C64>, f64, bool) {
    let err = values.values().map(|q| q.est_error).sum();
    let converged = values.values().all(|q| q.converged);
    (natural_sum(values.into_iter().map(|(k, q)| (k, q.value)).collect(), ctx), err, converged)
}

fn assemble(
    phi: BTreeMap<TKey, C64>,
    phi_scale: C64,
    integral: BTreeMap<TKey, Quad>,
    integral_scale: C64,
    contributions: Vec<Contribution>,
    ctx: &Ctx,
    opts: &PairingOpts,
) -> Result<PairingResult, IndexError> {
    let phi_part: BTreeMap<TKey, C64> = natural_sum(phi, ctx).into_iter().map(|(k, v)| (k, v * phi_scale)).collect();
    let (integral, err, converged) = natural_quads(integral, ctx);
    let integral_part: BTreeMap<TKey, C64> = integral.into_iter().map(|(k, v)| (k, v * integral_scale)).collect();
    let mut words = phi_part.clone();
    for (k, v) in &integral_part {
        *words.entry(k.clone()).or_insert(C64::new(0.0, 0.0)) -= v;
    }
    words.retain(|_, v| *v != C64::new(0.0, 0.0));
    let collapsed = match &opts.collapse {
        Some(c) => Some(c.apply(&words, ctx.action)?),
        None => None,
    };
    Ok(PairingResult {
        max_word_len: words.keys().map(TKey::len).max().unwrap_or(0),
        words,
        phi_part,
        integral_part,
        collapsed,
        est_error: err * integral_scale.norm(),
        converged,
        dropped_words: ctx.dropped(),
        contributions,
    })
}

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// `Φ♮(ẽ) − ∫♮ ẽ∇ẽ∇ẽ / 2πi` for the idempotent `e = p + k`.
pub fn pair_even(p: &[C64], k: &CrossedForm, action: &GroupAction, opts: &PairingOpts) -> Result<PairingResult, IndexError> {
    if p.len() != k.n() * k.n() && !k.is_zero() {
        return Err(IndexError::Input(format!("constant part has {} entries for a {}×{} element", p.len(), k.n(), k.n())));
    }
    certify_idempotent(p, k, action)?;
    let ctx = Ctx::new(action, opts.trunc);
    let k = if k.is_zero() { CrossedForm::zero((p.len() as f64).sqrt() as usize) } else { k.clone() };
    let e = lift_idempotent(p, &k, opts.trunc.series_terms(opts.terms), &ctx)?;
    let contributions = phi_contributions(&e, &ctx, 0)?;
    let phi = group_by_key(&contributions);
    let ne = e.nabla(&ctx)?;
    let w = e.mul(&ne.mul(&ne, &ctx)?, &ctx)?;
    let integral = integrate_units(&w, &ctx, &opts.quadrature)?;
    assemble(phi, C64::new(1.0, 0.0), integral, 1.0 / two_pi_i(), contributions, &ctx, opts)
}

/// `Φ♮(ũ⁻¹𝐝ũ)/√(2πi) − ∫♮ ũ⁻¹∇ũ∇ũ⁻¹𝐝ũ / (2(2πi)^{3/2})` for `u = 1 + a`
/// with inverse `1 + b`. The square root is the principal branch.
pub fn pair_odd(a: &CrossedForm, b: &CrossedForm, action: &GroupAction, opts: &PairingOpts) -> Result<PairingResult, IndexError> {
    certify_inverse(a, b, action)?;
    let ctx = Ctx::new(action, opts.trunc);
    let n = a.n().max(b.n());
    let (a, b) = (resized(a, n), resized(b, n));
    let (u, ui) = lift_invertible(&a, &b, opts.trunc.series_terms(opts.terms), &ctx)?;
    let du = u.universal_d(&ctx);
    let omega = ui.mul(&du, &ctx)?;
    let contributions = phi_contributions(&omega, &ctx, 0)?;
    let phi = group_by_key(&contributions);
    let w = ui.mul(&u.nabla(&ctx)?, &ctx)?.mul(&ui.nabla(&ctx)?, &ctx)?.mul(&du, &ctx)?;
    let integral = integrate_units(&w, &ctx, &opts.quadrature)?;
    let root = two_pi_i().sqrt();
    assemble(phi, 1.0 / root, integral, 1.0 / (2.0 * root * root * root), contributions, &ctx, opts)
}

fn resized(x: &CrossedForm, n: usize) -> CrossedForm {
    if x.is_zero() {
        CrossedForm::zero(n)
    } else {
        x.clone()
    }
}

/// Degree-zero anomaly: the localized trace applied to `ω̃` key by key and
/// normalized. Walks the terms itself rather than going through
/// [`crate::cocycles::phi_words`], so agreement of the two is a real check.
pub fn anomaly_delta0(omega: &CrossedForm, ctx: &Ctx) -> Result<BTreeMap<TKey, C64>, IndexError> {
    let mut contributions = Vec::new();
    for (k, m) in omega.terms() {
        if k.p + k.q != 0 {
            continue;
        }
        let map = ctx.map(&k.label)?;
        for aut in ctx.action.automorphisms(&k.label)? {
            if let Some(c) = localized_term(m, omega.n(), &aut, &map, 0, ctx.action)? {
                contributions.push(Contribution { tensor: k.tensor.clone(), ..c });
            }
        }
    }
    Ok(natural_sum(group_by_key(&contributions), ctx))
}

/// `Φ♮` through the trace entry point, for comparison with [`anomaly_delta0`].
pub fn phi_natural(x: &CrossedForm, ctx: &Ctx) -> Result<BTreeMap<TKey, C64>, IndexError> {
    Ok(natural_sum(crate::cocycles::phi_words(x, ctx)?, ctx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delta1 {
    /// Pairwise formula over `(g, h)` with `hg` an identity germ.
    pub explicit: BTreeMap<TKey, C64>,
    /// `−(1/2πi) ∫ ♮∇Ã ω̃`.
    pub intrinsic: BTreeMap<TKey, C64>,
    pub defect: f64,
    pub est_error: f64,
}

/// Degree-one anomaly by both formulas; fails if they disagree beyond `2·tol`.
///
/// `a` holds `(0,1)`-forms `A_z̄(g) dz̄ U_g`, `omega` degree-zero forms.
pub fn anomaly_delta1(a: &CrossedForm, omega: &CrossedForm, ctx: &Ctx, spec: &QuadratureSpec) -> Result<Delta1, IndexError> {
    let d = anomaly_delta1_paths(a, omega, ctx, spec)?;
    let bound = 2.0 * spec.tol;
    if d.defect > bound {
        return Err(IndexError::Inconsistent { defect: d.defect, bound });
    }
    Ok(d)
}

/// Both Δ¹ formulas without the consistency check.
pub fn anomaly_delta1_paths(a: &CrossedForm, omega: &CrossedForm, ctx: &Ctx, spec: &QuadratureSpec) -> Result<Delta1, IndexError> {
    if a.terms().keys().any(|k| (k.p, k.q) != (0, 1)) || omega.terms().keys().any(|k| k.p + k.q != 0) {
        return Err(IndexError::Input("Δ¹ expects (0,1)-forms and degree-zero forms".into()));
    }
    let n = a.n();
    let mut explicit: BTreeMap<TKey, Quad> = BTreeMap::new();
    for (ka, ma) in a.terms() {
        let g = ctx.map(&ka.label)?;
        let bounds = match ma.iter().fold(Support::Empty, |s, f| s.union(&f.support())) {
            Support::Empty => continue,
            Support::Unbounded => return Err(CocycleError::Unbounded.into()),
            Support::Bounded(b) => b,
        };
        let da: Vec<ScalarField> = ma.iter().map(ScalarField::d_z).collect();
        for (kw, mw) in omega.terms() {
            let hg = ctx.action.mul(&kw.label, &ka.label);
            if !ctx.action.is_identity_germ(&hg)? {
                continue;
            }
            let Some(key) = ctx.key_mul(&ka.tensor, &kw.tensor) else { continue };
            let integrand = |z: C64| -> Result<C64, ExprError> {
                let gp = g.derivative(z, 1)?;
                let gpp = g.derivative(z, 2)?;
                let twist = gpp / gp * 0.5;
                let gz = g.eval(z)?;
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    for l in 0..n {
                        let left = da[i * n + l].eval(z)? - twist * ma[i * n + l].eval(z)?;
                        if left == C64::new(0.0, 0.0) {
                            continue;
                        }
                        acc += left * mw[l * n + i].eval(gz)?;
                    }
                }
                Ok(acc)
            };
            let q = integrate_rect(bounds.lo, bounds.hi, spec, &integrand)?.scale(C64::new(1.0 / PI, 0.0));
            let slot = explicit.entry(key).or_insert_with(Quad::zero);
            *slot = slot.combine(q);
        }
    }
    let (explicit, err_e, _) = natural_quads(explicit, ctx);
    let w = a.nabla(ctx)?.mul(omega, ctx)?;
    let (intrinsic, err_i, _) = natural_quads(integrate_units(&w, ctx, spec)?, ctx);
    let intrinsic: BTreeMap<TKey, C64> = intrinsic.into_iter().map(|(k, v)| (k, -v / two_pi_i())).collect();
    let keys: std::collections::BTreeSet<&TKey> = explicit.keys().chain(intrinsic.keys()).collect();
    let zero = C64::new(0.0, 0.0);
    let defect = keys
        .into_iter()
        .map(|k| (explicit.get(k).unwrap_or(&zero) - intrinsic.get(k).unwrap_or(&zero)).norm())
        .fold(0.0, f64::max);
    Ok(Delta1 { explicit, intrinsic, defect, est_error: err_e / PI + err_i / (2.0 * PI) })
}
