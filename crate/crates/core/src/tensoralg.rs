//! Truncated tensor words over the group ring, canonical liftings and
//! collapse functionals.
//!
//! Tensor keys are words `U_{g1} ⊗ … ⊗ U_{gk}` of degree 0 or universal
//! one-forms `x 𝐝U_b y` of degree 1. Three truncation modes exist:
//!
//! * `Words(L)`: words longer than `L` are dropped. Longer words form an ideal,
//!   so identities computed here hold exactly modulo that ideal.
//! * `Full`: nothing is dropped.
//! * `Collapsed`: every word is replaced by its image under the multiplication
//!   map `μ(g1, …, gk) = gk ⋯ g1`. This is the group ring itself, where the
//!   lifted elements are plain homomorphic images and need no series.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{identity_matrix, AlgebraError, CrossedForm, Ctx, FormKey};
use crate::expr::Bounds;
use crate::groupoid::{GroupAction, GroupKind, Label};

/// A tensor word or a universal one-form `x 𝐝b y`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TKey {
    Word(Vec<Label>),
    Form { x: Vec<Label>, b: Label, y: Vec<Label> },
}

impl TKey {
    pub fn empty() -> TKey {
        TKey::Word(Vec::new())
    }

    pub fn degree(&self) -> u8 {
        match self {
            TKey::Word(_) => 0,
            TKey::Form { .. } => 1,
        }
    }

    /// Number of letters, counting `b`.
    pub fn len(&self) -> usize {
        match self {
            TKey::Word(w) => w.len(),
            TKey::Form { x, y, .. } => x.len() + 1 + y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub enum KeyProduct {
    Key(TKey),
    /// Exceeds the truncation length.
    Dropped,
    /// Degree above one; not tracked.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trunc {
    Words(usize),
    Full,
    Collapsed,
}

/// `μ(g1, …, gk) = gk ⋯ g1`.
pub fn mu(action: &GroupAction, labels: &[Label]) -> Label {
    labels.iter().fold(action.unit(), |acc, g| action.mul(g, &acc))
}

fn collapsed(action: &GroupAction, l: Label) -> Vec<Label> {
    if action.is_unit(&l) {
        Vec::new()
    } else {
        vec![l]
    }
}

fn concat(a: &[Label], b: &[Label]) -> Vec<Label> {
    a.iter().chain(b).cloned().collect()
}

impl Trunc {
    /// Tensor product of two keys.
    pub fn mul(&self, a: &TKey, b: &TKey, action: &GroupAction) -> KeyProduct {
        let key = match (a, b) {
            (TKey::Form { .. }, TKey::Form { .. }) => return KeyProduct::Zero,
            (TKey::Word(u), TKey::Word(v)) => match self {
                Trunc::Collapsed => TKey::Word(collapsed(action, mu(action, &concat(u, v)))),
                _ => TKey::Word(concat(u, v)),
            },
            (TKey::Word(u), TKey::Form { x, b, y }) => match self {
                Trunc::Collapsed => TKey::Form { x: collapsed(action, mu(action, &concat(u, x))), b: b.clone(), y: y.clone() },
                _ => TKey::Form { x: concat(u, x), b: b.clone(), y: y.clone() },
            },
            (TKey::Form { x, b, y }, TKey::Word(v)) => match self {
                Trunc::Collapsed => TKey::Form { x: x.clone(), b: b.clone(), y: collapsed(action, mu(action, &concat(y, v))) },
                _ => TKey::Form { x: x.clone(), b: b.clone(), y: concat(y, v) },
            },
        };
        match self {
            Trunc::Words(l) if key.len() > *l => KeyProduct::Dropped,
            _ => KeyProduct::Key(key),
        }
    }

    /// Key of the single letter `U_g`, or `None` if it is truncated away.
    pub fn letter(&self, g: &Label, action: &GroupAction) -> Option<TKey> {
        match self {
            Trunc::Words(0) => None,
            Trunc::Collapsed => Some(TKey::Word(collapsed(action, g.clone()))),
            _ => Some(TKey::Word(vec![g.clone()])),
        }
    }

    /// Leibniz rule on words; one-forms map to zero.
    pub fn universal_d(&self, key: &TKey) -> Vec<TKey> {
        match key {
            TKey::Form { .. } => Vec::new(),
            TKey::Word(w) => (0..w.len())
                .map(|i| TKey::Form { x: w[..i].to_vec(), b: w[i].clone(), y: w[i + 1..].to_vec() })
                .collect(),
        }
    }

    /// Representative modulo commutators: words rotate to their least
    /// rotation, one-forms `x 𝐝b y` become `(y x) 𝐝b`.
    pub fn natural(&self, key: &TKey, action: &GroupAction) -> TKey {
        match key {
            TKey::Word(w) => {
                if w.len() < 2 {
                    return key.clone();
                }
                let best = (0..w.len()).map(|r| concat(&w[r..], &w[..r])).min().unwrap();
                TKey::Word(best)
            }
            TKey::Form { x, b, y } => {
                let yx = concat(y, x);
                let x = match self {
                    Trunc::Collapsed => collapsed(action, mu(action, &yx)),
                    _ => yx,
                };
                TKey::Form { x, b: b.clone(), y: Vec::new() }
            }
        }
    }

    /// Series length implied by the truncation.
    pub fn series_terms(&self, fallback: usize) -> usize {
        match self {
            Trunc::Words(l) => *l,
            _ => fallback,
        }
    }
}

/// Numeric model: matrices of constants over labels and tensor keys.
/// With small integer or dyadic data all arithmetic is exact, so
/// truncation identities can be checked with `==`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    n: usize,
    terms: BTreeMap<(Label, TKey), Vec<C64>>,
}

impl TruncatedSeries {
    pub fn zero(n: usize) -> Self {
        TruncatedSeries { n, terms: BTreeMap::new() }
    }

    /// `M U_g` with empty tensor key; `m` is row-major.
    pub fn at(label: Label, m: Vec<C64>) -> Self {
        let n = (m.len() as f64).sqrt() as usize;
        let mut out = TruncatedSeries::zero(n);
        out.insert((label, TKey::empty()), m);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(Label, TKey), Vec<C64>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, key: (Label, TKey), m: Vec<C64>) {
        let zero = C64::new(0.0, 0.0);
        let entry = self.terms.entry(key.clone()).or_insert_with(|| vec![zero; m.len()]);
        for (a, b) in entry.iter_mut().zip(m) {
            *a += b;
        }
        if entry.iter().all(|c| *c == zero) {
            self.terms.remove(&key);
        }
    }

    /// Longest tensor key present.
    pub fn max_len(&self) -> usize {
        self.terms.keys().map(|(_, t)| t.len()).max().unwrap_or(0)
    }

    /// Multiplication-map collapse: keep the `A`-label, sum over words.
    pub fn augment(&self) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(self.n);
        for ((l, t), m) in &self.terms {
            if t.degree() == 0 {
                out.insert((l.clone(), TKey::empty()), m.clone());
            }
        }
        out
    }

    /// Trace of the unit-label coefficient after `μ` on the tensor part.
    pub fn tau0(&self, action: &GroupAction) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ((l, t), m) in &self.terms {
            if let TKey::Word(w) = t {
                if action.is_unit(l) && action.is_unit(&mu(action, w)) {
                    acc += (0..self.n).map(|i| m[i * self.n + i]).sum::<C64>();
                }
            }
        }
        acc
    }
}

/// Operations the lifting constructions need.
pub trait LiftAlgebra: Clone {
    fn size(&self) -> usize;
    /// Constant matrix at the unit label with empty tensor key.
    fn constant(m: &[C64], ctx: &Ctx) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, c: C64) -> Self;
    fn product(&self, o: &Self, ctx: &Ctx) -> Result<Self, AlgebraError>;
    /// `ρ̃(F U_g) = F U_g ⊗ U_g` on terms with empty tensor key.
    fn lift1(&self, ctx: &Ctx) -> Self;
}

impl LiftAlgebra for CrossedForm {
    fn size(&self) -> usize {
        self.n()
    }

    fn constant(m: &[C64], ctx: &Ctx) -> Self {
        CrossedForm::constant_matrix(ctx.action, m)
    }

    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }

    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }

    fn times(&self, c: C64) -> Self {
        self.scale(c)
    }

    fn product(&self, o: &Self, ctx: &Ctx) -> Result<Self, AlgebraError> {
        self.mul(o, ctx)
    }

    fn lift1(&self, ctx: &Ctx) -> Self {
        let mut out = CrossedForm::zero(self.n());
        for (k, m) in self.terms() {
            if !k.tensor.is_empty() {
                continue;
            }
            if let Some(t) = ctx.trunc.letter(&k.label, ctx.action) {
                out = out.add(&CrossedForm::term(self.n(), FormKey { tensor: t, ..k.clone() }, m.clone()));
            }
        }
        out
    }
}

impl LiftAlgebra for TruncatedSeries {
    fn size(&self) -> usize {
        self.n
    }

    fn constant(m: &[C64], ctx: &Ctx) -> Self {
        TruncatedSeries::at(ctx.action.unit(), m.to_vec())
    }

    fn plus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.n = self.n.max(o.n);
        for (k, m) in &o.terms {
            out.insert(k.clone(), m.clone());
        }
        out
    }

    fn minus(&self, o: &Self) -> Self {
        self.plus(&o.times(C64::new(-1.0, 0.0)))
    }

    fn times(&self, c: C64) -> Self {
        let mut out = TruncatedSeries::zero(self.n);
        for (k, m) in &self.terms {
            out.insert(k.clone(), m.iter().map(|x| x * c).collect());
        }
        out
    }

    fn product(&self, o: &Self, ctx: &Ctx) -> Result<Self, AlgebraError> {
        if self.n != o.n && !self.is_zero() && !o.is_zero() {
            return Err(AlgebraError::Size(self.n, o.n));
        }
        let n = self.n.max(o.n);
        let mut out = TruncatedSeries::zero(n);
        for ((g1, s), m1) in &self.terms {
            for ((g2, t), m2) in &o.terms {
                let Some(key) = ctx.key_mul(s, t) else { continue };
                let mut prod = vec![C64::new(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            prod[i * n + j] += m1[i * n + l] * m2[l * n + j];
                        }
                    }
                }
                out.insert((ctx.action.mul(g2, g1), key), prod);
            }
        }
        Ok(out)
    }

    fn lift1(&self, ctx: &Ctx) -> Self {
        let mut out = TruncatedSeries::zero(self.n);
        for ((g, t), m) in &self.terms {
            if t.is_empty() {
                if let Some(k) = ctx.trunc.letter(g, ctx.action) {
                    out.insert((g.clone(), k), m.clone());
                }
            }
        }
        out
    }
}

fn one<T: LiftAlgebra>(n: usize, ctx: &Ctx) -> T {
    T::constant(&identity_matrix(n), ctx)
}

/// Lifting of `u = 1 + a` with inverse `1 + b`: returns `(ũ, ũ⁻¹)`.
///
/// With `Â = ρ̃(a)`, `B̂ = ρ̃(b)` and the curvature `K = ρ̃(ab) − ÂB̂`, the inverse
/// is `(1 + B̂) Σ_{n ≤ terms} Kⁿ`, so `ũ ũ⁻¹ = 1 − K^{terms+1}`. In collapsed
/// mode `ρ̃` is multiplicative and `1 + ρ̃(b)` is already the inverse.
pub fn lift_invertible<T: LiftAlgebra>(a: &T, b: &T, terms: usize, ctx: &Ctx) -> Result<(T, T), AlgebraError> {
    let n = a.size().max(b.size());
    let id: T = one(n, ctx);
    let ah = a.lift1(ctx);
    let bh = b.lift1(ctx);
    let u = id.plus(&ah);
    let base = id.plus(&bh);
    if ctx.trunc == Trunc::Collapsed {
        return Ok((u, base));
    }
    let flat = ctx.with_trunc(Trunc::Full);
    let ab = a.product(b, &flat)?;
    let k = ab.lift1(ctx).minus(&ah.product(&bh, ctx)?);
    let mut sum = id.clone();
    let mut power = id;
    for _ in 0..terms {
        power = power.product(&k, ctx)?;
        sum = sum.plus(&power);
    }
    Ok((u, base.product(&sum, ctx)?))
}

/// `binom(−1/2, m) · 4^m = (−1)^m C(2m, m)`.
fn half_binomial(m: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c = c * (2 * (2 * i + 1)) as f64 / (i + 1) as f64;
    }
    if m % 2 == 1 {
        -c
    } else {
        c
    }
}

/// Lifting of the idempotent `e = p + k`, `p` a constant idempotent matrix at
/// the unit label and `k` the rest: `ẽ = ½ + (c − ½)(1 + 4q)^{−1/2}` with
/// `c = p + ρ̃(k)` and `q = c² − c`, the series cut after `terms` powers.
pub fn lift_idempotent<T: LiftAlgebra>(p: &[C64], k: &T, terms: usize, ctx: &Ctx) -> Result<T, AlgebraError> {
    let n = k.size();
    let c = T::constant(p, ctx).plus(&k.lift1(ctx));
    if ctx.trunc == Trunc::Collapsed {
        return Ok(c);
    }
    let id: T = one(n, ctx);
    let half = C64::new(0.5, 0.0);
    let q = c.product(&c, ctx)?.minus(&c);
    let mut sum = id.clone();
    let mut power = id.clone();
    for m in 1..=terms {
        power = power.product(&q, ctx)?;
        sum = sum.plus(&power.times(C64::new(half_binomial(m), 0.0)));
    }
    Ok(id.times(half).plus(&c.minus(&id.times(half)).product(&sum, ctx)?))
}

/// `ρ̃_*(x1 ⊗ … ⊗ xk) = ρ̃(x1) ⋯ ρ̃(xk)`.
pub fn rho_star(factors: &[CrossedForm], ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
    let n = factors.first().map_or(1, |f| f.n());
    let mut acc: CrossedForm = one(n, ctx);
    for f in factors {
        acc = acc.mul(&f.lift1(ctx), ctx)?;
    }
    Ok(acc)
}

/// Largest entry of every component on a grid of sample points.
pub fn sampled_max(x: &CrossedForm, bounds: &Bounds, per_side: usize) -> Result<f64, AlgebraError> {
    let mut worst: f64 = 0.0;
    for key in x.terms().keys() {
        for i in 0..per_side {
            for j in 0..per_side {
                let t = (i as f64 + 0.5) / per_side as f64;
                let s = (j as f64 + 0.5) / per_side as f64;
                let z = C64::new(
                    bounds.lo.re + t * (bounds.hi.re - bounds.lo.re),
                    bounds.lo.im + s * (bounds.hi.im - bounds.lo.im),
                );
                for v in x.eval(key, z)? {
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    Ok(worst)
}

const CERTIFICATE_TOL: f64 = 1e-10;
const CERTIFICATE_GRID: usize = 12;

fn sample_bounds(xs: &[&CrossedForm]) -> Bounds {
    xs.iter()
        .filter_map(|x| x.bounds())
        .reduce(|a, b| a.union(&b))
        .unwrap_or_else(|| Bounds::around(C64::new(0.0, 0.0), 1.0))
}

/// Checks `a + b + ab = 0`, i.e. `(1 + a)(1 + b) = 1`: symbolically when the
/// sum vanishes identically, otherwise at sample points.
pub fn certify_inverse(a: &CrossedForm, b: &CrossedForm, action: &GroupAction) -> Result<(), AlgebraError> {
    let ctx = Ctx::new(action, Trunc::Full);
    for r in [a.add(b).add(&a.mul(b, &ctx)?), a.add(b).add(&b.mul(a, &ctx)?)] {
        if r.is_zero() {
            continue;
        }
        let m = sampled_max(&r, &sample_bounds(&[a, b]), CERTIFICATE_GRID)?;
        if m > CERTIFICATE_TOL {
            return Err(AlgebraError::Certificate(format!("inverse certificate fails: residual {m:e}")));
        }
    }
    Ok(())
}

/// Checks `e² = e` for `e = p + k` at sample points.
pub fn certify_idempotent(p: &[C64], k: &CrossedForm, action: &GroupAction) -> Result<(), AlgebraError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let e = CrossedForm::constant_matrix(action, p).add(k);
    let r = e.mul(&e, &ctx)?.sub(&e);
    let (rp, rk) = r.split_constant(action);
    if rp.iter().any(|c| c.norm() > CERTIFICATE_TOL) {
        return Err(AlgebraError::Certificate("constant part is not idempotent".into()));
    }
    if rk.is_zero() {
        return Ok(());
    }
    let m = sampled_max(&rk, &sample_bounds(&[k]), CERTIFICATE_GRID)?;
    if m > CERTIFICATE_TOL {
        return Err(AlgebraError::Certificate(format!("idempotent check fails: residual {m:e}")));
    }
    Ok(())
}

/// Functionals turning tensor-valued results into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Collapse {
    /// Unit coefficient after the multiplication map.
    Tau0,
    /// `ψ(♮ x 𝐝U_b) = c(b)` when `μ(x)·b = 1`, for an additive character `c`
    /// given by its value on each generator.
    GroupCocycle1 { weights: Vec<C64> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollapseError {
    #[error("{0}")]
    Unsupported(String),
}

impl Collapse {
    fn character(&self, action: &GroupAction, b: &Label) -> Result<C64, CollapseError> {
        let Collapse::GroupCocycle1 { weights } = self else { unreachable!() };
        if weights.iter().all(|w| *w == C64::new(0.0, 0.0)) {
            return Ok(C64::new(0.0, 0.0));
        }
        if action.kind() != GroupKind::FreeGenerators {
            return Err(CollapseError::Unsupported("nonzero additive characters need a free group".into()));
        }
        let sums = action.exponent_sums(b).unwrap_or_default();
        Ok(sums.iter().zip(weights).map(|(s, w)| w * *s as f64).sum())
    }

    /// Evaluate on values indexed by tensor keys.
    pub fn apply(&self, values: &BTreeMap<TKey, C64>, action: &GroupAction) -> Result<C64, CollapseError> {
        let mut acc = C64::new(0.0, 0.0);
        for (k, v) in values {
            match (self, k) {
                (Collapse::Tau0, TKey::Word(w)) => {
                    if action.is_unit(&mu(action, w)) {
                        acc += v;
                    }
                }
                (Collapse::GroupCocycle1 { .. }, TKey::Form { x, b, y }) => {
                    let m = mu(action, &concat(y, x));
                    if action.is_unit(&action.mul(b, &m)) {
                        acc += v * self.character(action, b)?;
                    }
                }
                _ => {}
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BumpCutoff, ScalarField};
    use crate::groupoid::{ConformalMap, Generator};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn z2() -> GroupAction {
        GroupAction::cyclic(2, Generator { name: "s".into(), map: ConformalMap::affine(c(-1.0), c(0.0)) }).unwrap()
    }

    #[test]
    fn key_products_and_truncation() {
        let act = GroupAction::free(vec![Generator { name: "g".into(), map: ConformalMap::affine(c(2.0), c(0.0)) }]);
        let g = act.generator("g").unwrap();
        let gi = act.inv(&g);
        let w = TKey::Word(vec![g.clone(), gi.clone()]);
        assert!(matches!(Trunc::Words(3).mul(&w, &w, &act), KeyProduct::Dropped));
        assert!(matches!(Trunc::Words(4).mul(&w, &w, &act), KeyProduct::Key(k) if k.len() == 4));
        match Trunc::Collapsed.mul(&TKey::Word(vec![g.clone()]), &TKey::Word(vec![gi]), &act) {
            KeyProduct::Key(k) => assert_eq!(k, TKey::empty()),
            _ => panic!(),
        }
        let f = TKey::Form { x: vec![g.clone()], b: g.clone(), y: vec![act.inv(&g)] };
        assert_eq!(Trunc::Full.natural(&f, &act), TKey::Form { x: vec![act.inv(&g), g.clone()], b: g, y: vec![] });
    }

    #[test]
    fn universal_d_follows_leibniz() {
        let act = z2();
        let s = act.generator("s").unwrap();
        let u = act.unit();
        assert!(Trunc::Full.universal_d(&TKey::empty()).is_empty());
        let d = Trunc::Full.universal_d(&TKey::Word(vec![s.clone(), u.clone()]));
        assert_eq!(
            d,
            vec![
                TKey::Form { x: vec![], b: s.clone(), y: vec![u.clone()] },
                TKey::Form { x: vec![s], b: u, y: vec![] }
            ]
        );
    }

    #[test]
    fn invertible_lift_is_exact_in_truncation() {
        let act = z2();
        let s = act.generator("s").unwrap();
        let one = act.unit();
        // u = U_s: a = U_s − 1, b = U_s⁻¹ − 1.
        let a = TruncatedSeries::at(s.clone(), vec![c(1.0)]).plus(&TruncatedSeries::at(one.clone(), vec![c(-1.0)]));
        let b = TruncatedSeries::at(act.inv(&s), vec![c(1.0)]).plus(&TruncatedSeries::at(one, vec![c(-1.0)]));
        for l in 2..=4 {
            let ctx = Ctx::new(&act, Trunc::Words(l));
            let (u, ui) = lift_invertible(&a, &b, l, &ctx).unwrap();
            let id = TruncatedSeries::at(act.unit(), vec![c(1.0)]);
            assert_eq!(u.product(&ui, &ctx).unwrap(), id);
            assert_eq!(ui.product(&u, &ctx).unwrap(), id);
        }
    }

    #[test]
    fn idempotent_lift_is_exact_in_truncation() {
        let act = z2();
        let s = act.generator("s").unwrap();
        let z = c(0.0);
        // e = [[1, U_s], [0, 0]] with constant part diag(1, 0).
        let p = [c(1.0), z, z, z];
        let k = TruncatedSeries::at(s.clone(), vec![z, c(1.0), z, z])
            .plus(&TruncatedSeries::at(act.unit(), vec![z, z, z, z]));
        let e0 = TruncatedSeries::at(act.unit(), p.to_vec()).plus(&k);
        for l in 2..=4 {
            let ctx = Ctx::new(&act, Trunc::Words(l));
            let e = lift_idempotent(&p, &k, l, &ctx).unwrap();
            assert_eq!(e.product(&e, &ctx).unwrap(), e);
            assert!(e.max_len() >= 1);
            let full = Ctx::new(&act, Trunc::Full);
            assert_eq!(lift_idempotent(&p, &k, l, &full).unwrap().augment(), e0);
        }
        // Without a constant part the truncated lift is the zero idempotent.
        let half = TruncatedSeries::at(act.unit(), vec![c(0.5)]).plus(&TruncatedSeries::at(s, vec![c(0.5)]));
        let ctx = Ctx::new(&act, Trunc::Words(3));
        assert!(lift_idempotent(&[z], &half, 3, &ctx).unwrap().is_zero());
    }

    #[test]
    fn tau0_is_a_trace() {
        let act = z2();
        let s = act.generator("s").unwrap();
        let ctx = Ctx::new(&act, Trunc::Words(4));
        let x = TruncatedSeries::at(s.clone(), vec![c(1.0), c(2.0), c(0.0), c(1.0)]).lift1(&ctx);
        let y = TruncatedSeries::at(s, vec![c(3.0), c(0.0), c(1.0), c(-1.0)]).lift1(&ctx).plus(&TruncatedSeries::at(
            act.unit(),
            vec![c(1.0), c(1.0), c(1.0), c(0.0)],
        ));
        let xy = x.product(&y, &ctx).unwrap();
        let yx = y.product(&x, &ctx).unwrap();
        assert_eq!(xy.tau0(&act), yx.tau0(&act));
    }

    #[test]
    fn rho_star_matches_displayed_formula() {
        let act = GroupAction::free(vec![
            Generator { name: "g".into(), map: ConformalMap::affine(c(2.0), C64::new(0.1, 0.0)) },
            Generator { name: "h".into(), map: ConformalMap::mobius(c(1.0), c(0.0), c(1.0), c(1.0)) },
        ]);
        let ctx = Ctx::new(&act, Trunc::Full);
        let (g, h) = (act.generator("g").unwrap(), act.generator("h").unwrap());
        let f1 = ScalarField::z().add(&ScalarField::real(1.0));
        let f2 = ScalarField::zbar().mul(&ScalarField::bump(BumpCutoff::new(C64::new(0.0, 0.0), 1.0, 2.0).unwrap()));
        let x1 = CrossedForm::scalar(g.clone(), f1.clone());
        let x2 = CrossedForm::scalar(h.clone(), f2.clone());
        let r = rho_star(&[x1, x2], &ctx).unwrap();
        let key = FormKey::new(act.mul(&h, &g), TKey::Word(vec![g.clone(), h]), 0, 0);
        assert_eq!(r.len(), 1);
        let gm = act.map_of(&g).unwrap();
        for k in 0..10 {
            let z = C64::new(0.1 * k as f64 - 0.5, 0.07 * k as f64);
            let want = f1.eval(z).unwrap() * f2.eval(gm.eval(z).unwrap()).unwrap();
            assert!((r.eval(&key, z).unwrap()[0] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn collapse_functionals() {
        let act = GroupAction::free(vec![Generator { name: "g".into(), map: ConformalMap::affine(c(2.0), c(0.0)) }]);
        let g = act.generator("g").unwrap();
        let gi = act.inv(&g);
        let mut vals = BTreeMap::new();
        vals.insert(TKey::empty(), c(3.0));
        vals.insert(TKey::Word(vec![g.clone(), gi.clone()]), c(2.0));
        vals.insert(TKey::Word(vec![g.clone()]), c(7.0));
        vals.insert(TKey::Form { x: vec![gi.clone()], b: g.clone(), y: vec![] }, c(5.0));
        assert_eq!(Collapse::Tau0.apply(&vals, &act).unwrap(), c(5.0));
        let psi = Collapse::GroupCocycle1 { weights: vec![c(0.0)] };
        assert_eq!(psi.apply(&vals, &act).unwrap(), c(0.0));
        let psi = Collapse::GroupCocycle1 { weights: vec![c(2.0)] };
        assert_eq!(psi.apply(&vals, &act).unwrap(), c(10.0));
    }
}
