//! The graded crossed product of compactly supported forms by a group of
//! conformal maps, with matrix coefficients and tensor-word coefficients.
//!
//! An element is a finite sum of terms `F · U_g ⊗ s` where `F` is an `n×n`
//! matrix of scalar fields multiplying one of the basis forms
//! `1, dz, dz̄, dz∧dz̄`, `g` is a group label and `s` a tensor key.
//!
//! Product: `(α U_g ⊗ s)(β U_h ⊗ t) = (−1)^{|s||β|} α ∧ g*(β) U_{h·g} ⊗ st`,
//! where `g*` pulls back forms, so `dz` picks up `g'` and `dz̄` picks up
//! `conj g'`. Products with more than one `dz` or one `dz̄` vanish.
//!
//! The differentials `∂, ∂̄, δ` and the modular derivative `D` act on the form
//! part only; `𝐝` acts on the tensor part with the Koszul sign `(−1)^{|α|}`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::expr::{Bounds, ExprError, ScalarField, Support};
use crate::groupoid::{ConformalMap, GroupAction, GroupError, Label};
use crate::tensoralg::{KeyProduct, TKey, Trunc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("matrix sizes differ: {0} vs {1}")]
    Size(usize, usize),
    #[error("{0}")]
    Certificate(String),
}

/// Index of one term: label, tensor key and form bidegree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormKey {
    pub label: Label,
    pub tensor: TKey,
    pub p: u8,
    pub q: u8,
}

impl FormKey {
    pub fn new(label: Label, tensor: TKey, p: u8, q: u8) -> Self {
        FormKey { label, tensor, p, q }
    }

    pub fn form_degree(&self) -> u8 {
        self.p + self.q
    }

    /// Form degree plus tensor degree.
    pub fn total_degree(&self) -> u8 {
        self.form_degree() + self.tensor.degree()
    }
}

/// Shared evaluation context: the action, the tensor truncation and a
/// cache of label maps. Counts words dropped by truncation.
pub struct Ctx<'a> {
    pub action: &'a GroupAction,
    pub trunc: Trunc,
    dropped: AtomicU64,
    maps: Mutex<HashMap<Label, Arc<ConformalMap>>>,
}

impl<'a> Ctx<'a> {
    pub fn new(action: &'a GroupAction, trunc: Trunc) -> Self {
        Ctx { action, trunc, dropped: AtomicU64::new(0), maps: Mutex::new(HashMap::new()) }
    }

    pub fn with_trunc(&self, trunc: Trunc) -> Ctx<'a> {
        Ctx::new(self.action, trunc)
    }

    pub fn map(&self, label: &Label) -> Result<Arc<ConformalMap>, GroupError> {
        if let Some(m) = self.maps.lock().unwrap().get(label) {
            return Ok(m.clone());
        }
        let m = self.action.map_of(label)?;
        self.maps.lock().unwrap().insert(label.clone(), m.clone());
        Ok(m)
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    pub(crate) fn count_dropped(&self) {
        self.dropped.fetch_add(1, Ordering::Relaxed);
    }

    /// Tensor product of keys under the truncation, counting drops.
    pub fn key_mul(&self, a: &TKey, b: &TKey) -> Option<TKey> {
        match self.trunc.mul(a, b, self.action) {
            KeyProduct::Key(k) => Some(k),
            KeyProduct::Dropped => {
                self.count_dropped();
                None
            }
            KeyProduct::Zero => None,
        }
    }
}

fn sign(odd: bool) -> C64 {
    C64::new(if odd { -1.0 } else { 1.0 }, 0.0)
}

/// Matrix of form coefficients over labels and tensor keys.
#[derive(Debug, Clone)]
pub struct CrossedForm {
    n: usize,
    terms: BTreeMap<FormKey, Vec<ScalarField>>,
}

impl CrossedForm {
    pub fn zero(n: usize) -> Self {
        CrossedForm { n, terms: BTreeMap::new() }
    }

    /// One term; `matrix` is row-major `n×n`.
    pub fn term(n: usize, key: FormKey, matrix: Vec<ScalarField>) -> Self {
        assert_eq!(matrix.len(), n * n, "matrix must be n×n");
        let mut out = CrossedForm::zero(n);
        out.insert(key, matrix);
        out
    }

    /// Degree-zero term `F U_g` with empty tensor key.
    pub fn at(label: Label, matrix: Vec<ScalarField>) -> Self {
        let n = (matrix.len() as f64).sqrt() as usize;
        CrossedForm::term(n, FormKey::new(label, TKey::empty(), 0, 0), matrix)
    }

    /// Scalar `f U_g`.
    pub fn scalar(label: Label, f: ScalarField) -> Self {
        CrossedForm::at(label, vec![f])
    }

    /// The identity matrix of constants at the unit label.
    pub fn one(n: usize, action: &GroupAction) -> Self {
        CrossedForm::constant_matrix(action, &identity_matrix(n))
    }

    /// A constant matrix at the unit label.
    pub fn constant_matrix(action: &GroupAction, m: &[C64]) -> Self {
        let n = (m.len() as f64).sqrt() as usize;
        let fields = m.iter().map(|c| ScalarField::constant(*c)).collect();
        CrossedForm::term(n, FormKey::new(action.unit(), TKey::empty(), 0, 0), fields)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<FormKey, Vec<ScalarField>> {
        &self.terms
    }

    pub fn get(&self, key: &FormKey) -> Option<&Vec<ScalarField>> {
        self.terms.get(key)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut ls: Vec<Label> = self.terms.keys().map(|k| k.label.clone()).collect();
        ls.sort();
        ls.dedup();
        ls
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, key: FormKey, matrix: Vec<ScalarField>) {
        if matrix.iter().all(|f| f.is_zero()) {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(m) => {
                for (a, b) in m.iter_mut().zip(matrix) {
                    *a = a.add(&b);
                }
                if m.iter().all(|f| f.is_zero()) {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, matrix);
            }
        }
    }

    fn check(&self, other: &CrossedForm) -> Result<(), AlgebraError> {
        if self.n != other.n && !self.is_zero() && !other.is_zero() {
            return Err(AlgebraError::Size(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &CrossedForm) -> CrossedForm {
        self.check(other).expect("matrix sizes must agree");
        let mut out = if self.is_zero() { CrossedForm::zero(other.n) } else { self.clone() };
        for (k, m) in &other.terms {
            out.insert(k.clone(), m.clone());
        }
        out
    }

    pub fn sub(&self, other: &CrossedForm) -> CrossedForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> CrossedForm {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> CrossedForm {
        if c == C64::new(0.0, 0.0) {
            return CrossedForm::zero(self.n);
        }
        self.map_terms(|_, f| f.scale(c))
    }

    fn map_terms(&self, f: impl Fn(&FormKey, &ScalarField) -> ScalarField) -> CrossedForm {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            out.insert(k.clone(), m.iter().map(|x| f(k, x)).collect());
        }
        out
    }

    /// Terms satisfying a predicate on their key.
    pub fn filter(&self, pred: impl Fn(&FormKey) -> bool) -> CrossedForm {
        CrossedForm { n: self.n, terms: self.terms.iter().filter(|(k, _)| pred(k)).map(|(k, m)| (k.clone(), m.clone())).collect() }
    }

    /// Relabel tensor keys; terms mapped to `None` are dropped.
    pub fn map_tensor(&self, f: impl Fn(&TKey) -> Option<(TKey, C64)>) -> CrossedForm {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            if let Some((t, s)) = f(&k.tensor) {
                let key = FormKey { tensor: t, ..k.clone() };
                out.insert(key, m.iter().map(|x| x.scale(s)).collect());
            }
        }
        out
    }

    /// The product in the crossed product.
    pub fn mul(&self, other: &CrossedForm, ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
        self.check(other)?;
        let n = self.n.max(other.n);
        let mut out = CrossedForm::zero(n);
        for (k1, m1) in &self.terms {
            let g1 = ctx.map(&k1.label)?;
            // Pulled-back right factors are shared across left terms with the same label.
            let mut pulled: BTreeMap<&FormKey, Vec<ScalarField>> = BTreeMap::new();
            for (k2, m2) in &other.terms {
                if k1.p + k2.p > 1 || k1.q + k2.q > 1 {
                    continue;
                }
                let Some(tensor) = ctx.key_mul(&k1.tensor, &k2.tensor) else { continue };
                let odd = (k1.q * k2.p + k1.tensor.degree() * k2.form_degree()) % 2 == 1;
                let twist = match (k2.p, k2.q) {
                    (0, 0) => None,
                    (p, q) => {
                        let mut t = ScalarField::one();
                        if p == 1 {
                            t = t.mul(&ScalarField::map_derivative(&g1, 1, false));
                        }
                        if q == 1 {
                            t = t.mul(&ScalarField::map_derivative(&g1, 1, true));
                        }
                        Some(t)
                    }
                };
                let rhs = pulled.entry(k2).or_insert_with(|| {
                    m2.iter()
                        .map(|f| {
                            let pb = f.pullback(&g1);
                            match &twist {
                                Some(t) => pb.mul(t),
                                None => pb,
                            }
                        })
                        .collect()
                });
                let mut prod = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = ScalarField::zero();
                        for l in 0..n {
                            acc = acc.add(&m1[i * n + l].mul(&rhs[l * n + j]));
                        }
                        prod.push(if odd { acc.neg() } else { acc });
                    }
                }
                let label = ctx.action.mul(&k2.label, &k1.label);
                out.insert(FormKey { label, tensor, p: k1.p + k2.p, q: k1.q + k2.q }, prod);
            }
        }
        Ok(out)
    }

    /// `∂ = dz ∧ ∂_z`.
    pub fn del(&self) -> CrossedForm {
        self.form_op(|k| (k.p == 0).then_some((1, k.q, sign(false))), |f| f.d_z())
    }

    /// `∂̄ = dz̄ ∧ ∂_z̄`.
    pub fn delbar(&self) -> CrossedForm {
        self.form_op(|k| (k.q == 0).then_some((k.p, 1, sign(k.p == 1))), |f| f.d_zbar())
    }

    pub fn d(&self) -> CrossedForm {
        self.del().add(&self.delbar())
    }

    fn form_op(&self, key: impl Fn(&FormKey) -> Option<(u8, u8, C64)>, op: impl Fn(&ScalarField) -> ScalarField) -> CrossedForm {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            if let Some((p, q, s)) = key(k) {
                let key = FormKey { p, q, ..k.clone() };
                out.insert(key, m.iter().map(|f| op(f).scale(s)).collect());
            }
        }
        out
    }

    /// Modular derivative: multiplies the `g` component by `ln|g'|²`.
    pub fn modular(&self, ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            let w = ScalarField::map_log_abs_sq(&ctx.map(&k.label)?);
            out.insert(k.clone(), m.iter().map(|f| f.mul(&w)).collect());
        }
        Ok(out)
    }

    /// `δ = [∂, D]`: wedges the `g` component with `(g''/g') dz`.
    pub fn delta(&self, ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            if k.p == 1 {
                continue;
            }
            let w = ScalarField::map_log_derivative(&ctx.map(&k.label)?);
            if w.is_zero() {
                continue;
            }
            out.insert(FormKey { p: 1, ..k.clone() }, m.iter().map(|f| f.mul(&w)).collect());
        }
        Ok(out)
    }

    /// `∇ = d − δ/2`.
    pub fn nabla(&self, ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
        Ok(self.d().sub(&self.delta(ctx)?.scale(C64::new(0.5, 0.0))))
    }

    /// Universal differential on the tensor part.
    pub fn universal_d(&self, ctx: &Ctx) -> CrossedForm {
        let mut out = CrossedForm::zero(self.n);
        for (k, m) in &self.terms {
            let s = sign(k.form_degree() % 2 == 1);
            for t in ctx.trunc.universal_d(&k.tensor) {
                out.insert(FormKey { tensor: t, ..k.clone() }, m.iter().map(|f| f.scale(s)).collect());
            }
        }
        out
    }

    /// Evaluate the matrix of one component at `z`.
    pub fn eval(&self, key: &FormKey, z: C64) -> Result<Vec<C64>, ExprError> {
        match self.terms.get(key) {
            Some(m) => m.iter().map(|f| f.eval(z)).collect(),
            None => Ok(vec![C64::new(0.0, 0.0); self.n * self.n]),
        }
    }

    /// Union of the support boxes of all coefficients.
    pub fn support(&self) -> Support {
        self.terms.values().flatten().fold(Support::Empty, |acc, f| acc.union(&f.support()))
    }

    /// Bounding box of the compactly supported part, if any.
    pub fn bounds(&self) -> Option<Bounds> {
        self.support().bounds()
    }

    /// Collapse the tensor part by the augmentation `U_g ↦ 1` of each letter;
    /// for elements in the image of the lifting this is the multiplication map.
    pub fn augment(&self) -> CrossedForm {
        self.map_tensor(|t| match t {
            TKey::Word(_) => Some((TKey::empty(), C64::new(1.0, 0.0))),
            TKey::Form { .. } => None,
        })
    }

    /// Block sum `diag(self, other)`.
    pub fn block_sum(&self, other: &CrossedForm) -> CrossedForm {
        let n = self.n + other.n;
        let mut out = CrossedForm::zero(n);
        let keys: Vec<&FormKey> = self.terms.keys().chain(other.terms.keys()).collect();
        for k in keys {
            let mut m = vec![ScalarField::zero(); n * n];
            if let Some(a) = self.terms.get(k) {
                for i in 0..self.n {
                    for j in 0..self.n {
                        m[i * n + j] = a[i * self.n + j].clone();
                    }
                }
            }
            if let Some(b) = other.terms.get(k) {
                for i in 0..other.n {
                    for j in 0..other.n {
                        m[(i + self.n) * n + j + self.n] = b[i * other.n + j].clone();
                    }
                }
            }
            out.terms.insert(k.clone(), m);
        }
        out
    }

    /// Split into the constant part at the unit label and the rest.
    pub fn split_constant(&self, action: &GroupAction) -> (Vec<C64>, CrossedForm) {
        let unit = FormKey::new(action.unit(), TKey::empty(), 0, 0);
        let mut p = vec![C64::new(0.0, 0.0); self.n * self.n];
        let mut rest = self.clone();
        if let Some(m) = self.terms.get(&unit) {
            let mut keep = Vec::with_capacity(m.len());
            for (i, f) in m.iter().enumerate() {
                match f.as_const() {
                    Some(c) => {
                        p[i] = c;
                        keep.push(ScalarField::zero());
                    }
                    None => keep.push(f.clone()),
                }
            }
            rest.terms.remove(&unit);
            rest.insert(unit, keep);
        }
        (p, rest)
    }
}

/// Right-hand side of the BRS variation: `−∂̄ω − Aω − ωA`.
pub fn brs_variation(a: &CrossedForm, omega: &CrossedForm, ctx: &Ctx) -> Result<CrossedForm, AlgebraError> {
    let aw = a.mul(omega, ctx)?;
    let wa = omega.mul(a, ctx)?;
    Ok(omega.delbar().add(&aw).add(&wa).neg())
}

pub fn identity_matrix(n: usize) -> Vec<C64> {
    (0..n * n).map(|k| if k / n == k % n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BumpCutoff;
    use crate::groupoid::Generator;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bump(center: C64, a: f64, b: f64) -> ScalarField {
        ScalarField::bump(BumpCutoff::new(center, a, b).unwrap())
    }

    fn dilation() -> GroupAction {
        GroupAction::free(vec![Generator { name: "g".into(), map: ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)) }])
    }

    fn mobius() -> GroupAction {
        GroupAction::free(vec![Generator {
            name: "p".into(),
            map: ConformalMap::mobius(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)),
        }])
    }

    #[test]
    fn convolution_twists_by_pullback() {
        let act = dilation();
        let ctx = Ctx::new(&act, Trunc::Full);
        let g = act.generator("g").unwrap();
        let f1 = ScalarField::z().add(&ScalarField::real(1.0));
        let f2 = ScalarField::z().mul(&bump(c(0.0, 0.0), 1.0, 2.0));
        let x = CrossedForm::scalar(g.clone(), f1.clone());
        let y = CrossedForm::scalar(act.unit(), f2);
        let xy = x.mul(&y, &ctx).unwrap();
        let key = FormKey::new(g, TKey::empty(), 0, 0);
        let v = xy.eval(&key, c(0.3, 0.0)).unwrap()[0];
        assert!((v - f1.eval(c(0.3, 0.0)).unwrap() * 0.6).norm() < 1e-15);
    }

    #[test]
    fn local_unit_acts_trivially() {
        let act = mobius();
        let ctx = Ctx::new(&act, Trunc::Full);
        let u0 = CrossedForm::scalar(act.unit(), bump(c(0.0, 0.0), 1.0, 2.0));
        let f = ScalarField::z().powi(2).mul(&bump(c(0.1, 0.0), 0.2, 0.4));
        let p = act.generator("p").unwrap();
        let x = CrossedForm::scalar(p.clone(), f.clone());
        let key = FormKey::new(p, TKey::empty(), 0, 0);
        for y in [u0.mul(&x, &ctx).unwrap(), x.mul(&u0, &ctx).unwrap()] {
            for k in 0..8 {
                let z = c(0.05 * k as f64 - 0.2, 0.03 * k as f64 - 0.1);
                assert!((y.eval(&key, z).unwrap()[0] - f.eval(z).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn antiholomorphic_factor_picks_up_conjugate_derivative() {
        let act = mobius();
        let ctx = Ctx::new(&act, Trunc::Full);
        let p = act.generator("p").unwrap();
        let map = act.map_of(&p).unwrap();
        let u = ScalarField::z().mul(&bump(c(0.0, 0.0), 0.2, 0.4));
        let x = CrossedForm::scalar(p.clone(), ScalarField::one());
        let y = CrossedForm::term(1, FormKey::new(act.unit(), TKey::empty(), 0, 1), vec![u.clone()]);
        let xy = x.mul(&y, &ctx).unwrap();
        let key = FormKey::new(p, TKey::empty(), 0, 1);
        for k in 0..20 {
            let z = C64::from_polar(0.05 + 0.015 * k as f64, 0.7 * k as f64);
            let gz = map.eval(z).unwrap();
            let gp = c(1.0, 0.0) / ((z + 1.0) * (z + 1.0));
            let want = u.eval(gz).unwrap() * gp.conj();
            assert!((xy.eval(&key, z).unwrap()[0] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn delta_of_mobius_component() {
        let act = mobius();
        let ctx = Ctx::new(&act, Trunc::Full);
        let p = act.generator("p").unwrap();
        let f = ScalarField::z().add(&ScalarField::real(2.0));
        let x = CrossedForm::scalar(p.clone(), f.clone());
        let dx = x.delta(&ctx).unwrap();
        let key = FormKey::new(p, TKey::empty(), 1, 0);
        for k in 0..10 {
            let z = c(0.1 * k as f64 - 0.4, 0.05 * k as f64);
            let want = -2.0 / (z + 1.0) * f.eval(z).unwrap();
            assert!((dx.eval(&key, z).unwrap()[0] - want).norm() < 1e-13);
        }
        let aff = dilation();
        let ctx = Ctx::new(&aff, Trunc::Full);
        let y = CrossedForm::scalar(aff.generator("g").unwrap(), f);
        assert!(y.delta(&ctx).unwrap().is_zero());
    }

    #[test]
    fn product_of_two_dz_vanishes() {
        let act = GroupAction::trivial();
        let ctx = Ctx::new(&act, Trunc::Full);
        let x = CrossedForm::term(1, FormKey::new(act.unit(), TKey::empty(), 1, 0), vec![ScalarField::z()]);
        assert!(x.mul(&x, &ctx).unwrap().is_zero());
        let y = CrossedForm::term(1, FormKey::new(act.unit(), TKey::empty(), 0, 1), vec![ScalarField::one()]);
        let xy = x.mul(&y, &ctx).unwrap();
        let yx = y.mul(&x, &ctx).unwrap();
        let k = FormKey::new(act.unit(), TKey::empty(), 1, 1);
        let z = c(0.3, 0.1);
        assert_eq!(xy.eval(&k, z).unwrap()[0], z);
        assert_eq!(yx.eval(&k, z).unwrap()[0], -z);
    }
}
