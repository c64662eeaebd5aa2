//! Seeded invariant checks over random elements of a scenario's algebra.
//!
//! Every check draws its samples from one ChaCha stream, so a seed fixes
//! the report bit for bit. Samples whose fixed points fall in a bump
//! transition zone cannot be localized and are redrawn; the number of
//! redraws is reported next to the defect.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{AlgebraError, CrossedForm, Ctx, FormKey};
use crate::cocycles::{
    phi_contributions, phi_trace, todd_paths, transport_coordinates, CocycleError,
};
use crate::expr::{Bounds, BumpCutoff, ExprError, ScalarField};
use crate::groupoid::{ConformalMap, GroupAction, GroupKind, Label};
use crate::index::{anomaly_delta0, anomaly_delta1_paths, phi_natural, IndexError};
use crate::quadrature::QuadratureSpec;
use crate::tensoralg::{lift_idempotent, lift_invertible, sampled_max, LiftAlgebra, TKey, TruncatedSeries, Trunc};

/// Outcome of one invariant over many samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    /// Draws discarded because a fixed point hit a transition zone.
    pub rejected: usize,
    pub max_defect: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub detail: BTreeMap<String, f64>,
}

impl Check {
    fn new(name: &str, bound: f64) -> Self {
        Check { name: name.into(), samples: 0, rejected: 0, max_defect: 0.0, bound, pass: true, detail: BTreeMap::new() }
    }

    fn record(&mut self, defect: f64) {
        self.samples += 1;
        // NaN must fail.
        if !(defect <= self.max_defect) {
            self.max_defect = if defect.is_nan() { f64::INFINITY } else { defect };
        }
    }

    fn bump_detail(&mut self, key: &str) {
        *self.detail.entry(key.into()).or_insert(0.0) += 1.0;
    }

    fn finish(mut self, want: usize) -> Self {
        self.pass = self.samples == want && self.max_defect < self.bound;
        self
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SuiteError {
    #[error("{check}: {source}")]
    Cocycle { check: String, source: CocycleError },
    #[error("{check}: {source}")]
    Index { check: String, source: IndexError },
    #[error("{check}: {source}")]
    Algebra { check: String, source: AlgebraError },
    #[error("{check}: too many rejected samples ({rejected})")]
    Starved { check: String, rejected: usize },
}

fn plateau_cocycle(e: &CocycleError) -> bool {
    matches!(
        e,
        CocycleError::Expr(ExprError::PlateauViolation(_) | ExprError::UnsupportedOrder { .. })
            | CocycleError::Algebra(AlgebraError::Expr(ExprError::PlateauViolation(_) | ExprError::UnsupportedOrder { .. }))
    )
}

fn plateau_index(e: &IndexError) -> bool {
    match e {
        IndexError::Cocycle(c) => plateau_cocycle(c),
        IndexError::Algebra(a) => plateau_cocycle(&CocycleError::Algebra(a.clone())),
        _ => false,
    }
}

/// Shape of the random data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOpts {
    /// Bump centers lie in this disk about 0.
    pub center_radius: f64,
    pub plateau: (f64, f64),
    /// Width of the transition zone.
    pub collar: (f64, f64),
    /// Longest random word in the generators.
    pub word_len: usize,
    pub terms: usize,
    pub size: usize,
}

impl Default for SamplerOpts {
    fn default() -> Self {
        SamplerOpts { center_radius: 0.6, plateau: (0.4, 0.9), collar: (0.3, 0.6), word_len: 1, terms: 2, size: 1 }
    }
}

/// Seeded source of random fields and crossed elements.
pub struct Sampler {
    rng: ChaCha8Rng,
    pub opts: SamplerOpts,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), opts: SamplerOpts::default() }
    }

    pub fn with_opts(seed: u64, opts: SamplerOpts) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), opts }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn complex(&mut self, scale: f64) -> C64 {
        C64::new(self.uniform(-scale, scale), self.uniform(-scale, scale))
    }

    pub fn point_in_disk(&mut self, r: f64) -> C64 {
        C64::from_polar(r * self.uniform(0.0, 1.0).sqrt(), self.uniform(0.0, std::f64::consts::TAU))
    }

    pub fn cutoff(&mut self) -> BumpCutoff {
        let c = self.point_in_disk(self.opts.center_radius);
        let (pl, ph) = self.opts.plateau;
        let (cl, ch) = self.opts.collar;
        let rp = self.uniform(pl, ph);
        let w = self.uniform(cl, ch);
        BumpCutoff::new(c, rp, rp + w).expect("plateau below support")
    }

    /// `(c0 + c1 z + c2 z̄ + c3 z z̄) · bump`.
    pub fn field(&mut self) -> ScalarField {
        let (z, zb) = (ScalarField::z(), ScalarField::zbar());
        let poly = ScalarField::constant(self.complex(1.0))
            .add(&z.scale(self.complex(1.0)))
            .add(&zb.scale(self.complex(1.0)))
            .add(&z.mul(&zb).scale(self.complex(0.5)));
        poly.mul(&ScalarField::bump(self.cutoff()))
    }

    pub fn matrix(&mut self) -> Vec<ScalarField> {
        (0..self.opts.size * self.opts.size).map(|_| self.field()).collect()
    }

    /// A word of length at most `word_len` in the generators and their inverses.
    pub fn label(&mut self, action: &GroupAction) -> Label {
        let gens: Vec<String> = action.generators().iter().map(|g| g.name.clone()).collect();
        if gens.is_empty() {
            return action.unit();
        }
        let len = self.index(self.opts.word_len + 1);
        let mut acc = action.unit();
        for _ in 0..len {
            let g = action.generator(&gens[self.index(gens.len())]).expect("declared generator");
            let g = if action.kind() != GroupKind::FiniteCyclic && self.rng.gen_bool(0.5) { action.inv(&g) } else { g };
            acc = action.mul(&acc, &g);
        }
        acc
    }

    /// Degree-zero element with `terms` random components.
    pub fn element(&mut self, action: &GroupAction) -> CrossedForm {
        let mut x = CrossedForm::zero(self.opts.size);
        for _ in 0..self.opts.terms {
            let label = self.label(action);
            x = x.add(&CrossedForm::at(label, self.matrix()));
        }
        x
    }

    /// Homogeneous form of total degree `deg` (0 or 1) with empty tensor keys.
    pub fn form(&mut self, action: &GroupAction, deg: u8) -> CrossedForm {
        let mut x = CrossedForm::zero(self.opts.size);
        for _ in 0..self.opts.terms {
            let (p, q) = match (deg, self.index(2)) {
                (0, _) => (0, 0),
                (_, 0) => (1, 0),
                _ => (0, 1),
            };
            let key = FormKey::new(self.label(action), TKey::empty(), p, q);
            x = x.add(&CrossedForm::term(self.opts.size, key, self.matrix()));
        }
        x
    }

    /// Möbius map `((1 + α)z + β)/(γz + 1)` close to the identity, with its
    /// pole far outside the sampling disk.
    pub fn near_identity_mobius(&mut self) -> ConformalMap {
        let a = C64::new(1.0, 0.0) + self.complex(0.25);
        let b = self.complex(0.3);
        let c = self.complex(0.08);
        ConformalMap::mobius(a, b, c, C64::new(1.0, 0.0))
    }
}

const MAX_REDRAWS_PER_SAMPLE: usize = 40;

/// Run `trial` until `count` samples succeed, redrawing on plateau violations.
fn sample_loop<E>(
    check: &mut Check,
    count: usize,
    plateau: impl Fn(&E) -> bool,
    mut trial: impl FnMut(&mut Check) -> Result<Option<f64>, E>,
    wrap: impl Fn(String, E) -> SuiteError,
) -> Result<(), SuiteError> {
    while check.samples < count {
        match trial(check) {
            Ok(Some(d)) => check.record(d),
            Ok(None) => {}
            Err(e) if plateau(&e) => {
                check.rejected += 1;
                if check.rejected > MAX_REDRAWS_PER_SAMPLE * count.max(1) {
                    return Err(SuiteError::Starved { check: check.name.clone(), rejected: check.rejected });
                }
            }
            Err(e) => return Err(wrap(check.name.clone(), e)),
        }
    }
    Ok(())
}

fn wrap_cocycle(check: String, source: CocycleError) -> SuiteError {
    SuiteError::Cocycle { check, source }
}

fn wrap_index(check: String, source: IndexError) -> SuiteError {
    SuiteError::Index { check, source }
}

fn note_orders(check: &mut Check, orders: impl IntoIterator<Item = usize>) {
    for n in orders {
        check.bump_detail(&format!("order_{n}_points"));
    }
}

/// `|Φ(ab) − Φ(ba)|`.
pub fn trace_property(action: &GroupAction, s: &mut Sampler, count: usize, bound: f64) -> Result<Check, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let mut check = Check::new("trace_property", bound);
    sample_loop(
        &mut check,
        count,
        plateau_cocycle,
        |chk| {
            let a = s.element(action);
            let b = s.element(action);
            let ab = phi_trace(&a.mul(&b, &ctx)?, &ctx)?;
            let ba = phi_trace(&b.mul(&a, &ctx)?, &ctx)?;
            note_orders(chk, ab.contributions.iter().map(|c| c.order));
            Ok(Some((ab.value - ba.value).norm()))
        },
        wrap_cocycle,
    )?;
    Ok(check.finish(count))
}

/// `|Φ(a) − Φ(transport(a, h))|` for random Möbius `h` near the identity.
pub fn coordinate_invariance(action: &GroupAction, s: &mut Sampler, count: usize, bound: f64) -> Result<Check, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let mut check = Check::new("coordinate_invariance", bound);
    sample_loop(
        &mut check,
        count,
        plateau_cocycle,
        |chk| {
            let a = s.element(action);
            let h = s.near_identity_mobius();
            let before = phi_trace(&a, &ctx)?;
            let (moved, b) = transport_coordinates(&a, &h, action)?;
            let after = phi_trace(&b, &Ctx::new(&moved, Trunc::Full))?;
            note_orders(chk, before.contributions.iter().map(|c| c.order));
            Ok(Some((before.value - after.value).norm()))
        },
        wrap_cocycle,
    )?;
    Ok(check.finish(count))
}

/// Contributions extracted with `m = n + pad` against `m = n`.
pub fn order_padding(action: &GroupAction, s: &mut Sampler, count: usize, bound: f64) -> Result<Check, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let mut check = Check::new("order_padding", bound);
    sample_loop(
        &mut check,
        count,
        plateau_cocycle,
        |chk| {
            let a = s.element(action);
            let base = phi_contributions(&a, &ctx, 0)?;
            let mut worst: f64 = 0.0;
            for pad in 1..=2 {
                let padded = phi_contributions(&a, &ctx, pad)?;
                if padded.len() != base.len() {
                    return Ok(Some(f64::INFINITY));
                }
                for (x, y) in base.iter().zip(&padded) {
                    worst = worst.max((x.value - y.value).norm());
                }
            }
            note_orders(chk, base.iter().map(|c| c.order));
            Ok(Some(worst))
        },
        wrap_cocycle,
    )?;
    Ok(check.finish(count))
}

/// Single-term elements `F_i U_{g_i}` whose labels multiply to the unit, so
/// every cyclic product reaches an identity germ and the integrals are not
/// trivially empty.
pub fn closed_chain(action: &GroupAction, s: &mut Sampler, len: usize) -> Vec<CrossedForm> {
    let mut labels: Vec<Label> = (0..len - 1).map(|_| s.label(action)).collect();
    let prod = labels.iter().fold(action.unit(), |acc, g| action.mul(&acc, g));
    labels.push(action.inv(&prod));
    labels.into_iter().map(|g| CrossedForm::at(g, s.matrix())).collect()
}

/// `([Γ], c₁, Td)` with `Td = ∫a₀∇a₁∇a₂`, plus the dual-path defect.
fn todd_triple(a: &[CrossedForm], ctx: &Ctx, spec: &QuadratureSpec) -> Result<([C64; 3], f64), CocycleError> {
    let t = todd_paths(a, ctx, spec)?;
    Ok(([t.fundamental.value, t.chern1.value, t.direct.value], t.defect))
}

/// Hochschild boundaries of `[Γ]`, `c₁`, `Td` on quadruples, cyclicity
/// defects on triples and the Todd dual-path defect on the same triples.
/// Each argument list is evaluated once for all three cochains.
pub fn cocycle_laws(action: &GroupAction, s: &mut Sampler, count: usize, spec: &QuadratureSpec) -> Result<Vec<Check>, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let bound = 4.0 * spec.tol;
    let names = ["fundamental", "chern1", "todd"];
    let mut boundary: Vec<Check> = names.iter().map(|n| Check::new(&format!("b_{n}"), bound)).collect();
    let mut cyclic: Vec<Check> = names.iter().map(|n| Check::new(&format!("cyclicity_{n}"), bound)).collect();
    let mut dual = Check::new("todd_dual_path", 2.0 * spec.tol);
    fn wrap(name: &'static str) -> impl Fn(CocycleError) -> SuiteError {
        move |e| wrap_cocycle(name.to_string(), e)
    }
    for _ in 0..count {
        let q = closed_chain(action, s, 4);
        let mut b = [C64::new(0.0, 0.0); 3];
        for i in 0..=3 {
            let args: Vec<CrossedForm> = if i < 3 {
                let mut v = q[..i].to_vec();
                v.push(q[i].mul(&q[i + 1], &ctx).map_err(|e| wrap("b")(e.into()))?);
                v.extend_from_slice(&q[i + 2..]);
                v
            } else {
                vec![q[3].mul(&q[0], &ctx).map_err(|e| wrap("b")(e.into()))?, q[1].clone(), q[2].clone()]
            };
            let (v, _) = todd_triple(&args, &ctx, spec).map_err(wrap("b"))?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for (acc, x) in b.iter_mut().zip(v) {
                *acc += x * sign;
            }
        }
        let t = closed_chain(action, s, 3);
        let (x, defect) = todd_triple(&t, &ctx, spec).map_err(wrap("cyclicity"))?;
        let (y, _) = todd_triple(&[t[2].clone(), t[0].clone(), t[1].clone()], &ctx, spec).map_err(wrap("cyclicity"))?;
        for j in 0..3 {
            boundary[j].record(b[j].norm());
            cyclic[j].record((x[j] - y[j]).norm());
            if x[j].norm() > 1e-6 {
                cyclic[j].bump_detail("nonzero_samples");
            }
        }
        dual.record(defect);
        if x[1].norm() > 1e-6 {
            dual.bump_detail("nonzero_chern1");
        }
    }
    Ok(boundary.into_iter().chain(cyclic).chain([dual]).map(|c| c.finish(count)).collect())
}

/// A random universal one-form coefficient `x 𝐝b y` over labels of `action`.
fn random_form_key(action: &GroupAction, s: &mut Sampler) -> TKey {
    let x = (0..s.index(2)).map(|_| s.label(action)).collect();
    let y = (0..s.index(2)).map(|_| s.label(action)).collect();
    TKey::Form { x, b: s.label(action), y }
}

/// `Δ⁰` against `Φ♮`, bitwise.
pub fn anomaly_delta0_equality(action: &GroupAction, s: &mut Sampler, count: usize) -> Result<Check, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let mut check = Check::new("anomaly_delta0", f64::MIN_POSITIVE);
    sample_loop(
        &mut check,
        count,
        plateau_index,
        |_| {
            let mut w = CrossedForm::zero(s.opts.size);
            for _ in 0..s.opts.terms {
                let key = FormKey::new(s.label(action), random_form_key(action, s), 0, 0);
                w = w.add(&CrossedForm::term(s.opts.size, key, s.matrix()));
            }
            let d0 = anomaly_delta0(&w, &ctx)?;
            let nat = phi_natural(&w, &ctx)?;
            Ok(Some(if d0 == nat { 0.0 } else { f64::INFINITY }))
        },
        wrap_index,
    )?;
    // Exact equality: the bound only separates 0 from anything else.
    Ok(check.finish(count))
}

/// `Δ¹` by the explicit pairwise formula against the `∇`-form integral.
/// Each action contributes one sample; `ω` sits at the inverse of `A`'s label
/// half of the time so the pairwise sum is not empty.
pub fn anomaly_delta1_agreement(actions: &[GroupAction], s: &mut Sampler, spec: &QuadratureSpec) -> Result<Check, SuiteError> {
    let mut check = Check::new("anomaly_delta1", 2.0 * spec.tol);
    for action in actions {
        let ctx = Ctx::new(action, Trunc::Full);
        let g = s.label(action);
        let a = CrossedForm::term(s.opts.size, FormKey::new(g.clone(), TKey::Word(vec![g.clone()]), 0, 1), s.matrix());
        let h = if s.index(2) == 0 { action.inv(&g) } else { s.label(action) };
        let w = CrossedForm::at(h, s.matrix());
        let d = anomaly_delta1_paths(&a, &w, &ctx, spec).map_err(|e| wrap_index(check.name.clone(), e))?;
        if d.explicit.values().any(|v| v.norm() > 1e-6) {
            check.bump_detail("nonzero_samples");
        }
        check.record(d.defect);
    }
    Ok(check.finish(actions.len()))
}

/// Random Möbius actions with one generator near the identity.
pub fn random_mobius_actions(s: &mut Sampler, count: usize) -> Vec<GroupAction> {
    (0..count)
        .map(|_| {
            let g = crate::groupoid::Generator { name: "g".into(), map: s.near_identity_mobius() };
            GroupAction::mobius(vec![g]).expect("Möbius generator")
        })
        .collect()
}

const GRID: usize = 9;

fn sample_box(xs: &[&CrossedForm]) -> Bounds {
    xs.iter()
        .filter_map(|x| x.bounds())
        .reduce(|a, b| a.union(&b))
        .unwrap_or_else(|| Bounds::around(C64::new(0.0, 0.0), 1.0))
}

fn residual(r: &CrossedForm, within: &Bounds) -> Result<f64, AlgebraError> {
    if r.is_zero() {
        return Ok(0.0);
    }
    sampled_max(r, within, GRID)
}

/// Nilpotency of `d, ∂, ∂̄, δ, ∇` and graded Leibniz rules for `d, δ, D`,
/// as sampled maxima of the residual forms.
pub fn differential_suite(action: &GroupAction, s: &mut Sampler, count: usize, bound: f64) -> Result<Vec<Check>, SuiteError> {
    let ctx = Ctx::new(action, Trunc::Full);
    let names = ["d2", "del2", "delbar2", "delta2", "nabla2", "leibniz_d", "leibniz_delta", "leibniz_modular"];
    let mut checks: Vec<Check> = names.iter().map(|n| Check::new(n, bound)).collect();
    for _ in 0..count {
        let dx = s.index(2) as u8;
        let x = s.form(action, dx);
        let y = s.form(action, 0);
        let within = sample_box(&[&x, &y]);
        let sgn = C64::new(if dx == 1 { -1.0 } else { 1.0 }, 0.0);
        let run = |x: &CrossedForm, y: &CrossedForm| -> Result<[CrossedForm; 8], AlgebraError> {
            let xy = x.mul(y, &ctx)?;
            let leibniz = |op: &dyn Fn(&CrossedForm) -> Result<CrossedForm, AlgebraError>, graded: bool| -> Result<CrossedForm, AlgebraError> {
                let s = if graded { sgn } else { C64::new(1.0, 0.0) };
                Ok(op(&xy)?.sub(&op(x)?.mul(y, &ctx)?).sub(&x.mul(&op(y)?, &ctx)?.scale(s)))
            };
            Ok([
                x.d().d(),
                x.del().del(),
                x.delbar().delbar(),
                x.delta(&ctx)?.delta(&ctx)?,
                x.nabla(&ctx)?.nabla(&ctx)?,
                leibniz(&|f| Ok(f.d()), true)?,
                leibniz(&|f| f.delta(&ctx), true)?,
                leibniz(&|f| f.modular(&ctx), false)?,
            ])
        };
        let residuals = run(&x, &y).map_err(|e| SuiteError::Algebra { check: "differentials".into(), source: e })?;
        for (chk, r) in checks.iter_mut().zip(residuals.iter()) {
            let m = residual(r, &within).map_err(|e| SuiteError::Algebra { check: chk.name.clone(), source: e })?;
            chk.record(m);
        }
    }
    Ok(checks.into_iter().map(|c| c.finish(count)).collect())
}

/// Small integer matrix with determinant one, so its inverse is integral too.
fn unimodular(s: &mut Sampler) -> ([C64; 4], [C64; 4]) {
    let k = (s.index(5) as f64) - 2.0;
    let l = (s.index(5) as f64) - 2.0;
    // [[1, k], [0, 1]] · [[1, 0], [l, 1]].
    let c = |x: f64| C64::new(x, 0.0);
    let m = [c(1.0 + k * l), c(k), c(l), c(1.0)];
    let inv = [c(1.0), c(-k), c(-l), c(1.0 + k * l)];
    (m, inv)
}

fn mat2(a: &[C64; 4], b: &[C64; 4]) -> [C64; 4] {
    [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
}

/// `ũ ũ⁻¹ = 1` and `ẽ ẽ = ẽ` in the word-truncated tensor algebra, compared
/// with `==` on integer data.
pub fn lifting_exactness(action: &GroupAction, s: &mut Sampler, count: usize, lengths: &[usize]) -> Result<Check, SuiteError> {
    let mut check = Check::new("lifting_exactness", f64::MIN_POSITIVE);
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let wrap = |e: AlgebraError| SuiteError::Algebra { check: "lifting_exactness".into(), source: e };
    for _ in 0..count {
        let g = s.label(action);
        let (m, mi) = unimodular(s);
        let id = TruncatedSeries::at(action.unit(), vec![one, z, z, one]);
        // u = M U_g, u⁻¹ = U_{g⁻¹} M⁻¹.
        let a = TruncatedSeries::at(g.clone(), m.to_vec()).minus(&id);
        let b = TruncatedSeries::at(action.inv(&g), mi.to_vec()).minus(&id);
        // e = M [[1, x U_h + y U_k], [0, 0]] M⁻¹.
        let (h, k) = (s.label(action), s.label(action));
        let (x, y) = (C64::new(s.index(5) as f64 - 2.0, 0.0), C64::new(s.index(5) as f64 - 2.0, 0.0));
        let p = mat2(&mat2(&m, &[one, z, z, z]), &mi);
        let kk = TruncatedSeries::at(h, mat2(&mat2(&m, &[z, x, z, z]), &mi).to_vec())
            .plus(&TruncatedSeries::at(k, mat2(&mat2(&m, &[z, y, z, z]), &mi).to_vec()));
        let mut ok = true;
        for &l in lengths {
            let ctx = Ctx::new(action, Trunc::Words(l));
            let (u, ui) = lift_invertible(&a, &b, l, &ctx).map_err(wrap)?;
            ok &= u.product(&ui, &ctx).map_err(wrap)? == id && ui.product(&u, &ctx).map_err(wrap)? == id;
            let e = lift_idempotent(&p, &kk, l, &ctx).map_err(wrap)?;
            ok &= e.product(&e, &ctx).map_err(wrap)? == e;
        }
        check.record(if ok { 0.0 } else { f64::INFINITY });
    }
    Ok(check.finish(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::Generator;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dilation() -> GroupAction {
        GroupAction::free(vec![Generator { name: "g".into(), map: ConformalMap::affine(c(0.5, 0.2), c(0.1, 0.0)) }])
    }

    #[test]
    fn sampler_is_deterministic() {
        let act = dilation();
        let mut s1 = Sampler::new(3);
        let mut s2 = Sampler::new(3);
        let (x, y) = (s1.element(&act), s2.element(&act));
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }

    #[test]
    fn trace_and_padding_on_affine_group() {
        let act = dilation();
        let mut s = Sampler::new(11);
        let t = trace_property(&act, &mut s, 5, 1e-9).unwrap();
        assert!(t.pass, "{t:?}");
        let p = order_padding(&act, &mut s, 5, 1e-10).unwrap();
        assert!(p.pass, "{p:?}");
    }

    #[test]
    fn lifting_on_cyclic_group() {
        let w = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let act = GroupAction::cyclic(3, Generator { name: "r".into(), map: ConformalMap::affine(w, c(0.0, 0.0)) }).unwrap();
        let r = lifting_exactness(&act, &mut Sampler::new(5), 4, &[2, 3, 4]).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn differentials_on_mobius_group() {
        let act = GroupAction::mobius(vec![Generator {
            name: "g".into(),
            map: ConformalMap::mobius(c(1.1, 0.0), c(0.1, 0.0), c(0.05, 0.0), c(1.0, 0.0)),
        }])
        .unwrap();
        for chk in differential_suite(&act, &mut Sampler::new(2), 3, 1e-9).unwrap() {
            assert!(chk.pass, "{chk:?}");
        }
    }
}
