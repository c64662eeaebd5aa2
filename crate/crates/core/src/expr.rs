//! Closed-form scalar fields on the plane.
//!
//! A [`ScalarField`] is an expression tree in `z` and `z̄` together with a
//! conservative bounding box of its support. Values and bivariate jets of
//! every order are computed from the tree itself, so derivatives are exact up
//! to rounding. Compact support comes from [`BumpCutoff`] factors, which
//! evaluate to an exact `0` outside their outer radius.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groupoid::{ConformalMap, MapError};
use crate::jets::{Jet1, Jet2, JetError};

/// Highest jet order available inside a bump transition annulus.
pub const DEFAULT_GLUE_ORDER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("pole of a reciprocal at {0}")]
    Pole(C64),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("jet order {order} requested inside a bump transition zone (glue order {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("point {0} lies in a bump transition zone where a plateau is required")]
    PlateauViolation(C64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected end of expression")]
    Eof,
    #[error("unexpected token `{token}` at offset {offset}")]
    Unexpected { token: String, offset: usize },
    #[error("unknown operator `{0}`")]
    UnknownOp(String),
    #[error("wrong argument count for `{op}`: {got}")]
    Arity { op: String, got: usize },
    #[error("invalid cutoff: {0}")]
    Cutoff(String),
}

/// Axis-aligned box `lo ≤ z ≤ hi` (componentwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: C64,
    pub hi: C64,
}

impl Bounds {
    pub fn new(lo: C64, hi: C64) -> Self {
        Bounds { lo, hi }
    }

    pub fn around(center: C64, radius: f64) -> Self {
        let d = C64::new(radius, radius);
        Bounds { lo: center - d, hi: center + d }
    }

    pub fn from_points(points: &[C64]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Bounds { lo: *first, hi: *first };
        for p in &points[1..] {
            b.lo = C64::new(b.lo.re.min(p.re), b.lo.im.min(p.im));
            b.hi = C64::new(b.hi.re.max(p.re), b.hi.im.max(p.im));
        }
        Some(b)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.lo.re && z.re <= self.hi.re && z.im >= self.lo.im && z.im <= self.hi.im
    }

    pub fn intersect(&self, other: &Bounds) -> Option<Bounds> {
        let lo = C64::new(self.lo.re.max(other.lo.re), self.lo.im.max(other.lo.im));
        let hi = C64::new(self.hi.re.min(other.hi.re), self.hi.im.min(other.hi.im));
        (lo.re < hi.re && lo.im < hi.im).then_some(Bounds { lo, hi })
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: C64::new(self.lo.re.min(other.lo.re), self.lo.im.min(other.lo.im)),
            hi: C64::new(self.hi.re.max(other.hi.re), self.hi.im.max(other.hi.im)),
        }
    }

    pub fn center(&self) -> C64 {
        (self.lo + self.hi) * 0.5
    }

    pub fn corners(&self) -> [C64; 4] {
        [self.lo, C64::new(self.hi.re, self.lo.im), self.hi, C64::new(self.lo.re, self.hi.im)]
    }

    /// Radius of the smallest disk about `center()` containing the box.
    pub fn circumradius(&self) -> f64 {
        (self.hi - self.lo).norm() * 0.5
    }

    pub fn area(&self) -> f64 {
        (self.hi.re - self.lo.re) * (self.hi.im - self.lo.im)
    }
}

/// Conservative support of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Empty,
    Bounded(Bounds),
    Unbounded,
}

impl Support {
    pub fn intersect(&self, other: &Support) -> Support {
        match (self, other) {
            (Support::Empty, _) | (_, Support::Empty) => Support::Empty,
            (Support::Unbounded, s) | (s, Support::Unbounded) => *s,
            (Support::Bounded(a), Support::Bounded(b)) => a.intersect(b).map_or(Support::Empty, Support::Bounded),
        }
    }

    pub fn union(&self, other: &Support) -> Support {
        match (self, other) {
            (Support::Empty, s) | (s, Support::Empty) => *s,
            (Support::Unbounded, _) | (_, Support::Unbounded) => Support::Unbounded,
            (Support::Bounded(a), Support::Bounded(b)) => Support::Bounded(a.union(b)),
        }
    }

    pub fn bounds(&self) -> Option<Bounds> {
        match self {
            Support::Bounded(b) => Some(*b),
            _ => None,
        }
    }

    /// `false` only when `z` is certainly outside the support.
    pub fn may_contain(&self, z: C64) -> bool {
        match self {
            Support::Empty => false,
            Support::Unbounded => true,
            Support::Bounded(b) => b.contains(z),
        }
    }
}

/// Domains and ranges of partial maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Disk { center: C64, radius: f64 },
    Rect { lo: C64, hi: C64 },
    #[serde(alias = "full")]
    FullPlane,
    Empty,
}

impl Region {
    pub fn disk(center: C64, radius: f64) -> Region {
        if radius > 0.0 {
            Region::Disk { center, radius }
        } else {
            Region::Empty
        }
    }

    pub fn rect(lo: C64, hi: C64) -> Region {
        if lo.re < hi.re && lo.im < hi.im {
            Region::Rect { lo, hi }
        } else {
            Region::Empty
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Region::Disk { radius, .. } if !(*radius > 0.0) => Err(format!("disk radius {radius} must be positive")),
            Region::Rect { lo, hi } if !(lo.re < hi.re && lo.im < hi.im) => Err(format!("rect {lo}..{hi} is degenerate")),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match self {
            Region::Disk { center, radius } => (z - center).norm() < *radius,
            Region::Rect { lo, hi } => z.re > lo.re && z.re < hi.re && z.im > lo.im && z.im < hi.im,
            Region::FullPlane => z.re.is_finite() && z.im.is_finite(),
            Region::Empty => false,
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Region::Disk { center, radius } => Support::Bounded(Bounds::around(*center, *radius)),
            Region::Rect { lo, hi } => Support::Bounded(Bounds::new(*lo, *hi)),
            Region::FullPlane => Support::Unbounded,
            Region::Empty => Support::Empty,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Region::Empty)
    }

    /// Largest disk about the region's center contained in it.
    pub fn inscribed_disk(&self) -> Region {
        match *self {
            Region::Rect { lo, hi } => {
                let r = 0.5 * (hi.re - lo.re).min(hi.im - lo.im);
                Region::disk((lo + hi) * 0.5, r)
            }
            other => other,
        }
    }

    /// An inner approximation of the intersection.
    pub fn intersect(&self, other: &Region) -> Region {
        match (*self, *other) {
            (Region::Empty, _) | (_, Region::Empty) => Region::Empty,
            (Region::FullPlane, r) | (r, Region::FullPlane) => r,
            (Region::Rect { lo: a, hi: b }, Region::Rect { lo: c, hi: d }) => Region::rect(
                C64::new(a.re.max(c.re), a.im.max(c.im)),
                C64::new(b.re.min(d.re), b.im.min(d.im)),
            ),
            (Region::Disk { center: c1, radius: r1 }, Region::Disk { center: c2, radius: r2 }) => {
                let dist = (c2 - c1).norm();
                if dist + r2 <= r1 {
                    *other
                } else if dist + r1 <= r2 {
                    *self
                } else if dist >= r1 + r2 {
                    Region::Empty
                } else {
                    // Largest disk inside the lens, centered on the axis.
                    let lo = dist - r2;
                    let hi = r1;
                    let dir = (c2 - c1) / dist;
                    Region::disk(c1 + dir * (0.5 * (lo + hi)), 0.5 * (hi - lo))
                }
            }
            (Region::Disk { center, radius }, Region::Rect { lo, hi })
            | (Region::Rect { lo, hi }, Region::Disk { center, radius }) => {
                let clip = Region::rect(
                    C64::new(lo.re.max(center.re - radius), lo.im.max(center.im - radius)),
                    C64::new(hi.re.min(center.re + radius), hi.im.min(center.im + radius)),
                );
                clip.inscribed_disk().intersect(&Region::Disk { center, radius })
            }
        }
    }
}

/// Radial smooth cutoff: `1` on `|z − c| ≤ r_plateau`, `0` on `|z − c| ≥ r_support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpCutoff {
    pub center: C64,
    pub r_plateau: f64,
    pub r_support: f64,
}

fn glue(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl BumpCutoff {
    pub fn new(center: C64, r_plateau: f64, r_support: f64) -> Result<Self, ParseError> {
        let b = BumpCutoff { center, r_plateau, r_support };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ParseError> {
        if !(self.r_plateau > 0.0 && self.r_plateau < self.r_support && self.r_support.is_finite()) {
            return Err(ParseError::Cutoff(format!(
                "need 0 < r_plateau < r_support, got {} and {}",
                self.r_plateau, self.r_support
            )));
        }
        Ok(())
    }

    pub fn value(&self, z: C64) -> f64 {
        let r = (z - self.center).norm();
        if r <= self.r_plateau {
            1.0
        } else if r >= self.r_support {
            0.0
        } else {
            let a = glue(self.r_support - r);
            a / (a + glue(r - self.r_plateau))
        }
    }

    pub fn in_plateau(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.r_plateau
    }

    pub fn outside(&self, z: C64) -> bool {
        (z - self.center).norm() >= self.r_support
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::around(self.center, self.r_support)
    }

    /// Jet of `s ↦ bump(√s)` at `s0` in the transition zone.
    fn radial_jet(&self, s0: C64, order: usize) -> Result<Jet1, JetError> {
        let s = Jet1::identity(C64::new(s0.re, 0.0), order);
        let t = s.sqrt()?;
        let a = t.scale(C64::new(-1.0, 0.0)).add_constant(C64::new(self.r_support, 0.0));
        let b = t.add_constant(C64::new(-self.r_plateau, 0.0));
        let ga = a.recip()?.scale(C64::new(-1.0, 0.0)).exp();
        let gb = b.recip()?.scale(C64::new(-1.0, 0.0)).exp();
        let phi = ga.mul(&ga.add(&gb)?.recip()?)?;
        Ok(Jet1::new(s0, phi.coeffs().to_vec()))
    }
}

/// Expression nodes. Products evaluate left to right and stop at the first
/// exact zero, so compactly supported factors guard the factors after them.
pub enum Expr {
    Const(C64),
    Z,
    Zbar,
    Add(Vec<Arc<Expr>>),
    Mul(Vec<Arc<Expr>>),
    Pow(Arc<Expr>, u32),
    RecipAffine { c: C64, d: C64 },
    Recip(Arc<Expr>),
    Bump(BumpCutoff),
    /// `inner ∘ map`.
    Pullback(Arc<Expr>, Arc<ConformalMap>),
    /// `∂_z^p ∂_z̄^q inner`.
    Deriv { p: usize, q: usize, inner: Arc<Expr> },
    /// `map^(k)(z)`, or its complex conjugate.
    MapDeriv { map: Arc<ConformalMap>, k: usize, conj: bool },
    /// `map''(z) / map'(z)`.
    MapLogDeriv(Arc<ConformalMap>),
    /// `ln |map'(z)|²`.
    MapLogAbsSq(Arc<ConformalMap>),
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_prefix() {
            Some(s) => write!(f, "{s}"),
            None => write!(f, "<derived>"),
        }
    }
}

/// Options for jet evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetOpts {
    /// Reject evaluation points inside bump transition zones.
    pub strict: bool,
    pub glue_order: usize,
}

impl Default for JetOpts {
    fn default() -> Self {
        JetOpts { strict: false, glue_order: DEFAULT_GLUE_ORDER }
    }
}

struct Env {
    z: Jet2,
    zb: Jet2,
    identity: bool,
}

impl Env {
    fn at(z0: C64, order: usize) -> Env {
        Env { z: Jet2::var_z(z0, order), zb: Jet2::var_zbar(z0, order), identity: true }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn pole_or(e: JetError, z: C64) -> ExprError {
    match e {
        JetError::ZeroConstant => ExprError::Pole(z),
        other => ExprError::Jet(other),
    }
}

impl Expr {
    pub fn eval(&self, z: C64) -> Result<C64, ExprError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Z => z,
            Expr::Zbar => z.conj(),
            Expr::Add(terms) => {
                let mut acc = C64::new(0.0, 0.0);
                for t in terms {
                    acc += t.eval(z)?;
                }
                acc
            }
            Expr::Mul(factors) => {
                let mut acc = C64::new(1.0, 0.0);
                for f in factors {
                    let v = f.eval(z)?;
                    if v == C64::new(0.0, 0.0) {
                        return Ok(v);
                    }
                    acc *= v;
                }
                acc
            }
            Expr::Pow(inner, k) => inner.eval(z)?.powu(*k),
            Expr::RecipAffine { c, d } => {
                let den = c * z + d;
                if den == C64::new(0.0, 0.0) {
                    return Err(ExprError::Pole(z));
                }
                1.0 / den
            }
            Expr::Recip(inner) => {
                let v = inner.eval(z)?;
                if v == C64::new(0.0, 0.0) {
                    return Err(ExprError::Pole(z));
                }
                1.0 / v
            }
            Expr::Bump(b) => C64::new(b.value(z), 0.0),
            Expr::Pullback(inner, map) => inner.eval(map.eval(z)?)?,
            Expr::Deriv { p, q, inner } => {
                let j = inner.jet_in(&Env::at(z, p + q), p + q, &JetOpts::default())?;
                j.coeff(*p, *q) * (factorial(*p) * factorial(*q))
            }
            Expr::MapDeriv { map, k, conj } => {
                let v = map.derivative(z, *k)?;
                if *conj {
                    v.conj()
                } else {
                    v
                }
            }
            Expr::MapLogDeriv(map) => map.derivative(z, 2)? / map.derivative(z, 1)?,
            Expr::MapLogAbsSq(map) => C64::new(map.derivative(z, 1)?.norm_sqr().ln(), 0.0),
        })
    }

    fn jet_in(&self, env: &Env, k: usize, opts: &JetOpts) -> Result<Jet2, ExprError> {
        let base = env.z.base();
        Ok(match self {
            Expr::Const(c) => Jet2::constant(base, *c, k),
            Expr::Z => env.z.clone(),
            Expr::Zbar => env.zb.clone(),
            Expr::Add(terms) => {
                let mut acc = Jet2::zero(base, k);
                for t in terms {
                    acc = acc.add(&t.jet_in(env, k, opts)?)?;
                }
                acc
            }
            Expr::Mul(factors) => {
                let mut acc: Option<Jet2> = None;
                for f in factors {
                    let j = f.jet_in(env, k, opts)?;
                    if j.is_zero() {
                        return Ok(j);
                    }
                    acc = Some(match acc {
                        None => j,
                        Some(a) => a.mul_unchecked(&j),
                    });
                }
                acc.unwrap_or_else(|| Jet2::constant(base, C64::new(1.0, 0.0), k))
            }
            Expr::Pow(inner, n) => inner.jet_in(env, k, opts)?.powi(*n),
            Expr::RecipAffine { c, d } => env.z.scale(*c).add_constant(*d).recip().map_err(|e| pole_or(e, env.z.value()))?,
            Expr::Recip(inner) => inner.jet_in(env, k, opts)?.recip().map_err(|e| pole_or(e, env.z.value()))?,
            Expr::Bump(b) => {
                let zc = env.z.add_constant(-b.center);
                let zbc = env.zb.add_constant(-b.center.conj());
                let s = zc.mul_unchecked(&zbc);
                let s0 = s.value();
                let r = s0.re.max(0.0).sqrt();
                if r <= b.r_plateau {
                    Jet2::constant(base, C64::new(1.0, 0.0), k)
                } else if r >= b.r_support {
                    Jet2::zero(base, k)
                } else if opts.strict {
                    return Err(ExprError::PlateauViolation(env.z.value()));
                } else if k > opts.glue_order {
                    return Err(ExprError::UnsupportedOrder { order: k, max: opts.glue_order });
                } else {
                    s.compose_univariate(&b.radial_jet(s0, k)?)?
                }
            }
            Expr::Pullback(inner, map) => {
                let z0 = env.z.value();
                let gj = map.jet(z0, k)?;
                let nz = env.z.compose_univariate(&gj)?;
                let nzb = env.zb.compose_univariate(&gj.conj())?;
                inner.jet_in(&Env { z: nz, zb: nzb, identity: false }, k, opts)?
            }
            Expr::Deriv { p, q, inner } => {
                let w0 = env.z.value();
                let n = k + p + q;
                let mut g = inner.jet_in(&Env::at(w0, n), n, opts)?;
                for _ in 0..*p {
                    g = g.d_z();
                }
                for _ in 0..*q {
                    g = g.d_zbar();
                }
                if env.identity {
                    g
                } else {
                    let alpha = env.z.add_constant(-w0);
                    let beta = env.zb.add_constant(-w0.conj());
                    Jet2::compose_bivariate(&g, &alpha, &beta)?
                }
            }
            Expr::MapDeriv { map, k: kd, conj } => {
                let mut j = map.jet(env.z.value(), k + kd)?;
                for _ in 0..*kd {
                    j = j.derivative();
                }
                if *conj {
                    env.zb.compose_univariate(&j.conj())?
                } else {
                    env.z.compose_univariate(&j)?
                }
            }
            Expr::MapLogDeriv(map) => {
                let z0 = env.z.value();
                let j1 = map.jet(z0, k + 2)?.derivative();
                let j2 = j1.derivative();
                let ratio = j2.mul(&j1.truncate(k).recip().map_err(|e| pole_or(e, z0))?)?;
                env.z.compose_univariate(&ratio)?
            }
            Expr::MapLogAbsSq(map) => {
                let z0 = env.z.value();
                let l = map.jet(z0, k + 1)?.derivative().ln().map_err(|e| pole_or(e, z0))?;
                env.z.compose_univariate(&l)?.add(&env.zb.compose_univariate(&l.conj())?)?
            }
        })
    }

    /// Prefix form for nodes of the configuration grammar.
    pub fn to_prefix(&self) -> Option<String> {
        Some(match self {
            Expr::Const(c) => fmt_complex(*c),
            Expr::Z => "z".into(),
            Expr::Zbar => "zbar".into(),
            Expr::Add(ts) => format!("(+ {})", join_prefix(ts)?),
            Expr::Mul(ts) => format!("(* {})", join_prefix(ts)?),
            Expr::Pow(e, k) => format!("(^ {} {k})", e.to_prefix()?),
            Expr::RecipAffine { c, d } => format!("(recip_affine {} {})", fmt_complex(*c), fmt_complex(*d)),
            Expr::Recip(e) => format!("(recip {})", e.to_prefix()?),
            Expr::Bump(b) => format!("(bump {} {} {} {})", b.center.re, b.center.im, b.r_plateau, b.r_support),
            _ => return None,
        })
    }
}

fn join_prefix(ts: &[Arc<Expr>]) -> Option<String> {
    let parts: Option<Vec<String>> = ts.iter().map(|t| t.to_prefix()).collect();
    Some(parts?.join(" "))
}

fn fmt_complex(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("(c {} {})", c.re, c.im)
    }
}

/// A closed-form smooth function of `(z, z̄)` with a conservative support box.
#[derive(Clone)]
pub struct ScalarField {
    expr: Arc<Expr>,
    support: Support,
    /// Box outside which the field is locally constant; bounds derivatives,
    /// so `1 − f` with compact `f` still has compactly supported derivatives.
    varying: Support,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.expr)
    }
}

impl ScalarField {
    fn from_parts(expr: Expr, support: Support) -> Self {
        ScalarField::from_arc(Arc::new(expr), support, support)
    }

    fn from_arc(expr: Arc<Expr>, support: Support, varying: Support) -> Self {
        if support == Support::Empty {
            return ScalarField::zero();
        }
        let varying = if matches!(*expr, Expr::Const(_)) { Support::Empty } else { varying.intersect(&support) };
        ScalarField { expr, support, varying }
    }

    pub fn constant(c: C64) -> Self {
        let support = if c == C64::new(0.0, 0.0) { Support::Empty } else { Support::Unbounded };
        ScalarField { expr: Arc::new(Expr::Const(c)), support, varying: Support::Empty }
    }

    pub fn real(x: f64) -> Self {
        ScalarField::constant(C64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        ScalarField { expr: Arc::new(Expr::Const(C64::new(0.0, 0.0))), support: Support::Empty, varying: Support::Empty }
    }

    pub fn one() -> Self {
        ScalarField::real(1.0)
    }

    pub fn z() -> Self {
        ScalarField::from_parts(Expr::Z, Support::Unbounded)
    }

    pub fn zbar() -> Self {
        ScalarField::from_parts(Expr::Zbar, Support::Unbounded)
    }

    pub fn bump(b: BumpCutoff) -> Self {
        ScalarField::from_parts(Expr::Bump(b), Support::Bounded(b.bounds()))
    }

    pub fn recip_affine(c: C64, d: C64) -> Self {
        ScalarField::from_parts(Expr::RecipAffine { c, d }, Support::Unbounded)
    }

    /// `cutoff · expr`, with the cutoff evaluated first.
    pub fn with_cutoff(&self, cutoff: Option<BumpCutoff>) -> Self {
        match cutoff {
            Some(b) => ScalarField::bump(b).mul(self),
            None => self.clone(),
        }
    }

    pub fn expr(&self) -> &Arc<Expr> {
        &self.expr
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support == Support::Empty
    }

    pub fn as_const(&self) -> Option<C64> {
        match *self.expr {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let mut terms = Vec::new();
        let mut constant = C64::new(0.0, 0.0);
        for f in [self, other] {
            match &*f.expr {
                Expr::Add(ts) => {
                    for t in ts {
                        match **t {
                            Expr::Const(c) => constant += c,
                            _ => terms.push(t.clone()),
                        }
                    }
                }
                Expr::Const(c) => constant += c,
                _ => terms.push(f.expr.clone()),
            }
        }
        if constant != C64::new(0.0, 0.0) {
            terms.push(Arc::new(Expr::Const(constant)));
        }
        let support = self.support.union(&other.support);
        let varying = self.varying.union(&other.varying);
        match terms.len() {
            0 => ScalarField::zero(),
            1 => ScalarField::from_arc(terms.pop().unwrap(), support, varying),
            _ => ScalarField::from_arc(Arc::new(Expr::Add(terms)), support, varying),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ScalarField {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> ScalarField {
        self.mul(&ScalarField::constant(c))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let support = self.support.intersect(&other.support);
        if support == Support::Empty {
            return ScalarField::zero();
        }
        let mut factors = Vec::new();
        let mut constant = C64::new(1.0, 0.0);
        for f in [self, other] {
            match &*f.expr {
                Expr::Mul(ts) => {
                    for t in ts {
                        match **t {
                            Expr::Const(c) => constant *= c,
                            _ => factors.push(t.clone()),
                        }
                    }
                }
                Expr::Const(c) => constant *= c,
                _ => factors.push(f.expr.clone()),
            }
        }
        if constant == C64::new(0.0, 0.0) {
            return ScalarField::zero();
        }
        if factors.is_empty() {
            return ScalarField::constant(constant);
        }
        if constant != C64::new(1.0, 0.0) {
            factors.push(Arc::new(Expr::Const(constant)));
        }
        let varying = self.varying.union(&other.varying);
        if factors.len() == 1 {
            return ScalarField::from_arc(factors.pop().unwrap(), support, varying);
        }
        ScalarField::from_arc(Arc::new(Expr::Mul(factors)), support, varying)
    }

    pub fn powi(&self, k: u32) -> ScalarField {
        if k == 0 {
            return ScalarField::one();
        }
        if k == 1 || self.is_zero() {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            return ScalarField::constant(c.powu(k));
        }
        ScalarField::from_arc(Arc::new(Expr::Pow(self.expr.clone(), k)), self.support, self.varying)
    }

    pub fn recip(&self) -> ScalarField {
        if let Some(c) = self.as_const() {
            if c != C64::new(0.0, 0.0) {
                return ScalarField::constant(1.0 / c);
            }
        }
        ScalarField::from_arc(Arc::new(Expr::Recip(self.expr.clone())), Support::Unbounded, self.varying)
    }

    /// `z ↦ self(map(z))`.
    pub fn pullback(&self, map: &Arc<ConformalMap>) -> ScalarField {
        if self.is_zero() || self.as_const().is_some() || map.is_plain_identity() {
            return self.clone();
        }
        let support = map.preimage_support(&self.support);
        let varying = map.preimage_support(&self.varying);
        ScalarField::from_arc(Arc::new(Expr::Pullback(self.expr.clone(), map.clone())), support, varying)
    }

    /// `∂_z^p ∂_z̄^q self`.
    pub fn deriv(&self, p: usize, q: usize) -> ScalarField {
        if p + q == 0 {
            return self.clone();
        }
        if self.is_zero() || self.as_const().is_some() {
            return ScalarField::zero();
        }
        match &*self.expr {
            Expr::Z => {
                return if (p, q) == (1, 0) { ScalarField::one() } else { ScalarField::zero() };
            }
            Expr::Zbar => {
                return if (p, q) == (0, 1) { ScalarField::one() } else { ScalarField::zero() };
            }
            Expr::Deriv { p: p0, q: q0, inner } => {
                return ScalarField::from_parts(Expr::Deriv { p: p + p0, q: q + q0, inner: inner.clone() }, self.varying);
            }
            _ => {}
        }
        ScalarField::from_parts(Expr::Deriv { p, q, inner: self.expr.clone() }, self.varying)
    }

    pub fn d_z(&self) -> ScalarField {
        self.deriv(1, 0)
    }

    pub fn d_zbar(&self) -> ScalarField {
        self.deriv(0, 1)
    }

    fn map_support(map: &ConformalMap) -> Support {
        map.domain().support()
    }

    /// `map^(k)(z)` or its conjugate.
    pub fn map_derivative(map: &Arc<ConformalMap>, k: usize, conj: bool) -> ScalarField {
        if let Some(c) = map.constant_derivative(k) {
            return ScalarField::constant(if conj { c.conj() } else { c });
        }
        ScalarField::from_parts(Expr::MapDeriv { map: map.clone(), k, conj }, Self::map_support(map))
    }

    /// `map''/map'`.
    pub fn map_log_derivative(map: &Arc<ConformalMap>) -> ScalarField {
        if map.constant_derivative(2) == Some(C64::new(0.0, 0.0)) {
            return ScalarField::zero();
        }
        ScalarField::from_parts(Expr::MapLogDeriv(map.clone()), Self::map_support(map))
    }

    /// `ln |map'|²`.
    pub fn map_log_abs_sq(map: &Arc<ConformalMap>) -> ScalarField {
        if let Some(c) = map.constant_derivative(1) {
            return ScalarField::real(c.norm_sqr().ln());
        }
        ScalarField::from_parts(Expr::MapLogAbsSq(map.clone()), Self::map_support(map))
    }

    pub fn eval(&self, z: C64) -> Result<C64, ExprError> {
        if !self.support.may_contain(z) {
            return Ok(C64::new(0.0, 0.0));
        }
        self.expr.eval(z)
    }

    /// Coefficients `∂_z^p ∂_z̄^q f(z0) / (p! q!)` for `p + q ≤ order`.
    pub fn jet2(&self, z0: C64, order: usize) -> Result<Jet2, ExprError> {
        self.jet2_with(z0, order, &JetOpts::default())
    }

    pub fn jet2_with(&self, z0: C64, order: usize, opts: &JetOpts) -> Result<Jet2, ExprError> {
        if !self.support.may_contain(z0) {
            return Ok(Jet2::zero(z0, order));
        }
        self.expr.jet_in(&Env::at(z0, order), order, opts)
    }

    pub fn to_prefix(&self) -> Option<String> {
        self.expr.to_prefix()
    }

    pub fn parse(src: &str) -> Result<ScalarField, ParseError> {
        let tokens = tokenize(src);
        let mut pos = 0;
        let f = parse_node(&tokens, &mut pos)?;
        if let Some((tok, off)) = tokens.get(pos) {
            return Err(ParseError::Unexpected { token: tok.clone(), offset: *off });
        }
        Ok(f)
    }
}

/// Configuration form of a scalar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<BumpCutoff>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<ScalarField, ParseError> {
        if let Some(c) = &self.cutoff {
            c.validate()?;
        }
        Ok(ScalarField::parse(&self.expr)?.with_cutoff(self.cutoff))
    }
}

fn tokenize(src: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push((std::mem::take(&mut cur), start));
                }
                out.push((ch.to_string(), i));
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push((std::mem::take(&mut cur), start));
                }
            }
            c => {
                if cur.is_empty() {
                    start = i;
                }
                cur.push(c);
            }
        }
    }
    if !cur.is_empty() {
        out.push((cur, start));
    }
    out
}

fn parse_number(tok: &str) -> Option<C64> {
    match tok {
        "i" => Some(C64::new(0.0, 1.0)),
        _ => tok.parse::<f64>().ok().map(|x| C64::new(x, 0.0)),
    }
}

fn expect_const(f: &ScalarField, op: &str) -> Result<C64, ParseError> {
    f.as_const()
        .or_else(|| f.is_zero().then_some(C64::new(0.0, 0.0)))
        .ok_or_else(|| ParseError::UnknownOp(format!("{op} needs constant arguments")))
}

fn parse_node(tokens: &[(String, usize)], pos: &mut usize) -> Result<ScalarField, ParseError> {
    let (tok, off) = tokens.get(*pos).ok_or(ParseError::Eof)?;
    *pos += 1;
    if tok == ")" {
        return Err(ParseError::Unexpected { token: tok.clone(), offset: *off });
    }
    if tok != "(" {
        return match tok.as_str() {
            "z" => Ok(ScalarField::z()),
            "zbar" => Ok(ScalarField::zbar()),
            t => parse_number(t).map(ScalarField::constant).ok_or(ParseError::Unexpected { token: t.into(), offset: *off }),
        };
    }
    let (op, _) = tokens.get(*pos).ok_or(ParseError::Eof)?.clone();
    *pos += 1;
    // Raw numeric arguments are kept as strings for the integer exponent.
    let mut args = Vec::new();
    let mut raw = Vec::new();
    loop {
        let (t, _) = tokens.get(*pos).ok_or(ParseError::Eof)?;
        if t == ")" {
            *pos += 1;
            break;
        }
        raw.push(t.clone());
        args.push(parse_node(tokens, pos)?);
    }
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(ParseError::Arity { op: op.clone(), got: args.len() })
        }
    };
    match op.as_str() {
        "+" => Ok(args.iter().fold(ScalarField::zero(), |acc, a| acc.add(a))),
        "*" => Ok(args.iter().fold(ScalarField::one(), |acc, a| acc.mul(a))),
        "-" => match args.len() {
            1 => Ok(args[0].neg()),
            2 => Ok(args[0].sub(&args[1])),
            n => Err(ParseError::Arity { op, got: n }),
        },
        "^" => {
            arity(2)?;
            let k: u32 = raw[1].parse().map_err(|_| ParseError::Unexpected { token: raw[1].clone(), offset: 0 })?;
            Ok(args[0].powi(k))
        }
        "c" => {
            arity(2)?;
            let re = expect_const(&args[0], "c")?;
            let im = expect_const(&args[1], "c")?;
            Ok(ScalarField::constant(re + im * C64::new(0.0, 1.0)))
        }
        "recip_affine" => {
            arity(2)?;
            Ok(ScalarField::recip_affine(expect_const(&args[0], &op)?, expect_const(&args[1], &op)?))
        }
        "recip" => {
            arity(1)?;
            Ok(args[0].recip())
        }
        "bump" => {
            arity(4)?;
            let v: Result<Vec<f64>, ParseError> = args.iter().map(|a| expect_const(a, "bump").map(|c| c.re)).collect();
            let v = v?;
            Ok(ScalarField::bump(BumpCutoff::new(C64::new(v[0], v[1]), v[2], v[3])?))
        }
        other => Err(ParseError::UnknownOp(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::ConformalMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bump(rp: f64, rs: f64) -> ScalarField {
        ScalarField::bump(BumpCutoff::new(c(0.0, 0.0), rp, rs).unwrap())
    }

    #[test]
    fn eval_examples() {
        let f = ScalarField::z().mul(&ScalarField::zbar());
        assert_eq!(f.eval(c(1.0, 1.0)).unwrap(), c(2.0, 0.0));
        let b = bump(1.0, 2.0);
        assert_eq!(b.eval(c(0.5, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(b.eval(c(3.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn jet_examples() {
        let f = ScalarField::z().mul(&ScalarField::zbar());
        let j = f.jet2(c(0.0, 0.0), 2).unwrap();
        for d in 0..=2 {
            for q in 0..=d {
                let want = if (d - q, q) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(j.coeff(d - q, q), c(want, 0.0));
            }
        }
        let g = ScalarField::parse("(* (+ 5 (* 3 z)) (bump 0 0 1 2))").unwrap();
        let j = g.jet2(c(0.0, 0.0), 1).unwrap();
        assert_eq!(j.coeff(0, 0), c(5.0, 0.0));
        assert_eq!(j.coeff(1, 0), c(3.0, 0.0));
        assert_eq!(j.coeff(0, 1), c(0.0, 0.0));
    }

    /// Richardson-extrapolated central differences in x and y.
    fn fd_oracle(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64) -> [f64; 5] {
        let d = |h: f64| {
            let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
            let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
            let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
            [fx, fy, fxx, fyy, fxy]
        };
        let a = d(1e-4);
        let b = d(2e-4);
        let mut out = [0.0; 5];
        for i in 0..5 {
            out[i] = (4.0 * a[i] - b[i]) / 3.0;
        }
        out
    }

    #[test]
    fn transition_zone_jet_matches_finite_differences() {
        let b = BumpCutoff::new(c(0.0, 0.0), 1.0, 2.0).unwrap();
        let f = ScalarField::bump(b);
        let z0 = c(1.5, 0.0);
        let j = f.jet2(z0, 2).unwrap();
        let [fx, fy, fxx, fyy, fxy] = fd_oracle(&|x, y| b.value(c(x, y)), z0.re, z0.im);
        // ∂_z = (∂x − i∂y)/2, ∂_z̄ = (∂x + i∂y)/2
        let fz = c(fx, -fy) * 0.5;
        let fzb = c(fx, fy) * 0.5;
        let fzz = c(fxx - fyy, -2.0 * fxy) * 0.25;
        let fzzb = c(fxx + fyy, 0.0) * 0.25;
        assert!((j.coeff(1, 0) - fz).norm() < 1e-6);
        assert!((j.coeff(0, 1) - fzb).norm() < 1e-6);
        assert!((j.coeff(2, 0) * 2.0 - fzz).norm() < 1e-6);
        assert!((j.coeff(1, 1) - fzzb).norm() < 1e-6);
    }

    #[test]
    fn transition_zone_limits() {
        let f = bump(1.0, 2.0);
        assert!(matches!(f.jet2(c(1.5, 0.0), 9), Err(ExprError::UnsupportedOrder { order: 9, max: 8 })));
        let strict = JetOpts { strict: true, ..JetOpts::default() };
        assert!(matches!(f.jet2_with(c(1.5, 0.0), 1, &strict), Err(ExprError::PlateauViolation(_))));
        assert!(f.jet2_with(c(0.5, 0.0), 12, &strict).is_ok());
        assert!(f.jet2_with(c(2.5, 0.0), 12, &strict).unwrap().is_zero());
    }

    #[test]
    fn pullback_examples() {
        let dil = Arc::new(ConformalMap::affine(c(2.0, 0.0), c(0.0, 0.0)));
        let f = ScalarField::z().pullback(&dil);
        assert_eq!(f.eval(c(0.3, 0.1)).unwrap(), c(0.6, 0.2));
        let lam = c(0.5, 1.5);
        let g = ScalarField::z().mul(&ScalarField::zbar()).pullback(&Arc::new(ConformalMap::affine(lam, c(0.0, 0.0))));
        let z = c(0.7, -0.2);
        assert!((g.eval(z).unwrap() - z.norm_sqr() * lam.norm_sqr()).norm() < 1e-14);

        let m = Arc::new(ConformalMap::mobius(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).with_domain(Region::disk(c(0.0, 0.0), 0.5)));
        let b = BumpCutoff::new(c(0.1, 0.0), 0.1, 0.3).unwrap();
        let h = ScalarField::bump(b).pullback(&m);
        for k in 0..20 {
            let t = k as f64 / 20.0 * std::f64::consts::TAU;
            let z = C64::from_polar(0.45 * (k as f64 + 1.0) / 21.0, t);
            let direct = b.value(z / (1.0 + z));
            assert!((h.eval(z).unwrap() - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn support_tracking() {
        let f = bump(1.0, 2.0).mul(&ScalarField::z());
        assert_eq!(f.support(), Support::Bounded(Bounds::around(c(0.0, 0.0), 2.0)));
        let far = ScalarField::bump(BumpCutoff::new(c(10.0, 0.0), 1.0, 2.0).unwrap());
        assert!(f.mul(&far).is_zero());
        let shift = Arc::new(ConformalMap::affine(c(1.0, 0.0), c(10.0, 0.0)));
        // far ∘ shift is supported near 0
        assert!(!f.mul(&far.pullback(&shift)).is_zero());
    }

    #[test]
    fn parser_round_trip() {
        let src = "(+ (* (c 1 2) z zbar) (^ z 3) (recip_affine 1 3) (bump 0 0 1 2))";
        let f = ScalarField::parse(src).unwrap();
        let g = ScalarField::parse(&f.to_prefix().unwrap()).unwrap();
        let z = c(0.3, -0.4);
        assert_eq!(f.eval(z).unwrap(), g.eval(z).unwrap());
        assert!(ScalarField::parse("(foo z)").is_err());
        assert!(ScalarField::parse("(+ z").is_err());
        assert!(ScalarField::parse("(bump 0 0 2 1)").is_err());
    }

    #[test]
    fn pole_is_reported() {
        let f = ScalarField::recip_affine(c(1.0, 0.0), c(-1.0, 0.0));
        assert_eq!(f.eval(c(1.0, 0.0)), Err(ExprError::Pole(c(1.0, 0.0))));
    }

    #[test]
    fn region_intersections_are_inner() {
        let a = Region::disk(c(0.0, 0.0), 1.0);
        let b = Region::disk(c(1.0, 0.0), 1.0);
        let i = a.intersect(&b);
        for k in 0..50 {
            let z = C64::from_polar(0.999, k as f64);
            let w = match i {
                Region::Disk { center, radius } => center + (z * radius),
                _ => unreachable!(),
            };
            assert!(a.contains(w) || (w - c(0.0, 0.0)).norm() < 1.0 + 1e-12);
            assert!(b.contains(w) || (w - c(1.0, 0.0)).norm() < 1.0 + 1e-12);
        }
        let r = Region::rect(c(-1.0, -1.0), c(1.0, 1.0));
        assert!(matches!(r.intersect(&a), Region::Disk { .. }));
    }
}
