//! Conformal partial maps, discrete group actions and their automorphisms.
//!
//! Group elements are canonical [`Label`]s, never maps: two labels acting by
//! the same map stay distinct. The product `g·h` of labels acts by `g ∘ h`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Bounds, Region, Support};
use crate::jets::{Jet1, JetError, DEFAULT_JET_ORDER, DEFAULT_ZERO_THRESHOLD};

/// Largest finite fixed-point order handled by the trace.
pub const DEFAULT_N_MAX: usize = 8;

const NEWTON_GRID: usize = 32;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_ITERS: usize = 60;
const MERGE_TOL: f64 = 1e-9;
// Multiple polynomial roots only resolve to about eps^(1/m).
const CLUSTER_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-12;
const AMBIGUITY_FACTOR: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("point {0} is outside the map's domain")]
    OutsideDomain(C64),
    #[error("point {0} is a pole of the map")]
    Pole(C64),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("degenerate map: {0}")]
    Degenerate(String),
    #[error("map has no closed-form inverse")]
    NotInvertible,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("label {0} does not belong to this action")]
    ForeignLabel(String),
    #[error("fixed point {z0} has ambiguous order: {low} or {high}")]
    AmbiguousOrder { z0: C64, low: usize, high: usize },
    #[error("fixed point {z0} has order above the supported maximum {max}")]
    OrderTooHigh { z0: C64, max: usize },
    #[error("point {z0} is not a fixed point (residual {residual:e})")]
    NotFixed { z0: C64, residual: f64 },
    #[error("invalid group specification: {0}")]
    Spec(String),
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Identity,
    Affine { a: C64, b: C64 },
    Mobius { a: C64, b: C64, c: C64, d: C64 },
    /// Ascending coefficients, degree at least two.
    Poly(Vec<C64>),
    /// Stages applied first to last.
    Chain(Vec<ConformalMap>),
    /// `by ∘ inner ∘ by⁻¹`.
    Conjugated { inner: Box<ConformalMap>, by: Box<ConformalMap>, by_inv: Box<ConformalMap> },
}

/// A holomorphic map defined on `domain`.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    kind: MapKind,
    domain: Region,
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn cone() -> C64 {
    C64::new(1.0, 0.0)
}

fn small(x: C64, scale: f64) -> bool {
    x.norm() <= IDENTITY_TOL * scale.max(1.0)
}

fn eval_poly(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(czero(), |acc, c| acc * z + c)
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![czero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `outer(inner(z))`.
fn poly_compose(outer: &[C64], inner: &[C64]) -> Vec<C64> {
    let mut acc = vec![*outer.last().unwrap()];
    for c in outer.iter().rev().skip(1) {
        acc = poly_mul(&acc, inner);
        acc[0] += c;
    }
    acc
}

impl ConformalMap {
    pub fn identity() -> Self {
        ConformalMap { kind: MapKind::Identity, domain: Region::FullPlane }
    }

    pub fn affine(a: C64, b: C64) -> Self {
        ConformalMap { kind: MapKind::Affine { a, b }, domain: Region::FullPlane }
    }

    pub fn mobius(a: C64, b: C64, c: C64, d: C64) -> Self {
        ConformalMap { kind: MapKind::Mobius { a, b, c, d }, domain: Region::FullPlane }
    }

    /// Polynomial with ascending coefficients; degree ≤ 1 becomes affine.
    pub fn poly(coeffs: Vec<C64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == czero() {
            coeffs.pop();
        }
        match coeffs.len() {
            0 => ConformalMap::affine(czero(), czero()),
            1 => ConformalMap::affine(czero(), coeffs[0]),
            2 => ConformalMap::affine(coeffs[1], coeffs[0]),
            _ => ConformalMap { kind: MapKind::Poly(coeffs), domain: Region::FullPlane },
        }
    }

    pub fn with_domain(mut self, domain: Region) -> Self {
        self.domain = domain;
        self
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if let MapKind::Mobius { a, b, c, d } = self.kind {
            if a * d - b * c == czero() {
                return Err(MapError::Degenerate("Möbius determinant vanishes".into()));
            }
        }
        if let MapKind::Affine { a, .. } = self.kind {
            if a == czero() {
                return Err(MapError::Degenerate("affine map with zero slope".into()));
            }
        }
        self.domain.validate().map_err(MapError::Degenerate)
    }

    /// `(a, b, c, d)` for maps in the Möbius family.
    pub fn matrix(&self) -> Option<[C64; 4]> {
        match self.kind {
            MapKind::Identity => Some([cone(), czero(), czero(), cone()]),
            MapKind::Affine { a, b } => Some([a, b, czero(), cone()]),
            MapKind::Mobius { a, b, c, d } => Some([a, b, c, d]),
            _ => None,
        }
    }

    pub fn is_plain_identity(&self) -> bool {
        matches!(self.kind, MapKind::Identity) && self.domain == Region::FullPlane
    }

    /// `g^(k)` when it is constant in `z`.
    pub fn constant_derivative(&self, k: usize) -> Option<C64> {
        match self.kind {
            MapKind::Identity if k >= 1 => Some(if k == 1 { cone() } else { czero() }),
            MapKind::Affine { a, .. } if k >= 1 => Some(if k == 1 { a } else { czero() }),
            MapKind::Mobius { a, c, d, .. } if k >= 1 && c == czero() => Some(if k == 1 { a / d } else { czero() }),
            _ => None,
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64, MapError> {
        if !self.domain.contains(z) {
            return Err(MapError::OutsideDomain(z));
        }
        self.eval_kind(z)
    }

    fn eval_kind(&self, z: C64) -> Result<C64, MapError> {
        Ok(match &self.kind {
            MapKind::Identity => z,
            MapKind::Affine { a, b } => a * z + b,
            MapKind::Mobius { a, b, c, d } => {
                let den = c * z + d;
                if den == czero() {
                    return Err(MapError::Pole(z));
                }
                (a * z + b) / den
            }
            MapKind::Poly(cs) => eval_poly(cs, z),
            MapKind::Chain(stages) => {
                let mut w = z;
                for s in stages {
                    w = s.eval(w)?;
                }
                w
            }
            MapKind::Conjugated { inner, by, by_inv } => by.eval(inner.eval(by_inv.eval(z)?)?)?,
        })
    }

    /// Taylor coefficients `g(z0), g'(z0), g''(z0)/2!, …` to order `k`.
    pub fn jet(&self, z0: C64, k: usize) -> Result<Jet1, MapError> {
        if !self.domain.contains(z0) {
            return Err(MapError::OutsideDomain(z0));
        }
        let id = Jet1::identity(z0, k);
        Ok(match &self.kind {
            MapKind::Identity => id,
            MapKind::Affine { a, b } => id.scale(*a).add_constant(*b),
            MapKind::Mobius { a, b, c, d } => {
                let den = id.scale(*c).add_constant(*d);
                if den.value() == czero() {
                    return Err(MapError::Pole(z0));
                }
                id.scale(*a).add_constant(*b).mul(&den.recip()?)?
            }
            MapKind::Poly(cs) => {
                let mut acc = Jet1::constant(z0, *cs.last().unwrap(), k);
                for c in cs.iter().rev().skip(1) {
                    acc = acc.mul(&id)?.add_constant(*c);
                }
                acc
            }
            MapKind::Chain(stages) => {
                let mut j = id;
                for s in stages {
                    j = Jet1::compose(&s.jet(j.value(), k)?, &j)?;
                }
                j
            }
            MapKind::Conjugated { inner, by, by_inv } => {
                let j = by_inv.jet(z0, k)?;
                let j = Jet1::compose(&inner.jet(j.value(), k)?, &j)?;
                Jet1::compose(&by.jet(j.value(), k)?, &j)?
            }
        })
    }

    /// `g^(k)(z)`.
    pub fn derivative(&self, z: C64, k: usize) -> Result<C64, MapError> {
        let j = self.jet(z, k)?;
        Ok(j.coeff(k) * (1..=k).map(|i| i as f64).product::<f64>())
    }

    /// Closed-form inverse for Möbius-family maps, defined on the image of the domain.
    pub fn inverse(&self) -> Option<ConformalMap> {
        let domain = self.image_region(&self.domain);
        let kind = match self.kind {
            MapKind::Identity => MapKind::Identity,
            MapKind::Affine { a, b } => {
                if a == czero() {
                    return None;
                }
                MapKind::Affine { a: 1.0 / a, b: -b / a }
            }
            MapKind::Mobius { a, b, c, d } => MapKind::Mobius { a: d, b: -b, c: -c, d: a },
            MapKind::Conjugated { ref inner, ref by, ref by_inv } => MapKind::Conjugated {
                inner: Box::new(inner.inverse()?),
                by: by.clone(),
                by_inv: by_inv.clone(),
            },
            _ => return None,
        };
        Some(ConformalMap { kind, domain })
    }

    /// Inner approximation of the image of `region` under a Möbius-family map.
    /// Other maps yield `Empty`.
    pub fn image_region(&self, region: &Region) -> Region {
        let Some([a, b, c, d]) = self.matrix() else {
            return match region {
                Region::FullPlane if !matches!(self.kind, MapKind::Poly(_) | MapKind::Chain(_)) => Region::FullPlane,
                _ => Region::Empty,
            };
        };
        let m = |z: C64| (a * z + b) / (c * z + d);
        match region.inscribed_disk() {
            Region::FullPlane => Region::FullPlane,
            Region::Empty => Region::Empty,
            Region::Disk { center, radius } => {
                if c == czero() {
                    return Region::disk(m(center), radius * (a / d).norm());
                }
                let pole = -d / c;
                let off = pole - center;
                if off.norm() <= radius {
                    return Region::Empty;
                }
                let u = if off.norm() > 0.0 { off / off.norm() } else { cone() };
                let w1 = m(center + u * radius);
                let w2 = m(center - u * radius);
                Region::disk((w1 + w2) * 0.5, (w1 - w2).norm() * 0.5)
            }
            Region::Rect { .. } => unreachable!("inscribed_disk never returns a rect"),
        }
    }

    /// Conservative bounding box of `{z ∈ Dom : g(z) ∈ support}`.
    pub fn preimage_support(&self, s: &Support) -> Support {
        let dom = self.domain.support();
        let pre = match (s, &self.kind) {
            (Support::Empty, _) => Support::Empty,
            (Support::Unbounded, _) => Support::Unbounded,
            (_, MapKind::Identity) => *s,
            (_, MapKind::Chain(stages)) => stages.iter().rev().fold(*s, |acc, st| st.preimage_support(&acc)),
            (_, MapKind::Conjugated { inner, by, by_inv }) => {
                by_inv.preimage_support(&inner.preimage_support(&by.preimage_support(s)))
            }
            (Support::Bounded(bx), _) => match self.inverse_unrestricted() {
                Some(inv) => inv.image_bounds(bx),
                None => Support::Unbounded,
            },
        };
        pre.intersect(&dom)
    }

    fn inverse_unrestricted(&self) -> Option<ConformalMap> {
        let mut inv = ConformalMap { kind: self.kind.clone(), domain: Region::FullPlane }.inverse()?;
        inv.domain = Region::FullPlane;
        Some(inv)
    }

    /// Bounding box of the image of a box under a Möbius-family map.
    fn image_bounds(&self, bx: &Bounds) -> Support {
        let Some([a, b, c, d]) = self.matrix() else {
            return Support::Unbounded;
        };
        let m = |z: C64| (a * z + b) / (c * z + d);
        if c == czero() {
            let pts: Vec<C64> = bx.corners().iter().map(|z| m(*z)).collect();
            return Bounds::from_points(&pts).map_or(Support::Empty, Support::Bounded);
        }
        let center = bx.center();
        let radius = bx.circumradius() * (1.0 + 1e-12);
        match self.image_region(&Region::disk(center, radius)) {
            Region::Disk { center, radius } => Support::Bounded(Bounds::around(center, radius * (1.0 + 1e-12))),
            _ => Support::Unbounded,
        }
    }

    /// `self ∘ inner`, defined on `Dom(inner) ∩ inner⁻¹(Dom(self))` (inner approximation).
    pub fn compose(&self, inner: &ConformalMap) -> ConformalMap {
        let pre = match inner.inverse_unrestricted() {
            Some(inv) => inv.image_region(&self.domain),
            None if self.domain == Region::FullPlane => Region::FullPlane,
            None => inner.domain,
        };
        let domain = inner.domain.intersect(&pre);
        if inner.is_plain_identity() {
            return self.clone().with_domain(self.domain.intersect(&inner.domain));
        }
        if matches!(self.kind, MapKind::Identity) {
            return inner.clone().with_domain(domain);
        }
        let kind = match (&self.kind, &inner.kind) {
            (MapKind::Affine { a, b }, MapKind::Affine { a: c, b: d }) => MapKind::Affine { a: a * c, b: a * d + b },
            (MapKind::Poly(p), _) | (_, MapKind::Poly(p)) if self.poly_coeffs().is_some() && inner.poly_coeffs().is_some() => {
                let _ = p;
                let composed = poly_compose(&self.poly_coeffs().unwrap(), &inner.poly_coeffs().unwrap());
                return ConformalMap::poly(composed).with_domain(domain);
            }
            _ => match (self.matrix(), inner.matrix()) {
                (Some([a, b, c, d]), Some([e, f, g, h])) => {
                    MapKind::Mobius { a: a * e + b * g, b: a * f + b * h, c: c * e + d * g, d: c * f + d * h }
                }
                _ => {
                    let mut stages = inner.stages();
                    stages.extend(self.stages());
                    MapKind::Chain(stages)
                }
            },
        };
        ConformalMap { kind, domain }
    }

    fn poly_coeffs(&self) -> Option<Vec<C64>> {
        match &self.kind {
            MapKind::Identity => Some(vec![czero(), cone()]),
            MapKind::Affine { a, b } => Some(vec![*b, *a]),
            MapKind::Poly(cs) => Some(cs.clone()),
            _ => None,
        }
    }

    fn stages(&self) -> Vec<ConformalMap> {
        match &self.kind {
            MapKind::Chain(s) => s.clone(),
            _ => vec![self.clone()],
        }
    }

    /// `by ∘ self ∘ by⁻¹` with fixed points transported exactly.
    pub fn conjugate_by(&self, by: &ConformalMap) -> Result<ConformalMap, MapError> {
        let by_inv = by.inverse_unrestricted().ok_or(MapError::NotInvertible)?;
        let by_full = by.clone().with_domain(Region::FullPlane);
        let domain = by.image_region(&self.domain);
        Ok(ConformalMap {
            kind: MapKind::Conjugated { inner: Box::new(self.clone()), by: Box::new(by_full), by_inv: Box::new(by_inv) },
            domain,
        })
    }

    /// Whether the map is the identity on its domain.
    pub fn is_identity_germ(&self) -> bool {
        match &self.kind {
            MapKind::Identity => true,
            MapKind::Affine { a, b } => small(a - cone(), 1.0) && small(*b, 1.0),
            MapKind::Mobius { a, b, c, d } => {
                let s = a.norm().max(d.norm());
                small(*b, s) && small(*c, s) && small(a - d, s)
            }
            MapKind::Poly(cs) => cs.iter().enumerate().all(|(i, c)| small(if i == 1 { c - cone() } else { *c }, 1.0)),
            MapKind::Chain(_) => {
                let probe = match self.domain {
                    Region::Disk { center, .. } => center,
                    Region::Rect { lo, hi } => (lo + hi) * 0.5,
                    _ => czero(),
                };
                match self.jet(probe, DEFAULT_JET_ORDER) {
                    Ok(j) => j.sub(&Jet1::identity(probe, DEFAULT_JET_ORDER)).map(|d| d.valuation(DEFAULT_ZERO_THRESHOLD).is_none()).unwrap_or(false),
                    Err(_) => false,
                }
            }
            MapKind::Conjugated { inner, .. } => inner.is_identity_germ(),
        }
    }

    /// Solutions of `g(z) = z` inside `within ∩ Dom(g)`.
    pub fn fixed_points(&self, within: &Region) -> Result<Vec<C64>, MapError> {
        let region = self.domain.intersect(within);
        let keep = |pts: Vec<C64>| -> Vec<C64> { pts.into_iter().filter(|z| region.contains(*z)).collect() };
        Ok(match &self.kind {
            MapKind::Identity => Vec::new(),
            MapKind::Affine { a, b } => {
                if small(a - cone(), 1.0) {
                    Vec::new()
                } else {
                    keep(vec![b / (cone() - a)])
                }
            }
            MapKind::Mobius { a, b, c, d } => keep(mobius_fixed_points(*a, *b, *c, *d)),
            MapKind::Poly(cs) => {
                let mut p = cs.clone();
                p[1] -= cone();
                keep(polynomial_roots(&p))
            }
            MapKind::Chain(_) => keep(self.newton_fixed_points(&region)),
            MapKind::Conjugated { inner, by, by_inv } => {
                let inner_region = by_inv.image_region(&region);
                let pts = inner.fixed_points(&inner_region)?;
                keep(pts.into_iter().filter_map(|z| by.eval(z).ok()).collect())
            }
        })
    }

    fn newton_fixed_points(&self, region: &Region) -> Vec<C64> {
        let Some(bx) = region.support().bounds() else {
            return Vec::new();
        };
        let mut roots: Vec<C64> = Vec::new();
        for iy in 0..NEWTON_GRID {
            for ix in 0..NEWTON_GRID {
                let start = C64::new(
                    bx.lo.re + (ix as f64 + 0.5) / NEWTON_GRID as f64 * (bx.hi.re - bx.lo.re),
                    bx.lo.im + (iy as f64 + 0.5) / NEWTON_GRID as f64 * (bx.hi.im - bx.lo.im),
                );
                if !region.contains(start) {
                    continue;
                }
                if let Some(r) = self.newton_from(start, &roots) {
                    if roots.iter().all(|q| (q - r).norm() > MERGE_TOL.max(CLUSTER_TOL * 0.1) * (1.0 + r.norm())) {
                        roots.push(r);
                    }
                }
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        roots
    }

    fn newton_from(&self, start: C64, known: &[C64]) -> Option<C64> {
        let mut z = start;
        for _ in 0..NEWTON_ITERS {
            let j = self.jet(z, 1).ok()?;
            let f = j.coeff(0) - z;
            if f.norm() < NEWTON_TOL * (1.0 + z.norm()) {
                return Some(z);
            }
            let df = j.coeff(1) - cone();
            let mut n = df / f;
            for r in known {
                n -= 1.0 / (z - r);
            }
            if n == czero() || !n.re.is_finite() {
                return None;
            }
            let step = 1.0 / n;
            z -= step;
            if step.norm() < NEWTON_TOL * (1.0 + z.norm()) {
                let f = self.eval(z).ok()? - z;
                return (f.norm() < 1e3 * NEWTON_TOL * (1.0 + z.norm())).then_some(z);
            }
        }
        None
    }
}

fn mobius_fixed_points(a: C64, b: C64, c: C64, d: C64) -> Vec<C64> {
    let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
    if c.norm() <= 1e-15 * scale {
        let s = d - a;
        if s.norm() <= 1e-15 * scale {
            return Vec::new();
        }
        return vec![b / s];
    }
    // c z² + (d − a) z − b = 0
    let p = d - a;
    let disc = p * p + 4.0 * b * c;
    if disc.norm() <= 1e-28 * scale * scale {
        return vec![-p / (2.0 * c)];
    }
    let sq = disc.sqrt();
    let q = if (-p * sq.conj()).re >= 0.0 { -p + sq } else { -p - sq };
    // Roots q/(2c) and −2b/q, the stable pair.
    let r1 = q / (2.0 * c);
    let r2 = if q == czero() { -r1 } else { -2.0 * b / q };
    vec![r1, r2]
}

/// Roots of a polynomial with ascending coefficients. Exact zeros at the
/// origin are split off first; the rest uses Aberth iteration with clusters
/// of a multiple root merged to their centroid.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut cs = coeffs.to_vec();
    while cs.len() > 1 && *cs.last().unwrap() == czero() {
        cs.pop();
    }
    let mut roots = Vec::new();
    let lead_zeros = cs.iter().take_while(|c| **c == czero()).count();
    if lead_zeros == cs.len() {
        return roots;
    }
    if lead_zeros > 0 {
        roots.push(czero());
        cs.drain(0..lead_zeros);
    }
    let n = cs.len() - 1;
    if n == 0 {
        return roots;
    }
    let lead = cs[n];
    let monic: Vec<C64> = cs.iter().map(|c| c / lead).collect();
    let dmonic: Vec<C64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n).map(|k| C64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / n as f64)).collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let pz = eval_poly(&monic, z[i]);
            if pz == czero() {
                continue;
            }
            let ratio = pz / eval_poly(&dmonic, z[i]);
            let sum: C64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (cone() - ratio * sum);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    // Cluster by single linkage, then average.
    let mut cluster: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if (z[i] - z[j]).norm() < CLUSTER_TOL * (1.0 + z[i].norm()) {
                let (ci, cj) = (cluster[i], cluster[j]);
                for c in cluster.iter_mut() {
                    if *c == ci {
                        *c = cj;
                    }
                }
            }
        }
    }
    let mut ids: Vec<usize> = cluster.clone();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        let members: Vec<C64> = (0..n).filter(|&i| cluster[i] == id).map(|i| z[i]).collect();
        roots.push(members.iter().sum::<C64>() / members.len() as f64);
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Order of a fixed point: finite, or infinite for identity germs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    Finite(usize),
    Infinite,
}

/// An automorphism `(g, z0)` of the groupoid.
#[derive(Debug, Clone)]
pub struct Automorphism {
    pub label: Label,
    pub z0: C64,
    pub order: Order,
    /// Jet of `H^n = (z − z0)^n / (g(z) − z)` at `z0`; absent for identity germs.
    pub h_jet: Option<Jet1>,
}

/// Options for fixed-point order detection.
#[derive(Debug, Clone, Copy)]
pub struct OrderOpts {
    pub jet_order: usize,
    pub n_max: usize,
    pub threshold: f64,
}

impl Default for OrderOpts {
    fn default() -> Self {
        OrderOpts { jet_order: DEFAULT_JET_ORDER, n_max: DEFAULT_N_MAX, threshold: DEFAULT_ZERO_THRESHOLD }
    }
}

/// Order and H-jet of the fixed point `z0` of `g`.
pub fn automorphism_order(label: &Label, g: &ConformalMap, z0: C64, opts: &OrderOpts) -> Result<Automorphism, GroupError> {
    let k = opts.jet_order;
    let jet = g.jet(z0, k)?;
    let residual = (jet.value() - z0).norm();
    if residual > 1e-10 * (1.0 + z0.norm()) {
        return Err(GroupError::NotFixed { z0, residual });
    }
    let diff = jet.sub(&Jet1::identity(z0, k)).map_err(MapError::from)?;
    let strict = diff.valuation(opts.threshold);
    let loose = diff.valuation(opts.threshold * AMBIGUITY_FACTOR);
    let n = match strict {
        None => {
            if g.is_identity_germ() {
                return Ok(Automorphism { label: label.clone(), z0, order: Order::Infinite, h_jet: None });
            }
            return Err(GroupError::OrderTooHigh { z0, max: opts.n_max });
        }
        Some(n) => n,
    };
    if let Some(l) = loose {
        if l != n {
            return Err(GroupError::AmbiguousOrder { z0, low: n, high: l });
        }
    }
    if n == 0 {
        return Err(GroupError::NotFixed { z0, residual });
    }
    if n > opts.n_max {
        return Err(GroupError::OrderTooHigh { z0, max: opts.n_max });
    }
    let mut exact = diff;
    // Coefficients below the order are rounding noise.
    let mut cs = exact.coeffs().to_vec();
    for c in cs.iter_mut().take(n) {
        *c = czero();
    }
    exact = Jet1::new(z0, cs);
    let h = Jet1::div_valuation(&Jet1::monomial(z0, n, k), &exact, opts.threshold).map_err(MapError::from)?;
    Ok(Automorphism { label: label.clone(), z0, order: Order::Finite(n), h_jet: Some(h) })
}

/// `H^m` for `m ≥ n`, from the same difference jet.
pub fn h_jet_padded(g: &ConformalMap, z0: C64, n: usize, m: usize, opts: &OrderOpts) -> Result<Jet1, GroupError> {
    let k = opts.jet_order;
    let diff = g.jet(z0, k)?.sub(&Jet1::identity(z0, k)).map_err(MapError::from)?;
    let mut cs = diff.coeffs().to_vec();
    for c in cs.iter_mut().take(n) {
        *c = czero();
    }
    Ok(Jet1::div_valuation(&Jet1::monomial(z0, m, k), &Jet1::new(z0, cs), opts.threshold).map_err(MapError::from)?)
}

/// Canonical PSL(2,ℂ) representative.
#[derive(Debug, Clone)]
pub struct MobiusLabel {
    pub m: [C64; 4],
    key: [i64; 8],
}

impl MobiusLabel {
    pub fn new(m: [C64; 4]) -> Result<Self, GroupError> {
        let det = m[0] * m[3] - m[1] * m[2];
        if det.norm() < 1e-300 {
            return Err(GroupError::Spec("singular Möbius matrix".into()));
        }
        let s = det.sqrt();
        let mut n = m.map(|x| x / s);
        if let Some(first) = n.iter().find(|x| x.norm() > 1e-12) {
            let arg = first.arg();
            if !(arg > -std::f64::consts::FRAC_PI_2 && arg <= std::f64::consts::FRAC_PI_2) {
                n = n.map(|x| -x);
            }
        }
        let mut key = [0i64; 8];
        for (i, x) in n.iter().enumerate() {
            key[2 * i] = (x.re * 1e8).round() as i64;
            key[2 * i + 1] = (x.im * 1e8).round() as i64;
        }
        Ok(MobiusLabel { m: n, key })
    }

    pub fn is_identity(&self) -> bool {
        self.key == [100_000_000, 0, 0, 0, 0, 0, 100_000_000, 0]
    }
}

impl PartialEq for MobiusLabel {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for MobiusLabel {}

impl Hash for MobiusLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl PartialOrd for MobiusLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MobiusLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

/// A group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Cyclic(u32),
    /// Reduced word in generators `±(i + 1)`.
    Word(Vec<i32>),
    Mobius(MobiusLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    MatrixMobius,
    FiniteCyclic,
    FreeGenerators,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub name: String,
    pub map: ConformalMap,
}

/// A discrete group acting by conformal partial maps.
#[derive(Debug, Clone)]
pub struct GroupAction {
    kind: GroupKind,
    order: u32,
    generators: Vec<Generator>,
    work_radius: f64,
    conjugator: Option<(ConformalMap, ConformalMap)>,
    order_opts: OrderOpts,
}

/// Default radius of the disk searched for fixed points.
pub const DEFAULT_WORK_RADIUS: f64 = 4.0;

impl GroupAction {
    pub fn trivial() -> Self {
        GroupAction::free(Vec::new())
    }

    pub fn free(generators: Vec<Generator>) -> Self {
        GroupAction {
            kind: GroupKind::FreeGenerators,
            order: 0,
            generators,
            work_radius: DEFAULT_WORK_RADIUS,
            conjugator: None,
            order_opts: OrderOpts::default(),
        }
    }

    pub fn cyclic(order: u32, generator: Generator) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::Spec("cyclic order must be positive".into()));
        }
        let action = GroupAction {
            kind: GroupKind::FiniteCyclic,
            order,
            generators: vec![generator],
            work_radius: DEFAULT_WORK_RADIUS,
            conjugator: None,
            order_opts: OrderOpts::default(),
        };
        let top = (0..order).fold(ConformalMap::identity(), |m, _| action.generators[0].map.compose(&m));
        if !top.is_identity_germ() {
            return Err(GroupError::Spec(format!("generator does not have order {order}")));
        }
        Ok(action)
    }

    pub fn mobius(generators: Vec<Generator>) -> Result<Self, GroupError> {
        for g in &generators {
            if g.map.matrix().is_none() {
                return Err(GroupError::Spec(format!("generator `{}` is not a Möbius map", g.name)));
            }
        }
        Ok(GroupAction {
            kind: GroupKind::MatrixMobius,
            order: 0,
            generators,
            work_radius: DEFAULT_WORK_RADIUS,
            conjugator: None,
            order_opts: OrderOpts::default(),
        })
    }

    pub fn with_work_radius(mut self, r: f64) -> Self {
        self.work_radius = r;
        self
    }

    pub fn with_order_opts(mut self, opts: OrderOpts) -> Self {
        self.order_opts = opts;
        self
    }

    pub fn order_opts(&self) -> &OrderOpts {
        &self.order_opts
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn work_radius(&self) -> f64 {
        self.work_radius
    }

    pub fn unit(&self) -> Label {
        match self.kind {
            GroupKind::FiniteCyclic => Label::Cyclic(0),
            GroupKind::FreeGenerators => Label::Word(Vec::new()),
            GroupKind::MatrixMobius => Label::Mobius(MobiusLabel::new([cone(), czero(), czero(), cone()]).unwrap()),
        }
    }

    fn generator_index(&self, name: &str) -> Result<usize, GroupError> {
        self.generators.iter().position(|g| g.name == name).ok_or_else(|| GroupError::UnknownGenerator(name.into()))
    }

    /// Label of a generator, or of its inverse for names ending in `^-1`.
    pub fn generator(&self, name: &str) -> Result<Label, GroupError> {
        if let Some(base) = name.strip_suffix("^-1") {
            return Ok(self.inv(&self.generator(base)?));
        }
        let i = self.generator_index(name)?;
        Ok(match self.kind {
            GroupKind::FiniteCyclic => Label::Cyclic(1 % self.order),
            GroupKind::FreeGenerators => Label::Word(vec![i as i32 + 1]),
            GroupKind::MatrixMobius => Label::Mobius(MobiusLabel::new(self.generators[i].map.matrix().unwrap())?),
        })
    }

    /// Product of a list of generator names, left to right.
    pub fn word(&self, names: &[String]) -> Result<Label, GroupError> {
        let mut acc = self.unit();
        for n in names {
            acc = self.mul(&acc, &self.generator(n)?);
        }
        Ok(acc)
    }

    /// `g·h`, acting by `g ∘ h`.
    pub fn mul(&self, g: &Label, h: &Label) -> Label {
        match (g, h) {
            (Label::Cyclic(a), Label::Cyclic(b)) => Label::Cyclic((a + b) % self.order.max(1)),
            (Label::Word(a), Label::Word(b)) => {
                let mut out = a.clone();
                for &x in b {
                    if out.last() == Some(&-x) {
                        out.pop();
                    } else {
                        out.push(x);
                    }
                }
                Label::Word(out)
            }
            (Label::Mobius(a), Label::Mobius(b)) => {
                let [p, q, r, s] = a.m;
                let [e, f, g2, h2] = b.m;
                Label::Mobius(
                    MobiusLabel::new([p * e + q * g2, p * f + q * h2, r * e + s * g2, r * f + s * h2])
                        .expect("product of invertible matrices"),
                )
            }
            _ => panic!("labels from different group kinds"),
        }
    }

    pub fn inv(&self, g: &Label) -> Label {
        match g {
            Label::Cyclic(a) => Label::Cyclic((self.order - a % self.order) % self.order),
            Label::Word(w) => Label::Word(w.iter().rev().map(|x| -x).collect()),
            Label::Mobius(m) => {
                let [a, b, c, d] = m.m;
                Label::Mobius(MobiusLabel::new([d, -b, -c, a]).expect("invertible"))
            }
        }
    }

    fn base_map(&self, label: &Label) -> Result<ConformalMap, GroupError> {
        Ok(match label {
            Label::Cyclic(k) => {
                let g = &self.generators.first().ok_or_else(|| GroupError::Spec("cyclic group without generator".into()))?.map;
                (0..*k).fold(ConformalMap::identity(), |m, _| g.compose(&m))
            }
            Label::Word(w) => {
                let mut m = ConformalMap::identity();
                for &x in w.iter().rev() {
                    let i = (x.unsigned_abs() - 1) as usize;
                    let gen = &self.generators.get(i).ok_or_else(|| GroupError::ForeignLabel(format!("{label:?}")))?.map;
                    let letter = if x > 0 { gen.clone() } else { gen.inverse().ok_or(MapError::NotInvertible)? };
                    m = letter.compose(&m);
                }
                m
            }
            Label::Mobius(ml) => {
                if ml.is_identity() {
                    ConformalMap::identity()
                } else {
                    let [a, b, c, d] = ml.m;
                    if c == czero() {
                        ConformalMap::affine(a / d, b / d)
                    } else {
                        ConformalMap::mobius(a, b, c, d)
                    }
                }
            }
        })
    }

    /// The map by which `label` acts.
    pub fn map_of(&self, label: &Label) -> Result<Arc<ConformalMap>, GroupError> {
        let m = self.base_map(label)?;
        Ok(Arc::new(match &self.conjugator {
            Some((h, _)) if !m.is_plain_identity() => m.conjugate_by(h)?,
            _ => m,
        }))
    }

    pub fn is_unit(&self, label: &Label) -> bool {
        *label == self.unit()
    }

    /// Whether `label` acts as the identity on its domain.
    pub fn is_identity_germ(&self, label: &Label) -> Result<bool, GroupError> {
        Ok(self.is_unit(label) || self.base_map(label)?.is_identity_germ())
    }

    fn search_region(&self) -> Region {
        Region::disk(czero(), self.work_radius)
    }

    /// Isolated automorphisms with label `label`.
    pub fn automorphisms(&self, label: &Label) -> Result<Vec<Automorphism>, GroupError> {
        if self.is_identity_germ(label)? {
            return Ok(Vec::new());
        }
        let base = self.base_map(label)?;
        let points = base.fixed_points(&self.search_region())?;
        let map = self.map_of(label)?;
        let mut out = Vec::with_capacity(points.len());
        for z in points {
            let w = match &self.conjugator {
                Some((h, _)) => match h.eval(z) {
                    Ok(w) => w,
                    Err(_) => continue,
                },
                None => z,
            };
            out.push(automorphism_order(label, &map, w, &self.order_opts)?);
        }
        Ok(out)
    }

    /// Isolated automorphisms and identity-germ labels among `labels`.
    pub fn enumerate_automorphisms<'a, I>(&self, labels: I) -> Result<(Vec<Automorphism>, Vec<Label>), GroupError>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        let mut finite = Vec::new();
        let mut infinite = vec![self.unit()];
        for l in labels {
            if self.is_identity_germ(l)? {
                if !infinite.contains(l) {
                    infinite.push(l.clone());
                }
            } else {
                finite.extend(self.automorphisms(l)?);
            }
        }
        infinite.sort();
        Ok((finite, infinite))
    }

    /// The same action in the coordinate `w = h(z)`: each label acts by `h g h⁻¹`.
    pub fn conjugated(&self, h: &ConformalMap) -> Result<GroupAction, GroupError> {
        let h_inv = h.inverse_unrestricted().ok_or(MapError::NotInvertible)?;
        let (h_total, h_total_inv) = match &self.conjugator {
            Some((old, old_inv)) => (h.compose(old), old_inv.compose(&h_inv)),
            None => (h.clone().with_domain(Region::FullPlane), h_inv),
        };
        let mut out = self.clone();
        out.conjugator = Some((h_total, h_total_inv));
        Ok(out)
    }

    /// The coordinate change applied by [`GroupAction::conjugated`], if any.
    pub fn conjugator(&self) -> Option<&ConformalMap> {
        self.conjugator.as_ref().map(|(h, _)| h)
    }

    /// Human-readable label name.
    pub fn label_name(&self, label: &Label) -> String {
        match label {
            Label::Cyclic(0) | Label::Word(_) if self.is_unit(label) => "1".into(),
            Label::Cyclic(k) => format!("{}^{k}", self.generators.first().map_or("g", |g| g.name.as_str())),
            Label::Word(w) => w
                .iter()
                .map(|&x| {
                    let name = self.generators.get((x.unsigned_abs() - 1) as usize).map_or("?", |g| g.name.as_str());
                    if x > 0 {
                        name.to_string()
                    } else {
                        format!("{name}^-1")
                    }
                })
                .collect::<Vec<_>>()
                .join("*"),
            Label::Mobius(m) if m.is_identity() => "1".into(),
            Label::Mobius(m) => {
                let f = |c: C64| format!("{:.6}{:+.6}i", c.re, c.im);
                format!("[{}, {}; {}, {}]", f(m.m[0]), f(m.m[1]), f(m.m[2]), f(m.m[3]))
            }
        }
    }

    /// Exponent sums per generator, for labels of a free group.
    pub fn exponent_sums(&self, label: &Label) -> Option<Vec<i64>> {
        match label {
            Label::Word(w) => {
                let mut out = vec![0i64; self.generators.len()];
                for &x in w {
                    out[(x.unsigned_abs() - 1) as usize] += x.signum() as i64;
                }
                Some(out)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Cyclic(k) => write!(f, "c{k}"),
            Label::Word(w) => write!(f, "w{w:?}"),
            Label::Mobius(m) => write!(f, "m{:?}", m.key),
        }
    }
}

/// Configuration form of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: Vec<C64>,
}

impl MapSpec {
    pub fn build(&self, domain: Region) -> Result<ConformalMap, GroupError> {
        let p = &self.params;
        let need = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(GroupError::Spec(format!("map `{}` needs {n} parameters, got {}", self.kind, p.len())))
            }
        };
        let m = match self.kind.as_str() {
            "identity" => ConformalMap::identity(),
            "affine" => {
                need(2)?;
                ConformalMap::affine(p[0], p[1])
            }
            "mobius" => {
                need(4)?;
                ConformalMap::mobius(p[0], p[1], p[2], p[3])
            }
            "poly" => {
                if p.is_empty() {
                    return Err(GroupError::Spec("poly map needs coefficients".into()));
                }
                ConformalMap::poly(p.clone())
            }
            other => return Err(GroupError::Spec(format!("unknown map type `{other}`"))),
        }
        .with_domain(domain);
        m.validate()?;
        Ok(m)
    }
}
