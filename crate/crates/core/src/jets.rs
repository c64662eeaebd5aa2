//! Truncated Taylor arithmetic.
//!
//! [`Jet1`] holds the normalized Taylor coefficients `c_k = f^(k)(z0)/k!` of a
//! holomorphic germ in one variable. [`Jet2`] holds the coefficients
//! `c_{p,q} = ∂_z^p ∂_z̄^q f(z0) / (p! q!)` of a smooth germ on the plane,
//! indexed over the triangle `p + q ≤ K`.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Default truncation order for jets.
pub const DEFAULT_JET_ORDER: usize = 16;

/// Relative threshold under which a coefficient counts as zero when
/// computing valuations.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

const BASE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet base points differ: {0} vs {1}")]
    BaseMismatch(C64, C64),
    #[error("jet orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("denominator vanishes to the full jet order")]
    InfiniteValuation,
    #[error("numerator valuation {num} is below denominator valuation {den}")]
    Pole { num: usize, den: usize },
    #[error("reciprocal of a jet with zero constant term")]
    ZeroConstant,
    #[error("logarithm of a jet with zero constant term")]
    LogOfZero,
}

fn same_point(a: C64, b: C64) -> bool {
    (a - b).norm() <= BASE_TOL * (1.0 + a.norm().max(b.norm()))
}

/// Univariate truncated Taylor series of a holomorphic germ.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    base: C64,
    coeffs: Vec<C64>,
}

impl Jet1 {
    pub fn new(base: C64, coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the value coefficient");
        Jet1 { base, coeffs }
    }

    pub fn constant(base: C64, value: C64, order: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet1 { base, coeffs }
    }

    /// The coordinate germ `z ↦ z` at `base`.
    pub fn identity(base: C64, order: usize) -> Self {
        let mut j = Jet1::constant(base, base, order);
        if order >= 1 {
            j.coeffs[1] = C64::new(1.0, 0.0);
        }
        j
    }

    /// `(z - base)^n` truncated at `order`.
    pub fn monomial(base: C64, n: usize, order: usize) -> Self {
        let mut j = Jet1::constant(base, C64::new(0.0, 0.0), order);
        if n <= order {
            j.coeffs[n] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn base(&self) -> C64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn truncate(&self, order: usize) -> Jet1 {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, C64::new(0.0, 0.0));
        Jet1 { base: self.base, coeffs }
    }

    fn check(&self, other: &Jet1) -> Result<(), JetError> {
        if !same_point(self.base, other.base) {
            return Err(JetError::BaseMismatch(self.base, other.base));
        }
        if self.order() != other.order() {
            return Err(JetError::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet1) -> Result<Jet1, JetError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet1 { base: self.base, coeffs })
    }

    pub fn sub(&self, other: &Jet1) -> Result<Jet1, JetError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet1 { base: self.base, coeffs })
    }

    pub fn scale(&self, s: C64) -> Jet1 {
        Jet1 { base: self.base, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_constant(&self, c: C64) -> Jet1 {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn conj(&self) -> Jet1 {
        Jet1 { base: self.base.conj(), coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet1) -> Result<Jet1, JetError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Jet1) -> Jet1 {
        let k = self.order();
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(k + 1 - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet1 { base: self.base, coeffs: out }
    }

    pub fn recip(&self) -> Result<Jet1, JetError> {
        let c0 = self.coeffs[0];
        if c0 == C64::new(0.0, 0.0) {
            return Err(JetError::ZeroConstant);
        }
        let k = self.order();
        let inv0 = 1.0 / c0;
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        out[0] = inv0;
        for n in 1..=k {
            let mut acc = C64::new(0.0, 0.0);
            for i in 1..=n {
                acc += self.coeffs[i] * out[n - i];
            }
            out[n] = -acc * inv0;
        }
        Ok(Jet1 { base: self.base, coeffs: out })
    }

    /// Index of the first coefficient whose magnitude exceeds
    /// `threshold × max(max |c|, 1)`.
    pub fn valuation(&self, threshold: f64) -> Option<usize> {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        self.coeffs.iter().position(|c| c.norm() > threshold * scale)
    }

    /// `num / den` after cancelling the common factor `(z - base)^v`, where
    /// `v` is the valuation of `den`. The result has order `K - v`.
    pub fn div_valuation(num: &Jet1, den: &Jet1, threshold: f64) -> Result<Jet1, JetError> {
        num.check(den)?;
        let v = den.valuation(threshold).ok_or(JetError::InfiniteValuation)?;
        let nv = num.valuation(threshold).unwrap_or(num.order() + 1);
        if nv < v {
            return Err(JetError::Pole { num: nv, den: v });
        }
        let k = den.order() - v;
        let shifted_den = Jet1 { base: den.base, coeffs: den.coeffs[v..].to_vec() };
        let shifted_num = Jet1 { base: num.base, coeffs: num.coeffs[v..].to_vec() };
        debug_assert_eq!(shifted_den.order(), k);
        Ok(shifted_num.mul_unchecked(&shifted_den.recip()?))
    }

    /// Composition `outer ∘ inner`. The value of `inner` must equal the base
    /// point of `outer`.
    pub fn compose(outer: &Jet1, inner: &Jet1) -> Result<Jet1, JetError> {
        if !same_point(outer.base, inner.value()) {
            return Err(JetError::BaseMismatch(outer.base, inner.value()));
        }
        if outer.order() != inner.order() {
            return Err(JetError::OrderMismatch(outer.order(), inner.order()));
        }
        let mut shift = inner.clone();
        shift.coeffs[0] = C64::new(0.0, 0.0);
        // Horner: c_K, then acc·shift + c_{K-1}, ...
        let k = outer.order();
        let mut acc = Jet1::constant(inner.base, outer.coeffs[k], k);
        for i in (0..k).rev() {
            acc = acc.mul_unchecked(&shift);
            acc.coeffs[0] += outer.coeffs[i];
        }
        Ok(acc)
    }

    /// Derivative germ; the order drops by one (floor zero).
    pub fn derivative(&self) -> Jet1 {
        let k = self.order();
        if k == 0 {
            return Jet1::constant(self.base, C64::new(0.0, 0.0), 0);
        }
        let coeffs = (1..=k).map(|i| self.coeffs[i] * i as f64).collect();
        Jet1 { base: self.base, coeffs }
    }

    /// Exponential by the recurrence `n e_n = Σ k a_k e_{n-k}`.
    pub fn exp(&self) -> Jet1 {
        let k = self.order();
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        out[0] = self.coeffs[0].exp();
        for n in 1..=k {
            let mut acc = C64::new(0.0, 0.0);
            for i in 1..=n {
                acc += self.coeffs[i] * out[n - i] * i as f64;
            }
            out[n] = acc / n as f64;
        }
        Jet1 { base: self.base, coeffs: out }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Result<Jet1, JetError> {
        let c0 = self.coeffs[0];
        if c0 == C64::new(0.0, 0.0) {
            return Err(JetError::LogOfZero);
        }
        let k = self.order();
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        out[0] = c0.ln();
        // a' = a·l'  ⇒  n a_0 l_n = n a_n - Σ_{i=1}^{n-1} i l_i a_{n-i}
        for n in 1..=k {
            let mut acc = self.coeffs[n] * n as f64;
            for i in 1..n {
                acc -= out[i] * self.coeffs[n - i] * i as f64;
            }
            out[n] = acc / (c0 * n as f64);
        }
        Ok(Jet1 { base: self.base, coeffs: out })
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Jet1, JetError> {
        let c0 = self.coeffs[0];
        if c0 == C64::new(0.0, 0.0) {
            return Err(JetError::ZeroConstant);
        }
        let k = self.order();
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        out[0] = c0.sqrt();
        for n in 1..=k {
            let mut acc = self.coeffs[n];
            for i in 1..n {
                acc -= out[i] * out[n - i];
            }
            out[n] = acc / (out[0] * 2.0);
        }
        Ok(Jet1 { base: self.base, coeffs: out })
    }

    /// Evaluates the truncated polynomial at `z`.
    pub fn eval(&self, z: C64) -> C64 {
        let h = z - self.base;
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * h + c)
    }
}

/// Bivariate truncated Taylor series in `(z - z0, z̄ - z̄0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    base: C64,
    order: usize,
    coeffs: Vec<C64>,
}

#[inline]
fn tri_index(p: usize, q: usize) -> usize {
    let d = p + q;
    d * (d + 1) / 2 + q
}

impl Jet2 {
    pub fn zero(base: C64, order: usize) -> Self {
        Jet2 { base, order, coeffs: vec![C64::new(0.0, 0.0); tri_index(0, order) + 1] }
    }

    pub fn constant(base: C64, value: C64, order: usize) -> Self {
        let mut j = Jet2::zero(base, order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate `z` at `base`.
    pub fn var_z(base: C64, order: usize) -> Self {
        let mut j = Jet2::constant(base, base, order);
        if order >= 1 {
            j.set(1, 0, C64::new(1.0, 0.0));
        }
        j
    }

    /// The coordinate `z̄` at `base`.
    pub fn var_zbar(base: C64, order: usize) -> Self {
        let mut j = Jet2::constant(base, base.conj(), order);
        if order >= 1 {
            j.set(0, 1, C64::new(1.0, 0.0));
        }
        j
    }

    /// Embeds a holomorphic germ: `c_{p,0} = c_p`.
    pub fn from_holomorphic(j: &Jet1) -> Self {
        let mut out = Jet2::zero(j.base, j.order());
        for (p, c) in j.coeffs.iter().enumerate() {
            out.set(p, 0, *c);
        }
        out
    }

    /// Embeds the conjugate of a holomorphic germ: `c_{0,q} = conj(c_q)`.
    pub fn from_antiholomorphic(j: &Jet1) -> Self {
        let mut out = Jet2::zero(j.base, j.order());
        for (q, c) in j.coeffs.iter().enumerate() {
            out.set(0, q, c.conj());
        }
        out
    }

    pub fn base(&self) -> C64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, p: usize, q: usize) -> C64 {
        if p + q > self.order {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[tri_index(p, q)]
        }
    }

    pub fn set(&mut self, p: usize, q: usize, c: C64) {
        assert!(p + q <= self.order);
        self.coeffs[tri_index(p, q)] = c;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    /// Pure-`z` part `c_{p,0}` as a univariate jet.
    pub fn holomorphic_part(&self) -> Jet1 {
        Jet1::new(self.base, (0..=self.order).map(|p| self.coeff(p, 0)).collect())
    }

    pub fn truncate(&self, order: usize) -> Jet2 {
        let mut out = Jet2::zero(self.base, order);
        for d in 0..=order.min(self.order) {
            for q in 0..=d {
                out.set(d - q, q, self.coeff(d - q, q));
            }
        }
        out
    }

    fn check(&self, other: &Jet2) -> Result<(), JetError> {
        if !same_point(self.base, other.base) {
            return Err(JetError::BaseMismatch(self.base, other.base));
        }
        if self.order != other.order {
            return Err(JetError::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Jet2, f: impl Fn(C64, C64) -> C64) -> Jet2 {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect();
        Jet2 { base: self.base, order: self.order, coeffs }
    }

    pub fn scale(&self, s: C64) -> Jet2 {
        Jet2 { base: self.base, order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_constant(&self, c: C64) -> Jet2 {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Truncated bivariate Cauchy product.
    pub fn mul(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Jet2) -> Jet2 {
        let k = self.order;
        let mut out = Jet2::zero(self.base, k);
        for d1 in 0..=k {
            for q1 in 0..=d1 {
                let a = self.coeffs[tri_index(d1 - q1, q1)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for d2 in 0..=(k - d1) {
                    for q2 in 0..=d2 {
                        let b = other.coeffs[tri_index(d2 - q2, q2)];
                        out.coeffs[tri_index(d1 - q1 + d2 - q2, q1 + q2)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn powi(&self, n: u32) -> Jet2 {
        let mut acc = Jet2::constant(self.base, C64::new(1.0, 0.0), self.order);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Reciprocal by the recurrence over increasing total degree.
    pub fn recip(&self) -> Result<Jet2, JetError> {
        let c0 = self.coeffs[0];
        if c0 == C64::new(0.0, 0.0) {
            return Err(JetError::ZeroConstant);
        }
        let inv0 = 1.0 / c0;
        let k = self.order;
        let mut out = Jet2::zero(self.base, k);
        out.coeffs[0] = inv0;
        for d in 1..=k {
            for q in 0..=d {
                let p = d - q;
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..=p {
                    for j in 0..=q {
                        if i + j == 0 {
                            continue;
                        }
                        acc += self.coeffs[tri_index(i, j)] * out.coeffs[tri_index(p - i, q - j)];
                    }
                }
                out.coeffs[tri_index(p, q)] = -acc * inv0;
            }
        }
        Ok(out)
    }

    /// `∂_z` of the germ; the order drops by one.
    pub fn d_z(&self) -> Jet2 {
        let k = self.order.saturating_sub(1);
        let mut out = Jet2::zero(self.base, k);
        if self.order == 0 {
            return out;
        }
        for d in 0..=k {
            for q in 0..=d {
                let p = d - q;
                out.set(p, q, self.coeff(p + 1, q) * (p + 1) as f64);
            }
        }
        out
    }

    /// `∂_z̄` of the germ; the order drops by one.
    pub fn d_zbar(&self) -> Jet2 {
        let k = self.order.saturating_sub(1);
        let mut out = Jet2::zero(self.base, k);
        if self.order == 0 {
            return out;
        }
        for d in 0..=k {
            for q in 0..=d {
                let p = d - q;
                out.set(p, q, self.coeff(p, q + 1) * (q + 1) as f64);
            }
        }
        out
    }

    /// `Σ_k outer_k (self - s0)^k` where `s0` is the base of `outer` and
    /// must equal the value of `self`.
    pub fn compose_univariate(&self, outer: &Jet1) -> Result<Jet2, JetError> {
        if !same_point(outer.base, self.value()) {
            return Err(JetError::BaseMismatch(outer.base, self.value()));
        }
        let k = self.order;
        let mut shift = self.clone();
        shift.coeffs[0] = C64::new(0.0, 0.0);
        let top = k.min(outer.order());
        let mut acc = Jet2::constant(self.base, outer.coeff(top), k);
        for i in (0..top).rev() {
            acc = acc.mul_unchecked(&shift);
            acc.coeffs[0] += outer.coeff(i);
        }
        Ok(acc)
    }

    /// `Σ F_{p,q} α^p β^q` where `alpha`, `beta` have zero constant term and
    /// share base and order.
    pub fn compose_bivariate(outer: &Jet2, alpha: &Jet2, beta: &Jet2) -> Result<Jet2, JetError> {
        alpha.check(beta)?;
        let k = alpha.order;
        let n = k.min(outer.order);
        let one = Jet2::constant(alpha.base, C64::new(1.0, 0.0), k);
        let mut apow = vec![one.clone()];
        let mut bpow = vec![one];
        for i in 1..=n {
            apow.push(apow[i - 1].mul_unchecked(alpha));
            bpow.push(bpow[i - 1].mul_unchecked(beta));
        }
        let mut out = Jet2::zero(alpha.base, k);
        for d in 0..=n {
            for q in 0..=d {
                let c = outer.coeff(d - q, q);
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let term = apow[d - q].mul_unchecked(&bpow[q]).scale(c);
                for (o, t) in out.coeffs.iter_mut().zip(&term.coeffs) {
                    *o += t;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn jet(coeffs: &[f64]) -> Jet1 {
        Jet1::new(c(0.0), coeffs.iter().map(|&x| c(x)).collect())
    }

    /// Exact polynomial product, truncated.
    fn poly_mul_oracle(a: &[C64], b: &[C64], k: usize) -> Vec<C64> {
        let mut out = vec![c(0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out.resize(k + 1, c(0.0));
        out
    }

    #[test]
    fn product_of_conjugate_binomials() {
        let a = jet(&[1.0, 1.0, 0.0]);
        let b = jet(&[1.0, -1.0, 0.0]);
        assert_eq!(a.mul(&b).unwrap().coeffs(), jet(&[1.0, 0.0, -1.0]).coeffs());
        let one = Jet1::constant(c(0.0), c(1.0), 2);
        assert_eq!(a.mul(&one).unwrap(), a);
    }

    #[test]
    fn product_matches_polynomial_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let b: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let k = 5;
            let mut ap = a.clone();
            ap.resize(k + 1, c(0.0));
            let mut bp = b.clone();
            bp.resize(k + 1, c(0.0));
            let got = Jet1::new(c(0.0), ap).mul(&Jet1::new(c(0.0), bp)).unwrap();
            let want = poly_mul_oracle(&a, &b, k);
            for (g, w) in got.coeffs().iter().zip(&want) {
                assert!((g - w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_jets_are_rejected() {
        let a = jet(&[1.0, 1.0]);
        let b = Jet1::new(c(1.0), vec![c(1.0), c(1.0)]);
        assert!(matches!(a.mul(&b), Err(JetError::BaseMismatch(..))));
        let d = jet(&[1.0, 1.0, 1.0]);
        assert!(matches!(a.mul(&d), Err(JetError::OrderMismatch(1, 2))));
    }

    #[test]
    fn valuation_division_cancels_common_factor() {
        // (z² + z³) / z² = 1 + z
        let num = jet(&[0.0, 0.0, 1.0, 1.0, 0.0]);
        let den = jet(&[0.0, 0.0, 1.0, 0.0, 0.0]);
        let q = Jet1::div_valuation(&num, &den, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(q.order(), 2);
        assert_eq!(q.coeffs(), &[c(1.0), c(1.0), c(0.0)]);
    }

    #[test]
    fn h_function_of_parabolic_map() {
        // g(z) = z/(1+z): g(z) - z = -z²/(1+z) = -z² + z³ - z⁴ + ...
        let k = 6;
        let den = Jet1::new(c(0.0), (0..=k).map(|i| if i < 2 { c(0.0) } else { c(if i % 2 == 0 { -1.0 } else { 1.0 }) }).collect());
        let num = Jet1::monomial(c(0.0), 2, k);
        let h = Jet1::div_valuation(&num, &den, DEFAULT_ZERO_THRESHOLD).unwrap();
        // H² = -(1 + z)
        assert!((h.coeff(0) - c(-1.0)).norm() < 1e-14);
        assert!((h.coeff(1) - c(-1.0)).norm() < 1e-14);
        for i in 2..=h.order() {
            assert!(h.coeff(i).norm() < 1e-14);
        }
    }

    #[test]
    fn h_function_of_dilation() {
        // g(z) = 2z, num = z: 1/(2 - 1)
        let den = jet(&[0.0, 1.0, 0.0, 0.0]);
        let num = jet(&[0.0, 1.0, 0.0, 0.0]);
        let h = Jet1::div_valuation(&num, &den, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(h.coeffs(), &[c(1.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn valuation_errors() {
        let zero = jet(&[0.0, 0.0, 0.0]);
        let one = jet(&[1.0, 0.0, 0.0]);
        assert_eq!(Jet1::div_valuation(&one, &zero, 1e-12), Err(JetError::InfiniteValuation));
        let z2 = jet(&[0.0, 0.0, 1.0]);
        assert_eq!(Jet1::div_valuation(&one, &z2, 1e-12), Err(JetError::Pole { num: 0, den: 2 }));
    }

    #[test]
    fn composition_examples() {
        let outer = jet(&[0.0, 2.0, 0.0]);
        let inner = jet(&[0.0, 1.0, 1.0]);
        assert_eq!(Jet1::compose(&outer, &inner).unwrap().coeffs(), &[c(0.0), c(2.0), c(2.0)]);
        let id = Jet1::identity(c(0.0), 2);
        assert_eq!(Jet1::compose(&inner, &id).unwrap(), inner);
        // (w + w²) ∘ (z + z³) = z + z² + z³ + 2z⁴
        let outer = jet(&[0.0, 1.0, 1.0, 0.0, 0.0]);
        let inner = jet(&[0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(Jet1::compose(&outer, &inner).unwrap().coeffs(), &[c(0.0), c(1.0), c(1.0), c(1.0), c(2.0)]);
        let shifted = Jet1::new(c(0.0), vec![c(1.0), c(1.0)]);
        assert!(Jet1::compose(&jet(&[0.0, 1.0]), &shifted).is_err());
    }

    #[test]
    fn elementary_functions_match_series() {
        let x = Jet1::identity(c(0.0), 5);
        let e = x.exp();
        let mut fact = 1.0;
        for k in 0..=5 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((e.coeff(k) - c(1.0 / fact)).norm() < 1e-14);
        }
        let one_plus = x.truncate(5);
        let mut shifted = one_plus.clone();
        shifted = Jet1::new(shifted.base(), {
            let mut v = shifted.coeffs().to_vec();
            v[0] = c(1.0);
            v
        });
        let l = shifted.ln().unwrap();
        assert!((l.coeff(3) - c(1.0 / 3.0)).norm() < 1e-14);
        let s = shifted.sqrt().unwrap();
        assert!((s.coeff(2) - c(-0.125)).norm() < 1e-14);
    }

    #[test]
    fn bivariate_product_and_derivatives() {
        let z = Jet2::var_z(c(0.0), 3);
        let zb = Jet2::var_zbar(c(0.0), 3);
        let p = z.mul(&zb).unwrap();
        assert_eq!(p.coeff(1, 1), c(1.0));
        assert_eq!(p.coeff(0, 0), c(0.0));
        assert_eq!(p.d_z().coeff(0, 1), c(1.0));
        assert_eq!(p.d_zbar().coeff(1, 0), c(1.0));
        let r = z.add_constant(c(2.0)).recip().unwrap();
        // 1/(2+z) = 1/2 - z/4 + z²/8
        assert!((r.coeff(2, 0) - c(0.125)).norm() < 1e-15);
        assert_eq!(r.coeff(0, 1), c(0.0));
    }
}
