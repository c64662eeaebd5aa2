#![allow(dead_code)]

use std::path::PathBuf;

use conformal_index::expr::{BumpCutoff, ScalarField};
use conformal_index::groupoid::{ConformalMap, Generator, GroupAction};
use conformal_index::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn bump(center: C64, plateau: f64, support: f64) -> ScalarField {
    ScalarField::bump(BumpCutoff::new(center, plateau, support).unwrap())
}

/// Free group on one generator `g`.
pub fn single(map: ConformalMap) -> GroupAction {
    GroupAction::free(vec![Generator { name: "g".into(), map }])
}

/// Polynomial `Σ p[k] z^k` as a field.
pub fn poly_field(p: &[C64]) -> ScalarField {
    p.iter().enumerate().fold(ScalarField::zero(), |acc, (k, ck)| acc.add(&ScalarField::z().powi(k as u32).scale(*ck)))
}

/// The Möbius group used by the randomized checks: a dilation and a map with a
/// double fixed point at 1/2 and a simple one elsewhere in its words.
pub fn mobius_scenario() -> GroupAction {
    GroupAction::mobius(vec![
        Generator { name: "a".into(), map: ConformalMap::mobius(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)) },
        Generator { name: "p".into(), map: ConformalMap::mobius(c(1.25, 0.0), c(-0.125, 0.0), c(0.5, 0.0), c(0.75, 0.0)) },
    ])
    .unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Power-series helpers over ascending coefficient vectors, truncated to `len`.
pub mod series {
    use super::C64;

    pub fn mul(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (i, x) in a.iter().enumerate().take(len) {
            for (j, y) in b.iter().enumerate().take(len - i) {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn recip(a: &[C64], len: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); len];
        out[0] = a[0].inv();
        for k in 1..len {
            let s: C64 = (1..=k.min(a.len() - 1)).map(|j| a[j] * out[k - j]).sum();
            out[k] = -s * out[0];
        }
        out
    }
}
