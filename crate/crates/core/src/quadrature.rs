//! Adaptive quadtree quadrature over axis-aligned rectangles.
//!
//! Each cell is integrated with a tensor Gauss–Legendre rule of order 8 and
//! split into four while the coarse estimate and the sum over its children
//! disagree by more than the cell's share of the tolerance. The initial grid
//! is evaluated in parallel; results are combined in a fixed order so the
//! outcome does not depend on scheduling.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { tol: 1e-6, max_depth: 12 }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureSpec { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quad {
    pub value: C64,
    pub est_error: f64,
    pub converged: bool,
    pub cells: u64,
}

impl Quad {
    pub fn zero() -> Quad {
        Quad { value: C64::new(0.0, 0.0), est_error: 0.0, converged: true, cells: 0 }
    }

    pub fn scale(self, s: C64) -> Quad {
        Quad { value: self.value * s, est_error: self.est_error * s.norm(), ..self }
    }

    pub fn combine(self, other: Quad) -> Quad {
        Quad {
            value: self.value + other.value,
            est_error: self.est_error + other.est_error,
            converged: self.converged && other.converged,
            cells: self.cells + other.cells,
        }
    }
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

const INITIAL_GRID: usize = 4;

/// Gauss–Legendre order-8 estimate on `[a, b]` for a function of one variable.
pub fn gauss_legendre_1d<E>(a: f64, b: f64, f: &impl Fn(f64) -> Result<C64, E>) -> Result<C64, E> {
    let (m, h) = ((a + b) * 0.5, (b - a) * 0.5);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        acc += f(m + h * x)? * w;
    }
    Ok(acc * h)
}

/// Adaptive 1-D integral on `[a, b]` by interval bisection.
pub fn integrate_interval<E>(a: f64, b: f64, spec: &QuadratureSpec, f: &impl Fn(f64) -> Result<C64, E>) -> Result<Quad, E> {
    fn rec<E>(a: f64, b: f64, coarse: C64, tol: f64, depth: u32, max: u32, f: &impl Fn(f64) -> Result<C64, E>) -> Result<Quad, E> {
        let m = (a + b) * 0.5;
        let l = gauss_legendre_1d(a, m, f)?;
        let r = gauss_legendre_1d(m, b, f)?;
        let diff = (coarse - l - r).norm();
        if diff <= tol || depth >= max {
            return Ok(Quad { value: l + r, est_error: diff, converged: diff <= tol, cells: 2 });
        }
        Ok(rec(a, m, l, tol * 0.5, depth + 1, max, f)?.combine(rec(m, b, r, tol * 0.5, depth + 1, max, f)?))
    }
    let coarse = gauss_legendre_1d(a, b, f)?;
    rec(a, b, coarse, spec.tol, 0, spec.max_depth + 8, f)
}

#[derive(Clone, Copy)]
struct Cell {
    lo: C64,
    hi: C64,
}

impl Cell {
    fn area(&self) -> f64 {
        (self.hi.re - self.lo.re) * (self.hi.im - self.lo.im)
    }

    fn children(&self) -> [Cell; 4] {
        let m = (self.lo + self.hi) * 0.5;
        [
            Cell { lo: self.lo, hi: m },
            Cell { lo: C64::new(m.re, self.lo.im), hi: C64::new(self.hi.re, m.im) },
            Cell { lo: C64::new(self.lo.re, m.im), hi: C64::new(m.re, self.hi.im) },
            Cell { lo: m, hi: self.hi },
        ]
    }

    fn rule<E>(&self, f: &(impl Fn(C64) -> Result<C64, E> + Sync)) -> Result<C64, E> {
        let m = (self.lo + self.hi) * 0.5;
        let h = (self.hi - self.lo) * 0.5;
        let mut acc = C64::new(0.0, 0.0);
        for (y, wy) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let mut row = C64::new(0.0, 0.0);
            for (x, wx) in GL_NODES.iter().zip(GL_WEIGHTS) {
                row += f(C64::new(m.re + h.re * x, m.im + h.im * y))? * wx;
            }
            acc += row * wy;
        }
        Ok(acc * (h.re * h.im))
    }
}

fn refine<E>(
    cell: Cell,
    coarse: C64,
    tol_density: f64,
    depth: u32,
    max_depth: u32,
    f: &(impl Fn(C64) -> Result<C64, E> + Sync),
) -> Result<Quad, E> {
    let kids = cell.children();
    let mut vals = [C64::new(0.0, 0.0); 4];
    for (v, k) in vals.iter_mut().zip(kids.iter()) {
        *v = k.rule(f)?;
    }
    let fine = (vals[0] + vals[1]) + (vals[2] + vals[3]);
    let diff = (coarse - fine).norm();
    let allowed = tol_density * cell.area();
    if diff <= allowed || depth >= max_depth {
        return Ok(Quad { value: fine, est_error: diff, converged: diff <= allowed, cells: 4 });
    }
    let mut out = Quad::zero();
    for (k, v) in kids.iter().zip(vals) {
        out = out.combine(refine(*k, v, tol_density, depth + 1, max_depth, f)?);
    }
    Ok(out)
}

fn pairwise_sum(qs: &[Quad]) -> Quad {
    match qs.len() {
        0 => Quad::zero(),
        1 => qs[0],
        n => pairwise_sum(&qs[..n / 2]).combine(pairwise_sum(&qs[n / 2..])),
    }
}

/// `∬ f(x + iy) dx dy` over the rectangle `[lo, hi]`.
pub fn integrate_rect<E: Send>(
    lo: C64,
    hi: C64,
    spec: &QuadratureSpec,
    f: &(impl Fn(C64) -> Result<C64, E> + Sync),
) -> Result<Quad, E> {
    let total = Cell { lo, hi }.area();
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Ok(Quad::zero());
    }
    let tol_density = spec.tol / total;
    let step = (hi - lo) / INITIAL_GRID as f64;
    let cells: Vec<Cell> = (0..INITIAL_GRID * INITIAL_GRID)
        .map(|k| {
            let (i, j) = ((k % INITIAL_GRID) as f64, (k / INITIAL_GRID) as f64);
            let a = C64::new(lo.re + i * step.re, lo.im + j * step.im);
            Cell { lo: a, hi: a + step }
        })
        .collect();
    let results: Vec<Result<Quad, E>> =
        cells.par_iter().map(|c| refine(*c, c.rule(f)?, tol_density, 1, spec.max_depth, f)).collect();
    let qs = results.into_iter().collect::<Result<Vec<_>, E>>()?;
    Ok(pairwise_sum(&qs))
}
