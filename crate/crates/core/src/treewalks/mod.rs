//! Closed-walk counts on the S-regular tree, their generating functions and
//! the limiting spectral densities recovered from them.
//!
//! Weighted walks pick up `b(i)` for a loop at a vertex of cell `i` and
//! `F_ij` for each step between cells `i` and `j`. Every edge of a closed walk
//! in a tree is crossed an even number of times, once each way per
//! excursion, so an excursion along an `i`-`j` edge contributes `F_ij^2`.

mod density;
mod gf;

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use num::{BigRational, One, Zero};

use crate::error::Result;
use crate::graphs::TreeBall;
use crate::quotient::QuotientSpec;

pub use density::{
    density_curve, integrate_trapezoid, moment_check, DensityCurve, DensityOptions, MomentRow, PointStatus,
    DEFAULT_EPSILONS,
};
pub use gf::{stieltjes, GfEvaluator, GfSolution};

/// Ring operations needed to count weighted walks.
pub trait WalkScalar: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + Send + Sync {}

impl<T> WalkScalar for T where T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + Send + Sync {}

/// Vertex weights `b` and edge weights `F` in some scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    pub b: Vec<T>,
    pub f: Vec<Vec<T>>,
}

impl Weights<f64> {
    pub fn float(spec: &QuotientSpec) -> Self {
        Weights { b: spec.b().to_vec(), f: spec.f().to_vec() }
    }
}

impl Weights<i64> {
    /// `None` unless every `b(i)` and `F_ij` is an integer.
    pub fn integral(spec: &QuotientSpec) -> Option<Self> {
        let conv = |x: f64| (x.fract() == 0.0 && x.abs() < 2f64.powi(53)).then_some(x as i64);
        Some(Weights {
            b: spec.b().iter().map(|&x| conv(x)).collect::<Option<_>>()?,
            f: spec.f().iter().map(|r| r.iter().map(|&x| conv(x)).collect::<Option<_>>()).collect::<Option<_>>()?,
        })
    }
}

impl Weights<BigRational> {
    /// Exact rational images of the stored floats.
    pub fn rational(spec: &QuotientSpec) -> Option<Self> {
        let conv = BigRational::from_float;
        Some(Weights {
            b: spec.b().iter().map(|&x| conv(x)).collect::<Option<_>>()?,
            f: spec.f().iter().map(|r| r.iter().map(|&x| conv(x)).collect::<Option<_>>()).collect::<Option<_>>()?,
        })
    }
}

/// `ω_i^{(ℓ)}` and `ω_{ij}^{(ℓ)}` for `ℓ ≤ len`.
///
/// `ω_{ij}` counts closed walks from a vertex of cell `j` in the tree with
/// the edge toward one neighbour in cell `i` removed.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTable<T> {
    len: usize,
    cells: Vec<Vec<T>>,
    pairs: BTreeMap<(usize, usize), Vec<T>>,
}

impl<T: Clone> WalkTable<T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn omega(&self, cell: usize, ell: usize) -> T {
        self.cells[cell][ell].clone()
    }

    pub fn cell(&self, cell: usize) -> &[T] {
        &self.cells[cell]
    }

    /// `None` when `s_ij = 0`.
    pub fn omega_pair(&self, i: usize, j: usize, ell: usize) -> Option<T> {
        self.pairs.get(&(i, j)).map(|v| v[ell].clone())
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), &[T])> {
        self.pairs.iter().map(|(&k, v)| (k, v.as_slice()))
    }
}

/// Dynamic program over walk length: a closed walk is either all loops, or
/// `r` loops, one excursion of `t` steps into a neighbour's branch, and a
/// closed walk of the remaining `s = ℓ - 2 - r - t` steps.
pub fn walk_recurrence<T: WalkScalar>(spec: &QuotientSpec, w: &Weights<T>, len: usize) -> WalkTable<T> {
    let k = spec.k();
    let f2 = |a: usize, b: usize| w.f[a][b].clone() * w.f[a][b].clone();
    let from_u32 = |x: u32| (0..x).fold(T::zero(), |acc, _| acc + T::one());
    let pair_keys: Vec<(usize, usize)> =
        (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|&(i, j)| spec.s_at(i, j) > 0).collect();
    // Multiplicity-weighted excursion factors.
    let cell_terms: Vec<Vec<(usize, T)>> = (0..k)
        .map(|i| (0..k).filter(|&j| spec.s_at(i, j) > 0).map(|j| (j, from_u32(spec.s_at(i, j)) * f2(i, j))).collect())
        .collect();
    let pair_terms: BTreeMap<(usize, usize), Vec<(usize, T)>> = pair_keys
        .iter()
        .map(|&(i, j)| {
            let terms = (0..k)
                .filter_map(|m| {
                    let mult = spec.s_at(j, m) - u32::from(m == i);
                    (mult > 0).then(|| (m, from_u32(mult) * f2(j, m)))
                })
                .collect();
            ((i, j), terms)
        })
        .collect();

    let powers = |base: &T| {
        let mut p = vec![T::one()];
        for l in 1..=len {
            let next = p[l - 1].clone() * base.clone();
            p.push(next);
        }
        p
    };
    let bpow: Vec<Vec<T>> = w.b.iter().map(powers).collect();

    let mut cells: Vec<Vec<T>> = vec![Vec::with_capacity(len + 1); k];
    let mut pairs: BTreeMap<(usize, usize), Vec<T>> =
        pair_keys.iter().map(|&key| (key, Vec::with_capacity(len + 1))).collect();
    // conv[x][n] = Σ_{r+s=n} b^r ω_x^{(s)}, with x a cell or a pair.
    let mut cell_conv: Vec<Vec<T>> = vec![Vec::new(); k];
    let mut pair_conv: BTreeMap<(usize, usize), Vec<T>> = pair_keys.iter().map(|&key| (key, Vec::new())).collect();

    // Σ_{n+t=ℓ-2} conv[n] ω_other^{(t)}
    let inner = |conv: &[T], other: &[T], ell: usize| {
        let mut acc = T::zero();
        for t in 0..=ell - 2 {
            acc = acc + conv[ell - 2 - t].clone() * other[t].clone();
        }
        acc
    };

    for ell in 0..=len {
        let mut new_cells = Vec::with_capacity(k);
        for i in 0..k {
            let mut v = bpow[i][ell].clone();
            if ell >= 2 {
                for (j, coef) in &cell_terms[i] {
                    v = v + coef.clone() * inner(&cell_conv[i], &pairs[&(i, *j)], ell);
                }
            }
            new_cells.push(v);
        }
        let mut new_pairs = Vec::with_capacity(pair_keys.len());
        for &(i, j) in &pair_keys {
            let mut v = bpow[j][ell].clone();
            if ell >= 2 {
                for (m, coef) in &pair_terms[&(i, j)] {
                    v = v + coef.clone() * inner(&pair_conv[&(i, j)], &pairs[&(j, *m)], ell);
                }
            }
            new_pairs.push(v);
        }
        for (i, v) in new_cells.into_iter().enumerate() {
            cells[i].push(v);
            let c = (0..=ell).fold(T::zero(), |acc, r| acc + bpow[i][r].clone() * cells[i][ell - r].clone());
            cell_conv[i].push(c);
        }
        for (&key, v) in pair_keys.iter().zip(new_pairs) {
            let seq = pairs.get_mut(&key).expect("key present");
            seq.push(v);
            let j = key.1;
            let c = (0..=ell).fold(T::zero(), |acc, r| acc + bpow[j][r].clone() * seq[ell - r].clone());
            pair_conv.get_mut(&key).expect("key present").push(c);
        }
    }
    WalkTable { len, cells, pairs }
}

/// Weighted closed walks of every length `≤ len` at the root of a tree
/// ball of radius `⌈len/2⌉`, by repeated application of the tree matrix:
/// `ω^{(2h)} = ⟨M^h e, M^h e⟩`, `ω^{(2h+1)} = ⟨M^h e, M^{h+1} e⟩`.
///
/// A walk of length `ℓ` never leaves the ball of radius `⌈ℓ/2⌉`, so the
/// truncation is exact. Requires symmetric `F`.
pub fn brute_force_tree_walks_upto<T: WalkScalar>(
    spec: &QuotientSpec,
    w: &Weights<T>,
    cell: usize,
    len: usize,
    cap: usize,
) -> Result<Vec<T>> {
    let ball = TreeBall::build(spec, cell, len.div_ceil(2), cap)?;
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
    let mut cur = vec![T::zero(); ball.n()];
    cur[0] = T::one();
    let mut out = Vec::with_capacity(len + 1);
    out.push(T::one());
    for ell in 1..=len {
        if ell % 2 == 1 {
            let next = ball.apply(w, &cur);
            out.push(dot(&cur, &next));
            cur = next;
        } else {
            out.push(dot(&cur, &cur));
        }
    }
    Ok(out)
}

/// Single-length convenience over [`brute_force_tree_walks_upto`].
pub fn brute_force_tree_walks<T: WalkScalar>(
    spec: &QuotientSpec,
    w: &Weights<T>,
    cell: usize,
    ell: usize,
) -> Result<T> {
    Ok(brute_force_tree_walks_upto(spec, w, cell, ell, crate::graphs::DEFAULT_TREE_CAP)?.pop().expect("non-empty"))
}
