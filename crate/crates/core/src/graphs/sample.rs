use rand::seq::SliceRandom;
use rand::Rng as _;

use super::construct::{cell_layout, check_sizes};
use super::{check_s_regular, Graph, PartitionedGraph};
use crate::error::{Error, Result};
use crate::quotient::QuotientSpec;
use crate::rng::{self, Rng};

/// How each block of half-edges is matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PieceStrategy {
    /// Rejection where the simple outcome is likely, sequential pairing where
    /// it is not.
    #[default]
    Auto,
    /// Redraw the whole block until it is simple. Exactly uniform.
    Rejection,
    /// Steger-Wormald style pairing of random suitable half-edges. Uniform
    /// only asymptotically, but never stalls on dense blocks.
    Sequential,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    /// Attempts per block.
    pub max_retries: usize,
    pub strategy: PieceStrategy,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions { max_retries: 10_000, strategy: PieceStrategy::Auto }
    }
}

/// Below this estimated probability of a simple outcome, `Auto` switches a
/// block to sequential pairing.
const REJECTION_THRESHOLD: f64 = 0.05;

/// Configuration-model sample with the default strategy, drawn from stream 0
/// of `seed`.
pub fn sample_configuration_model(
    spec: &QuotientSpec,
    n: &[usize],
    seed: u64,
    max_retries: usize,
) -> Result<PartitionedGraph> {
    let opts = SamplerOptions { max_retries, ..SamplerOptions::default() };
    sample_with_rng(spec, n, &mut rng::stream(seed, 0), &opts)
}

/// Blocks are matched independently: the within-cell block of cell `i` as a
/// perfect matching of its `s_ii n_i` half-edges, and the block between
/// `i < j` as a bijection between the two sides. A union of blocks is simple
/// iff every block is, so rejecting per block gives the same law as
/// rejecting the whole graph.
pub fn sample_with_rng(
    spec: &QuotientSpec,
    n: &[usize],
    rng: &mut Rng,
    opts: &SamplerOptions,
) -> Result<PartitionedGraph> {
    check_sizes(spec, n)?;
    let k = spec.k();
    let (offsets, tau) = cell_layout(n);
    let total = tau.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for i in 0..k {
        for j in i..k {
            let a = spec.s_at(i, j) as usize;
            if a == 0 {
                continue;
            }
            let b = spec.s_at(j, i) as usize;
            let side_i: Vec<usize> = (offsets[i]..offsets[i + 1]).flat_map(|v| std::iter::repeat_n(v, a)).collect();
            let edges = if i == j {
                let sequential = match opts.strategy {
                    PieceStrategy::Rejection => false,
                    PieceStrategy::Sequential => true,
                    PieceStrategy::Auto => regular_simple_probability(a) < REJECTION_THRESHOLD,
                };
                if sequential {
                    sequential_matching(&side_i, None, total, rng, opts.max_retries)
                } else {
                    rejection_matching(&side_i, None, rng, opts.max_retries)
                }
            } else {
                let side_j: Vec<usize> = (offsets[j]..offsets[j + 1]).flat_map(|v| std::iter::repeat_n(v, b)).collect();
                let sequential = match opts.strategy {
                    PieceStrategy::Rejection => false,
                    PieceStrategy::Sequential => true,
                    PieceStrategy::Auto => bipartite_simple_probability(a, b) < REJECTION_THRESHOLD,
                };
                if sequential {
                    sequential_matching(&side_i, Some(&side_j), total, rng, opts.max_retries)
                } else {
                    rejection_matching(&side_i, Some(&side_j), rng, opts.max_retries)
                }
            };
            let edges = edges.ok_or(Error::SamplingExhausted { cell_a: i, cell_b: j, attempts: opts.max_retries })?;
            for (u, v) in edges {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let pg = PartitionedGraph::new(Graph::from_sorted_adjacency(adj), tau, k)?;
    check_s_regular(&pg, spec).map_err(|v| Error::Mismatch(v.to_string()))?;
    Ok(pg)
}

/// Limit of P(simple) for a random d-regular pairing.
fn regular_simple_probability(d: usize) -> f64 {
    let d = d as f64;
    (-(d * d - 1.0) / 4.0).exp()
}

/// Limit of P(simple) for a random (a,b)-biregular bipartite pairing.
fn bipartite_simple_probability(a: usize, b: usize) -> f64 {
    (-((a as f64 - 1.0) * (b as f64 - 1.0)) / 2.0).exp()
}

/// `None` when the block has a loop or repeated pair.
fn pair_up(left: &[usize], right: Option<&[usize]>, order: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut edges: Vec<(usize, usize)> = match right {
        Some(right) => left.iter().zip(order).map(|(&u, &p)| (u, right[p])).collect(),
        None => order.chunks_exact(2).map(|c| (left[c[0]], left[c[1]])).collect(),
    };
    for e in &mut edges {
        if e.0 == e.1 {
            return None;
        }
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort_unstable();
    if edges.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(edges)
}

fn rejection_matching(
    left: &[usize],
    right: Option<&[usize]>,
    rng: &mut Rng,
    max_retries: usize,
) -> Option<Vec<(usize, usize)>> {
    let len = right.map_or(left.len(), <[usize]>::len);
    let mut order: Vec<usize> = (0..len).collect();
    for _ in 0..max_retries {
        order.shuffle(rng);
        if let Some(edges) = pair_up(left, right, &order) {
            return Some(edges);
        }
    }
    None
}

/// Consecutive unsuitable draws before falling back to enumerating the
/// remaining suitable pairs.
const DRAW_LIMIT: usize = 50;

fn sequential_matching(
    left: &[usize],
    right: Option<&[usize]>,
    total: usize,
    rng: &mut Rng,
    max_retries: usize,
) -> Option<Vec<(usize, usize)>> {
    let mut used: Vec<Vec<usize>> = vec![Vec::new(); total];
    'attempt: for _ in 0..max_retries {
        for list in &mut used {
            list.clear();
        }
        let mut a: Vec<usize> = left.to_vec();
        let mut b: Vec<usize> = right.map(<[usize]>::to_vec).unwrap_or_default();
        let mut edges = Vec::with_capacity(left.len());
        let suitable = |used: &Vec<Vec<usize>>, u: usize, v: usize| u != v && !used[u].contains(&v);
        while !a.is_empty() {
            let mut chosen = None;
            for _ in 0..DRAW_LIMIT {
                let (x, y) = draw_pair(&a, &b, right.is_some(), rng);
                let (u, v) = endpoints(&a, &b, right.is_some(), x, y);
                if suitable(&used, u, v) {
                    chosen = Some((x, y));
                    break;
                }
            }
            if chosen.is_none() {
                let pairs = suitable_pairs(&a, &b, right.is_some(), |u, v| suitable(&used, u, v));
                if pairs.is_empty() {
                    continue 'attempt;
                }
                chosen = Some(pairs[rng.gen_range(0..pairs.len())]);
            }
            let (x, y) = chosen.expect("set above");
            let (u, v) = endpoints(&a, &b, right.is_some(), x, y);
            used[u].push(v);
            used[v].push(u);
            edges.push((u.min(v), u.max(v)));
            if right.is_some() {
                a.swap_remove(x);
                b.swap_remove(y);
            } else {
                // Remove the larger index first so the smaller stays valid.
                a.swap_remove(x.max(y));
                a.swap_remove(x.min(y));
            }
        }
        edges.sort_unstable();
        return Some(edges);
    }
    None
}

fn draw_pair(a: &[usize], b: &[usize], bipartite: bool, rng: &mut Rng) -> (usize, usize) {
    if bipartite {
        (rng.gen_range(0..a.len()), rng.gen_range(0..b.len()))
    } else {
        let x = rng.gen_range(0..a.len());
        let mut y = rng.gen_range(0..a.len() - 1);
        if y >= x {
            y += 1;
        }
        (x, y)
    }
}

fn endpoints(a: &[usize], b: &[usize], bipartite: bool, x: usize, y: usize) -> (usize, usize) {
    if bipartite {
        (a[x], b[y])
    } else {
        (a[x], a[y])
    }
}

fn suitable_pairs(a: &[usize], b: &[usize], bipartite: bool, ok: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if bipartite {
        for x in 0..a.len() {
            for y in 0..b.len() {
                if ok(a[x], b[y]) {
                    out.push((x, y));
                }
            }
        }
    } else {
        for x in 0..a.len() {
            for y in x + 1..a.len() {
                if ok(a[x], a[y]) {
                    out.push((x, y));
                }
            }
        }
    }
    out
}
