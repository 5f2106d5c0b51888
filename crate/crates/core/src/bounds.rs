//! Eigenvalue inequalities for S-regular graphs, evaluated on concrete
//! graphs and vertex subsets.
//!
//! Every check returns a [`BoundReport`] carrying both sides of the
//! inequality. A report that does not hold points at a bug somewhere in the
//! pipeline (sampler, classification or the bound itself).

use std::io::Write;
use std::ops::RangeInclusive;

use faer::Mat;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graphs::PartitionedGraph;
use crate::linalg;
use crate::matrices::{classify, MatrixKind, SRegularMatrix};
use crate::output::float as fmt;
use crate::quotient::QuotientSpec;

/// A vertex subset `B` with its per-cell counts `|B_i|` and fractions
/// `b_i = |B_i| / n_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetProfile {
    members: Vec<bool>,
    counts: Vec<usize>,
    fractions: Vec<f64>,
    size: usize,
}

impl SubsetProfile {
    pub fn new(members: Vec<bool>, tau: &[usize], sizes: &[usize]) -> Result<Self> {
        if members.len() != tau.len() {
            return Err(Error::Argument(format!(
                "subset has length {}, graph has {} vertices",
                members.len(),
                tau.len()
            )));
        }
        let mut counts = vec![0; sizes.len()];
        for (v, &inside) in members.iter().enumerate() {
            if inside {
                *counts
                    .get_mut(tau[v])
                    .ok_or_else(|| Error::Argument(format!("vertex {v} has cell {} out of range", tau[v])))? += 1;
            }
        }
        let fractions =
            counts.iter().zip(sizes).map(|(&c, &n)| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect();
        let size = counts.iter().sum();
        Ok(SubsetProfile { members, counts, fractions, size })
    }

    pub fn from_vertices(vertices: &[usize], tau: &[usize], sizes: &[usize]) -> Result<Self> {
        let mut members = vec![false; tau.len()];
        for &v in vertices {
            *members.get_mut(v).ok_or_else(|| Error::Argument(format!("vertex {v} out of range")))? = true;
        }
        Self::new(members, tau, sizes)
    }

    /// Each vertex joins independently with a probability drawn uniformly
    /// from `[0.05, 0.95]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, tau: &[usize], sizes: &[usize]) -> Self {
        let p = rng.gen_range(0.05..=0.95);
        let members = (0..tau.len()).map(|_| rng.gen_bool(p)).collect();
        Self::new(members, tau, sizes).expect("tau consistent with sizes")
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    /// `|B_i|`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `b_i`.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// `|B| / n`.
    pub fn fraction(&self) -> f64 {
        if self.members.is_empty() {
            0.0
        } else {
            self.size as f64 / self.members.len() as f64
        }
    }

    fn describe(&self) -> String {
        format!("{}/{}", self.size, self.members.len())
    }
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub context: String,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, context: impl Into<String>) -> Self {
        let slack = rhs - lhs;
        let holds = slack >= -1e-9 * rhs.abs().max(1.0);
        BoundReport { name: name.into(), lhs, rhs, slack, holds, context: context.into() }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `name, lhs, rhs, slack, holds, context` rows.
pub fn write_bounds_csv<W: Write>(reports: &[BoundReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "name,lhs,rhs,slack,holds,context")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.name),
            fmt(r.lhs),
            fmt(r.rhs),
            fmt(r.slack),
            r.holds,
            csv_field(&r.context)
        )?;
    }
    Ok(())
}

/// `Σ_ij √(s_ij s_ji / (n_i n_j)) |B_i| |C_j|`.
pub fn expected_edges(spec: &QuotientSpec, n: &[usize], b: &SubsetProfile, c: &SubsetProfile) -> f64 {
    let k = spec.k();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let s = f64::from(spec.s_at(i, j)) * f64::from(spec.s_at(j, i));
            if s > 0.0 {
                total += (s / (n[i] as f64 * n[j] as f64)).sqrt() * b.counts[i] as f64 * c.counts[j] as f64;
            }
        }
    }
    total
}

/// `1_Bᵀ A 1_C`: ordered pairs `(u, v)` with `u ∈ B`, `v ∈ C` adjacent.
pub fn edge_incidences(g: &PartitionedGraph, b: &SubsetProfile, c: &SubsetProfile) -> usize {
    (0..g.n())
        .filter(|&u| b.contains(u))
        .map(|u| g.graph().neighbors(u).iter().filter(|&&v| c.contains(v)).count())
        .sum()
}

/// A graph together with the spectral data the bounds need.
#[derive(Debug, Clone)]
pub struct BoundsContext<'a> {
    graph: &'a PartitionedGraph,
    spec: QuotientSpec,
    sizes: Vec<usize>,
    lambda_s: f64,
    lambda_b: f64,
    top_eigenvalue: f64,
    max_bulk_cell_sum: f64,
    label: String,
}

impl<'a> BoundsContext<'a> {
    /// Assembles the adjacency matrix and classifies its spectrum.
    pub fn new(graph: &'a PartitionedGraph, spec: &QuotientSpec) -> Result<Self> {
        let plain = QuotientSpec::new(spec.s().to_vec())?;
        let matrix = SRegularMatrix::assemble(graph, &plain, MatrixKind::Adjacency)?;
        let c = classify(&matrix)?;
        let top = c.spectrum.values().last().copied().unwrap_or(f64::NAN);
        Ok(BoundsContext {
            graph,
            spec: matrix.spec().clone(),
            sizes: graph.cell_sizes(),
            lambda_s: c.lambda_s,
            lambda_b: c.lambda_b,
            top_eigenvalue: top,
            max_bulk_cell_sum: c.max_bulk_cell_sum,
            label: String::new(),
        })
    }

    /// Tag included in every report's context column.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn graph(&self) -> &PartitionedGraph {
        self.graph
    }

    /// Unweighted spec with the graph's cell sizes.
    pub fn spec(&self) -> &QuotientSpec {
        &self.spec
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    /// `|λ_max(A) − λ_S|`.
    pub fn top_eigenvalue_deviation(&self) -> f64 {
        (self.top_eigenvalue - self.lambda_s).abs()
    }

    /// Largest `|Σ_{V_i} φ|` over bulk eigenvectors.
    pub fn max_bulk_cell_sum(&self) -> f64 {
        self.max_bulk_cell_sum
    }

    pub fn profile(&self, members: Vec<bool>) -> Result<SubsetProfile> {
        SubsetProfile::new(members, self.graph.tau(), &self.sizes)
    }

    pub fn random_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> SubsetProfile {
        SubsetProfile::random(rng, self.graph.tau(), &self.sizes)
    }

    fn context(&self, rest: String) -> String {
        if self.label.is_empty() {
            rest
        } else {
            format!("{};{rest}", self.label)
        }
    }

    fn mixing_lhs(&self, b: &SubsetProfile, c: &SubsetProfile) -> f64 {
        let actual = edge_incidences(self.graph, b, c) as f64;
        (actual - expected_edges(&self.spec, &self.sizes, b, c)).abs()
    }
}

/// `Σ_v Σ_i (|N_{B_i}(v)| − b_i s_{τ(v)i})² ≤ λ_B² Σ_i b_i (1 − b_i) n_i`.
pub fn eml_neighbor_variance(ctx: &BoundsContext, b: &SubsetProfile) -> BoundReport {
    let g = ctx.graph;
    let k = ctx.spec.k();
    let mut lhs = 0.0;
    let mut counts = vec![0usize; k];
    for v in 0..g.n() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &u in g.graph().neighbors(v) {
            if b.contains(u) {
                counts[g.cell_of(u)] += 1;
            }
        }
        let cell = g.cell_of(v);
        for i in 0..k {
            let d = counts[i] as f64 - b.fractions[i] * f64::from(ctx.spec.s_at(cell, i));
            lhs += d * d;
        }
    }
    let rhs = ctx.lambda_b.powi(2)
        * (0..k).map(|i| b.fractions[i] * (1.0 - b.fractions[i]) * ctx.sizes[i] as f64).sum::<f64>();
    BoundReport::new("eml_neighbor_variance", lhs, rhs, ctx.context(format!("B={}", b.describe())))
}

/// `||E(B,C)| − E| ≤ λ_B √(|B||C|)`.
pub fn eml_classic(ctx: &BoundsContext, b: &SubsetProfile, c: &SubsetProfile) -> BoundReport {
    let rhs = ctx.lambda_b * ((b.len() * c.len()) as f64).sqrt();
    BoundReport::new("eml_classic", ctx.mixing_lhs(b, c), rhs, pair_context(ctx, b, c))
}

/// `||E(B,C)| − E| ≤ λ_B √(Σ_ij |B_i||C_j| (1 − b_i)(1 − c_j))`.
pub fn eml_tight(ctx: &BoundsContext, b: &SubsetProfile, c: &SubsetProfile) -> BoundReport {
    let side =
        |p: &SubsetProfile| (0..p.counts.len()).map(|i| p.counts[i] as f64 * (1.0 - p.fractions[i])).sum::<f64>();
    let rhs = ctx.lambda_b * (side(b) * side(c)).max(0.0).sqrt();
    BoundReport::new("eml_tight", ctx.mixing_lhs(b, c), rhs, pair_context(ctx, b, c))
}

/// `||E(B,C)| − E| ≤ λ_B n (b Σ_i c_i (1 − c_i))^{1/2}` with `b = |B|/n`.
pub fn eml_scaled(ctx: &BoundsContext, b: &SubsetProfile, c: &SubsetProfile) -> BoundReport {
    let spread: f64 = c.fractions.iter().map(|&x| x * (1.0 - x)).sum();
    let rhs = ctx.lambda_b * ctx.n() as f64 * (b.fraction() * spread).max(0.0).sqrt();
    BoundReport::new("eml_scaled", ctx.mixing_lhs(b, c), rhs, pair_context(ctx, b, c))
}

fn pair_context(ctx: &BoundsContext, b: &SubsetProfile, c: &SubsetProfile) -> String {
    ctx.context(format!("B={};C={}", b.describe(), c.describe()))
}

/// `λ_S (1 − min c_i) + λ_B min c_i`.
pub fn induced_complement_rhs(ctx: &BoundsContext, c: &SubsetProfile) -> f64 {
    let cmin = c.fractions.iter().copied().fold(f64::INFINITY, f64::min);
    ctx.lambda_s * (1.0 - cmin) + ctx.lambda_b * cmin
}

/// Largest adjacency eigenvalue of the subgraph induced on `V \ C`.
pub fn induced_complement_bound(ctx: &BoundsContext, c: &SubsetProfile) -> Result<BoundReport> {
    let keep: Vec<usize> = (0..ctx.n()).filter(|&v| !c.contains(v)).collect();
    if keep.is_empty() {
        return Err(Error::Argument("induced complement bound needs C to be a proper subset".into()));
    }
    let mut index = vec![usize::MAX; ctx.n()];
    for (i, &v) in keep.iter().enumerate() {
        index[v] = i;
    }
    let mut a = Mat::<f64>::zeros(keep.len(), keep.len());
    for (i, &v) in keep.iter().enumerate() {
        for &u in ctx.graph.graph().neighbors(v) {
            if index[u] != usize::MAX {
                a.write(i, index[u], 1.0);
            }
        }
    }
    let lhs = linalg::sym_eigenvalues(&a).last().copied().unwrap_or(f64::NAN);
    let rhs = induced_complement_rhs(ctx, c);
    Ok(BoundReport::new("induced_complement_bound", lhs, rhs, ctx.context(format!("C={}", c.describe()))))
}

/// `1ᵀ A_{C̄}^ℓ 1 ≤ m (λ_S (1 − min c_i) + λ_B min c_i)^ℓ`, `m = n − |C|`.
pub fn walks_avoiding_bound(ctx: &BoundsContext, c: &SubsetProfile, ell: usize) -> BoundReport {
    let g = ctx.graph.graph();
    let mut x: Vec<f64> = (0..ctx.n()).map(|v| if c.contains(v) { 0.0 } else { 1.0 }).collect();
    for _ in 0..ell {
        x = (0..ctx.n())
            .map(|v| if c.contains(v) { 0.0 } else { g.neighbors(v).iter().map(|&u| x[u]).sum() })
            .collect();
    }
    let lhs: f64 = x.iter().sum();
    let m = (ctx.n() - c.len()) as f64;
    let rhs = m * induced_complement_rhs(ctx, c).powi(ell as i32);
    BoundReport::new("walks_avoiding_bound", lhs, rhs, ctx.context(format!("C={};ell={ell}", c.describe())))
}

/// Finite-size lower bound on the largest bulk eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct AlonBoppana {
    /// Best value over the admissible `ℓ`; `None` when every radicand was
    /// non-positive.
    pub value: Option<f64>,
    pub best_ell: Option<usize>,
    pub per_ell: Vec<(usize, Option<f64>)>,
    /// Asymptotic target `√λ_S`.
    pub target: f64,
}

impl AlonBoppana {
    /// `value ≤ λ_B` as a report (a missing value is treated as 0).
    pub fn check(&self, lambda_b: f64, context: impl Into<String>) -> BoundReport {
        BoundReport::new("alon_boppana_lower", self.value.unwrap_or(0.0), lambda_b, context)
    }
}

/// `W̃_i^{(ℓ)} = (S^ℓ 1)(i)`: walks of length `ℓ` from a root in cell `i`.
pub fn symmetric_walk_counts(spec: &QuotientSpec, ell: usize) -> Vec<f64> {
    let k = spec.k();
    let mut w = vec![1.0; k];
    for _ in 0..ell {
        w = (0..k).map(|i| (0..k).map(|j| f64::from(spec.s_at(i, j)) * w[j]).sum()).collect();
    }
    w
}

/// Maximum over `ℓ ∈ ells` of
/// `((1/n) Σ_i n_i W̃_i^{(ℓ)} − (1/n) Σ_i λ_{S_i}^{2ℓ})^{1/(2ℓ)}`.
/// Values of `ℓ` with a non-positive radicand (or `ℓ = 0`) are skipped.
pub fn alon_boppana_lower(spec: &QuotientSpec, n: &[usize], ells: RangeInclusive<usize>) -> Result<AlonBoppana> {
    let plain = QuotientSpec::new(spec.s().to_vec())?.with_sizes(n.to_vec())?;
    let q = crate::quotient::quotient_eigen(&plain)?;
    let total: usize = n.iter().sum();
    let total = total as f64;
    let mut per_ell = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for ell in ells {
        if ell == 0 {
            continue;
        }
        let w = symmetric_walk_counts(&plain, ell);
        let walks: f64 = n.iter().zip(&w).map(|(&ni, wi)| ni as f64 * wi).sum();
        let top: f64 = q.eigenvalues.iter().map(|l| l.powi(2 * ell as i32)).sum();
        let radicand = (walks - top) / total;
        // Cancellation noise must not turn into a spurious positive bound.
        let value = (radicand > 1e-12 * (walks + top) / total).then(|| radicand.powf(1.0 / (2 * ell) as f64));
        if let Some(v) = value {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, ell));
            }
        }
        per_ell.push((ell, value));
    }
    Ok(AlonBoppana {
        value: best.map(|b| b.0),
        best_ell: best.map(|b| b.1),
        per_ell,
        target: q.lambda_s.max(0.0).sqrt(),
    })
}

/// `1..=⌈2 ln n⌉`, enough to pass the point where `λ_S^ℓ` overtakes `n`
/// for every connected spec.
pub fn default_ell_range(n_total: usize) -> RangeInclusive<usize> {
    let top = (2.0 * (n_total.max(2) as f64).ln()).ceil() as usize;
    1..=top.max(1)
}

pub const DIAMETER_CAP: usize = 10_000;

/// Least `m` such that every cell pair `(i, j)` has some `t ≤ m` with
/// `√((S^t)_ij (S^t)_ji) > (n − 1) λ_B^t`; with `λ_B = 0` the condition is
/// `(S^t)_ij > 0` for `t ≥ 1`. `None` if no such `m ≤ cap` exists.
pub fn diameter_bound(spec: &QuotientSpec, n_total: usize, lambda_s: f64, lambda_b: f64, cap: usize) -> Option<usize> {
    let k = spec.k();
    if k == 0 || lambda_s <= 0.0 {
        return None;
    }
    let s: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(spec.s_at(i, j)) / lambda_s).collect()).collect();
    // M_t = (S / λ_S)^t keeps entries bounded; the growth lives in t·ln(λ_S/λ_B).
    let mut m: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let threshold = ((n_total.max(1) - 1) as f64).ln();
    let rate = if lambda_b > 0.0 { (lambda_s / lambda_b).ln() } else { f64::INFINITY };
    let mut done = vec![vec![false; k]; k];
    let mut remaining = k * k;
    for t in 0..=cap {
        for i in 0..k {
            for j in 0..k {
                if done[i][j] {
                    continue;
                }
                let prod = m[i][j] * m[j][i];
                // λ_B^0 = 1 even when λ_B = 0.
                let growth = if t == 0 { 0.0 } else { t as f64 * rate };
                let ok = prod > 0.0 && 0.5 * prod.ln() + growth > threshold;
                if ok {
                    done[i][j] = true;
                    remaining -= 1;
                }
            }
        }
        if remaining == 0 {
            return Some(t);
        }
        m = (0..k).map(|i| (0..k).map(|j| (0..k).map(|l| m[i][l] * s[l][j]).sum()).collect()).collect();
    }
    None
}

/// Exact diameter against the spectral bound `m*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterReport {
    pub diameter: usize,
    pub m_star: Option<usize>,
    /// `m* / ln n`.
    pub log_ratio: Option<f64>,
    /// `λ_B` vanished and `m*` reduces to a positivity condition.
    pub positivity_only: bool,
    pub report: BoundReport,
}

pub fn diameter_check(ctx: &BoundsContext) -> Result<DiameterReport> {
    let diameter = ctx.graph.graph().diameter()?;
    let positivity_only = ctx.lambda_b <= 1e-12 * ctx.lambda_s.max(1.0);
    let lambda_b = if positivity_only { 0.0 } else { ctx.lambda_b };
    let m_star = diameter_bound(&ctx.spec, ctx.n(), ctx.lambda_s, lambda_b, DIAMETER_CAP);
    let n = ctx.n() as f64;
    let log_ratio = m_star.filter(|_| ctx.n() > 1).map(|m| m as f64 / n.ln());
    let rhs = m_star.map_or(f64::INFINITY, |m| m as f64);
    let tag = if positivity_only { "lambda_b=0" } else { "lambda_b>0" };
    let report = BoundReport::new("diameter_check", diameter as f64, rhs, ctx.context(format!("n={};{tag}", ctx.n())));
    Ok(DiameterReport { diameter, m_star, log_ratio, positivity_only, report })
}

/// All subset-based checks for one random `(B, C)` pair, walks up to
/// length `max_ell`.
pub fn subset_trial<R: Rng + ?Sized>(ctx: &BoundsContext, rng: &mut R, max_ell: usize) -> Result<Vec<BoundReport>> {
    let b = ctx.random_profile(rng);
    let c = ctx.random_profile(rng);
    let mut out =
        vec![eml_neighbor_variance(ctx, &b), eml_classic(ctx, &b, &c), eml_tight(ctx, &b, &c), eml_scaled(ctx, &b, &c)];
    if c.len() < ctx.n() {
        out.push(induced_complement_bound(ctx, &c)?);
    }
    let ell = rng.gen_range(0..=max_ell);
    out.push(walks_avoiding_bound(ctx, &c, ell));
    Ok(out)
}

/// Per-graph checks (diameter, Alon–Boppana) followed by `subsets` random
/// subset trials. The diameter check is skipped on disconnected graphs.
pub fn verify_graph<R: Rng + ?Sized>(ctx: &BoundsContext, subsets: usize, rng: &mut R) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    if ctx.graph.graph().is_connected() {
        out.push(diameter_check(ctx)?.report);
    }
    let ab = alon_boppana_lower(&ctx.spec, &ctx.sizes, default_ell_range(ctx.n()))?;
    out.push(
        ab.check(ctx.lambda_b, ctx.context(format!("ell={}", ab.best_ell.map_or("none".into(), |l| l.to_string())))),
    );
    for _ in 0..subsets {
        out.extend(subset_trial(ctx, rng, 6)?);
    }
    Ok(out)
}
