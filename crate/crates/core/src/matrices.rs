//! S-regular matrices on finite graphs and their spectra.

use std::io::Write;
use std::str::FromStr;

use faer::Mat;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graphs::{check_s_regular, sample_with_rng, PartitionedGraph, SamplerOptions};
use crate::linalg;
use crate::output::float as fmt;
use crate::quotient::{quotient_eigen, QuotientEigen, QuotientSpec};
use crate::rng;

/// Which weights `(b, F)` to put on the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixKind {
    #[default]
    Adjacency,
    /// `D - A`: `b_i = Σ_j s_ij`, `F = -1`.
    Laplacian,
    /// `I - D^{-1/2} A D^{-1/2}`: `b = 1`, `F_ij = -1/√(d_i d_j)`.
    NormalizedLaplacian,
    /// The spec's own `b` and `F`.
    Custom,
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(MatrixKind::Adjacency),
            "laplacian" => Ok(MatrixKind::Laplacian),
            "normalized-laplacian" => Ok(MatrixKind::NormalizedLaplacian),
            "custom" => Ok(MatrixKind::Custom),
            other => Err(Error::Argument(format!(
                "unknown matrix kind `{other}` (adjacency, laplacian, normalized-laplacian, custom)"
            ))),
        }
    }
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixKind::Adjacency => "adjacency",
            MatrixKind::Laplacian => "laplacian",
            MatrixKind::NormalizedLaplacian => "normalized-laplacian",
            MatrixKind::Custom => "custom",
        })
    }
}

impl MatrixKind {
    /// `spec` with this kind's weights installed.
    pub fn weighted(self, spec: &QuotientSpec) -> Result<QuotientSpec> {
        let k = spec.k();
        let d: Vec<f64> = spec.degrees().iter().map(|&x| x as f64).collect();
        let (b, f) = match self {
            MatrixKind::Adjacency => (vec![0.0; k], vec![vec![1.0; k]; k]),
            MatrixKind::Laplacian => (d.clone(), vec![vec![-1.0; k]; k]),
            MatrixKind::NormalizedLaplacian => {
                if d.contains(&0.0) {
                    return Err(Error::Argument("normalized Laplacian needs positive degrees".into()));
                }
                (vec![1.0; k], (0..k).map(|i| (0..k).map(|j| -1.0 / (d[i] * d[j]).sqrt()).collect()).collect())
            }
            MatrixKind::Custom => return Ok(spec.clone()),
        };
        spec.clone().with_weights(b, f)
    }
}

/// Symmetric `n×n` matrix with `T_uu = b(τ(u))` and `T_uv = F_{τ(u)τ(v)}`
/// on edges, stored row-compressed.
#[derive(Debug, Clone)]
pub struct SRegularMatrix {
    spec: QuotientSpec,
    tau: Vec<usize>,
    sizes: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SRegularMatrix {
    /// Fails with [`Error::Mismatch`] unless `g` is S-regular for `spec`.
    pub fn assemble(g: &PartitionedGraph, spec: &QuotientSpec, kind: MatrixKind) -> Result<Self> {
        check_s_regular(g, spec).map_err(|v| Error::Mismatch(v.to_string()))?;
        let spec = kind.weighted(spec)?.with_sizes(g.cell_sizes())?;
        let n = g.n();
        let tau = g.tau().to_vec();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for u in 0..n {
            let a = tau[u];
            let mut diag_done = false;
            for &v in g.graph().neighbors(u) {
                if !diag_done && v > u {
                    cols.push(u);
                    vals.push(spec.b()[a]);
                    diag_done = true;
                }
                cols.push(v);
                vals.push(spec.f()[a][tau[v]]);
            }
            if !diag_done {
                cols.push(u);
                vals.push(spec.b()[a]);
            }
            row_ptr.push(cols.len());
        }
        Ok(SRegularMatrix { spec, tau, sizes: g.cell_sizes(), row_ptr, cols, vals })
    }

    pub fn n(&self) -> usize {
        self.tau.len()
    }

    /// The weighted spec (with cell sizes) this matrix was assembled from.
    pub fn spec(&self) -> &QuotientSpec {
        &self.spec
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn cell_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Nonzero `(column, value)` pairs of row `u`, columns increasing.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[u]..self.row_ptr[u + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let r = self.row_ptr[u]..self.row_ptr[u + 1];
        match self.cols[r.clone()].binary_search(&v) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|u| self.row(u).map(|(v, t)| t * x[v]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out = vec![vec![0.0; n]; n];
        for (u, row) in out.iter_mut().enumerate() {
            for (v, t) in self.row(u) {
                row[v] = t;
            }
        }
        out
    }

    fn to_faer(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n(), self.n());
        for u in 0..self.n() {
            for (v, t) in self.row(u) {
                m.write(u, v, t);
            }
        }
        m
    }

    /// Dense eigendecomposition, `O(n³)`.
    pub fn eigen(&self) -> Spectrum {
        let (values, vectors) = linalg::sym_eigen(&self.to_faer());
        Spectrum { values, vectors }
    }

    /// Eigenvalues only, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.to_faer())
    }
}

/// `(T^ℓ)_{vv}` by repeated products with `e_v`.
pub fn weighted_walk_count(t: &SRegularMatrix, v: usize, ell: usize) -> f64 {
    let mut x = vec![0.0; t.n()];
    x[v] = 1.0;
    for _ in 0..ell {
        x = t.matvec(&x);
    }
    x[v]
}

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `v` of eigenvector `j`.
    pub fn entry(&self, v: usize, j: usize) -> f64 {
        self.vectors.read(v, j)
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.vectors.nrows()).map(|v| self.vectors.read(v, j)).collect()
    }

    /// `Σ_{v ∈ V_c} φ_j(v)` for every cell `c`.
    pub fn cell_sums(&self, j: usize, tau: &[usize], k: usize) -> Vec<f64> {
        let mut s = vec![0.0; k];
        for (v, &c) in tau.iter().enumerate() {
            s[c] += self.vectors.read(v, j);
        }
        s
    }
}

/// Spectrum split into the `k` lifted quotient eigenpairs and the bulk.
#[derive(Debug, Clone)]
pub struct ClassifiedSpectrum {
    pub spectrum: Spectrum,
    /// Matched to the quotient eigenvalues in descending order.
    pub s_indices: Vec<usize>,
    /// Increasing.
    pub bulk_indices: Vec<usize>,
    pub quotient: QuotientEigen,
    /// Largest S-eigenvalue.
    pub lambda_s: f64,
    /// Largest bulk eigenvalue in absolute value (0 when there is no bulk).
    pub lambda_b: f64,
    /// Bulk eigenvalue attaining `lambda_b`; positive on ties.
    pub lambda_b_signed: f64,
    /// `max |Σ_{V_i} φ|` over bulk eigenvectors and cells.
    pub max_bulk_cell_sum: f64,
    /// Projection score `‖Qᵀφ‖²` per eigenvector, `Q` the normalized cell
    /// indicators.
    pub scores: Vec<f64>,
}

impl ClassifiedSpectrum {
    pub fn is_s_index(&self, j: usize) -> bool {
        self.s_indices.contains(&j)
    }

    pub fn bulk_values(&self) -> Vec<f64> {
        self.bulk_indices.iter().map(|&j| self.spectrum.values[j]).collect()
    }

    /// `index, value, class` rows.
    pub fn write_eigenvalues_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,value,class")?;
        for (j, &v) in self.spectrum.values.iter().enumerate() {
            let class = if self.is_s_index(j) { "S" } else { "bulk" };
            writeln!(out, "{j},{},{class}", fmt(v))?;
        }
        Ok(())
    }
}

/// Relative gap below which eigenvalues are treated as one eigenspace.
const CLUSTER_TOL: f64 = 1e-8;
/// Relative distance allowed between a quotient eigenvalue and its match.
const MATCH_TOL: f64 = 1e-6;

pub fn classify(t: &SRegularMatrix) -> Result<ClassifiedSpectrum> {
    classify_spectrum(t, t.eigen())
}

/// Each numerical eigenspace is rotated so that its basis splits into
/// directions inside the span of the cell indicators (lifted quotient
/// eigenvectors) and directions orthogonal to it (zero cell sums). Quotient
/// eigenvalues, largest first, are then matched greedily to the unused
/// eigenvector of highest projection score within tolerance.
pub fn classify_spectrum(t: &SRegularMatrix, mut spectrum: Spectrum) -> Result<ClassifiedSpectrum> {
    let n = t.n();
    let k = t.spec.k();
    let tau = &t.tau;
    let sizes = &t.sizes;
    let scale = spectrum.values.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let inv_sqrt: Vec<f64> = sizes.iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
    let mut scores = vec![0.0; n];

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && spectrum.values[end] - spectrum.values[end - 1] <= CLUSTER_TOL * scale {
            end += 1;
        }
        let m = end - start;
        let mut proj = Mat::<f64>::zeros(k, m);
        for c in 0..m {
            for (cell, s) in spectrum.cell_sums(start + c, tau, k).into_iter().enumerate() {
                proj.write(cell, c, s * inv_sqrt[cell]);
            }
        }
        if m == 1 {
            scores[start] = (0..k).map(|i| proj.read(i, 0).powi(2)).sum();
        } else {
            let (sing, v) = linalg::right_singular_vectors(&proj);
            let block = spectrum.vectors.as_ref().subcols(start, m) * v.as_ref();
            for c in 0..m {
                for r in 0..n {
                    spectrum.vectors.write(r, start + c, block.read(r, c));
                }
                scores[start + c] = sing.get(c).map_or(0.0, |s| s * s);
            }
        }
        start = end;
    }

    let quotient = quotient_eigen(&t.spec)?;
    let mut used = vec![false; n];
    let mut s_indices = Vec::with_capacity(k);
    for &mu in &quotient.eigenvalues {
        let best =
            (0..n).filter(|&j| !used[j] && (spectrum.values[j] - mu).abs() <= MATCH_TOL * scale).max_by(|&a, &b| {
                scores[a]
                    .partial_cmp(&scores[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| (spectrum.values[b] - mu).abs().total_cmp(&(spectrum.values[a] - mu).abs()))
            });
        match best {
            Some(j) if scores[j] > 0.5 => {
                used[j] = true;
                s_indices.push(j);
            }
            Some(j) => {
                return Err(Error::Matching(format!(
                    "quotient eigenvalue {mu} matched eigenvector {j} with projection score {}",
                    scores[j]
                )))
            }
            None => return Err(Error::Matching(format!("no eigenvalue within tolerance of quotient eigenvalue {mu}"))),
        }
    }
    let bulk_indices: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    let mut max_bulk_cell_sum: f64 = 0.0;
    for &j in &bulk_indices {
        for s in spectrum.cell_sums(j, tau, k) {
            max_bulk_cell_sum = max_bulk_cell_sum.max(s.abs());
        }
    }
    if max_bulk_cell_sum > 1e-8 * (n as f64).sqrt() {
        return Err(Error::Matching(format!("bulk eigenvector has cell sum {max_bulk_cell_sum}")));
    }
    let lambda_b_signed = bulk_indices
        .iter()
        .map(|&j| spectrum.values[j])
        .max_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)))
        .unwrap_or(0.0);
    let lambda_s = s_indices.iter().map(|&j| spectrum.values[j]).fold(f64::NEG_INFINITY, f64::max);
    Ok(ClassifiedSpectrum {
        spectrum,
        s_indices,
        bulk_indices,
        quotient,
        lambda_s,
        lambda_b: lambda_b_signed.abs(),
        lambda_b_signed,
        max_bulk_cell_sum,
        scores,
    })
}

/// Normalized eigenvalue histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub below: f64,
    pub above: f64,
}

/// Each eigenvalue adds `1/n` to its bin `[e_b, e_{b+1})`; the last bin is
/// closed on the right.
pub fn spectral_density_histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Argument("need at least one bin".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Argument(format!("empty histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
    let w = 1.0 / values.len().max(1) as f64;
    let mut mass = vec![0.0; bins];
    let (mut below, mut above) = (0.0, 0.0);
    for &x in values {
        if x < lo {
            below += w;
        } else if x > hi {
            above += w;
        } else {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            mass[b] += w;
        }
    }
    Ok(Histogram { edges, mass, below, above })
}

impl Histogram {
    /// `bin_left, bin_right, mass`; out-of-range mass appears as the first
    /// and last rows with infinite edges.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,mass")?;
        let last = self.edges.len() - 1;
        writeln!(out, "-inf,{},{}", fmt(self.edges[0]), fmt(self.below))?;
        for (b, m) in self.mass.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt(self.edges[b]), fmt(self.edges[b + 1]), fmt(*m))?;
        }
        writeln!(out, "{},inf,{}", fmt(self.edges[last]), fmt(self.above))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStat {
    pub index: usize,
    pub lambda: f64,
    pub cell: usize,
    /// `Σ_{v ∈ V_i} φ(v)²`
    pub raw: f64,
    /// `(n / n_i) · raw`
    pub scaled: f64,
    /// `Σ_{v ∈ V_i} φ(v)`
    pub cellsum: f64,
}

pub fn cell_sum_squares(spectrum: &Spectrum, tau: &[usize], sizes: &[usize]) -> Vec<CellStat> {
    let k = sizes.len();
    let n = tau.len() as f64;
    let mut rows = Vec::with_capacity(spectrum.len() * k);
    for j in 0..spectrum.len() {
        let mut raw = vec![0.0; k];
        let mut sum = vec![0.0; k];
        for (v, &c) in tau.iter().enumerate() {
            let x = spectrum.entry(v, j);
            raw[c] += x * x;
            sum[c] += x;
        }
        for c in 0..k {
            rows.push(CellStat {
                index: j,
                lambda: spectrum.values[j],
                cell: c,
                raw: raw[c],
                scaled: n / sizes[c] as f64 * raw[c],
                cellsum: sum[c],
            });
        }
    }
    rows
}

/// `lambda, cell, raw, scaled, cellsum` rows (cells 1-based, as in the
/// other CSV headers).
pub fn write_cellstats_csv<W: Write>(rows: &[CellStat], mut out: W) -> std::io::Result<()> {
    writeln!(out, "lambda,cell,raw,scaled,cellsum")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", fmt(r.lambda), r.cell + 1, fmt(r.raw), fmt(r.scaled), fmt(r.cellsum))?;
    }
    Ok(())
}

/// `max |J_m - Σ_i λ_i^m ψ̄_i ψ̄_iᵀ / ‖ψ̄_i‖²|` for the unweighted `S` on cell
/// sizes `n`, where `(J_m)_{uv} = (S^m)_{τ(u)τ(v)} / n_{τ(v)}`. Both sides are
/// constant on cell blocks, so the comparison runs on `k×k` blocks.
pub fn j_matrix_check(spec: &QuotientSpec, n: &[usize], m: u32) -> Result<f64> {
    let k = spec.k();
    let plain = QuotientSpec::new(spec.s().to_vec())?.with_sizes(n.to_vec())?;
    let q = quotient_eigen(&plain)?;
    let s: Vec<Vec<f64>> = spec.s().iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let mut pow: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..m {
        pow = (0..k).map(|i| (0..k).map(|j| (0..k).map(|l| pow[i][l] * s[l][j]).sum()).collect()).collect();
    }
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let j = pow[a][b] / n[b] as f64;
            let proj: f64 = q
                .eigenvalues
                .iter()
                .zip(&q.eigenvectors)
                .map(|(lam, psi)| {
                    let norm2: f64 = (0..k).map(|c| n[c] as f64 * psi[c] * psi[c]).sum();
                    lam.powi(m as i32) * psi[a] * psi[b] / norm2
                })
                .sum();
            worst = worst.max((j - proj).abs());
        }
    }
    Ok(worst)
}

/// One sampled graph with its classified spectrum.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub graph: PartitionedGraph,
    pub spectrum: ClassifiedSpectrum,
}

/// `trials` independent samples; trial `t` draws from stream `t` of `seed`.
pub fn sample_ensemble(
    spec: &QuotientSpec,
    n: &[usize],
    kind: MatrixKind,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EnsembleMember>> {
    let opts = SamplerOptions::default();
    exec.try_map_indices(trials, |t| {
        let graph = sample_with_rng(spec, n, &mut rng::stream(seed, t as u64), &opts)?;
        let matrix = SRegularMatrix::assemble(&graph, spec, kind)?;
        let spectrum = classify(&matrix)?;
        Ok(EnsembleMember { graph, spectrum })
    })
}
