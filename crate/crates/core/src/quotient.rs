//! Quotient specifications: the matrix `S` with optional edge weights `F`,
//! vertex weights `b` and cell sizes `n`.
//!
//! Cell indices are 0-based throughout the crate.

use std::collections::VecDeque;

use num::integer::Integer;
use num::rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// The on-disk JSON form, `{"S": [[..]], "F": [[..]]?, "b": [..]?, "n": [..]?}`.
///
/// Entries are read as floats so that structural problems (negative or
/// fractional entries, ragged rows) surface as validation violations rather
/// than parse failures.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawQuotientSpec {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

/// Result of [`validate_raw`] / [`validate_quotient`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub irreducible: bool,
    /// Minimal positive integer solution of the balance equations, if any.
    pub balance: Option<Vec<u64>>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// A structurally well-formed quotient specification.
///
/// `S` is square with non-negative integer entries, `F` is `k×k` and `b` has
/// length `k`. Irreducibility and balance are *not* enforced here: a
/// reducible `S` can still be analysed, only construction refuses it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSpec {
    s: Vec<Vec<u32>>,
    f: Vec<Vec<f64>>,
    b: Vec<f64>,
    n: Option<Vec<usize>>,
}

impl QuotientSpec {
    /// Unweighted spec (`F` all ones, `b` zero).
    pub fn new(s: Vec<Vec<u32>>) -> Result<Self> {
        let k = s.len();
        if k == 0 {
            return Err(Error::spec("empty", "S has no rows"));
        }
        if s.iter().any(|row| row.len() != k) {
            return Err(Error::spec("non_square", "S is not square"));
        }
        Ok(QuotientSpec { f: vec![vec![1.0; k]; k], b: vec![0.0; k], n: None, s })
    }

    pub fn regular(d: u32) -> Self {
        QuotientSpec::new(vec![vec![d]]).expect("1x1 is square")
    }

    pub fn with_weights(mut self, b: Vec<f64>, f: Vec<Vec<f64>>) -> Result<Self> {
        let k = self.k();
        if b.len() != k {
            return Err(Error::spec("b_length", format!("b has length {}, expected {k}", b.len())));
        }
        if f.len() != k || f.iter().any(|row| row.len() != k) {
            return Err(Error::spec("f_shape", format!("F must be {k}x{k}")));
        }
        self.b = b;
        self.f = f;
        Ok(self)
    }

    pub fn with_sizes(mut self, n: Vec<usize>) -> Result<Self> {
        if n.len() != self.k() {
            return Err(Error::spec("n_length", format!("n has length {}, expected {}", n.len(), self.k())));
        }
        if n.contains(&0) {
            return Err(Error::spec("n_not_positive", "cell sizes must be positive"));
        }
        self.n = Some(n);
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawQuotientSpec = serde_json::from_str(text)?;
        QuotientSpec::try_from(raw)
    }

    pub fn to_raw(&self) -> RawQuotientSpec {
        RawQuotientSpec {
            s: self.s.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect(),
            f: Some(self.f.clone()),
            b: Some(self.b.clone()),
            n: self.n.as_ref().map(|n| n.iter().map(|&x| x as f64).collect()),
        }
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[Vec<u32>] {
        &self.s
    }

    pub fn s_at(&self, i: usize, j: usize) -> u32 {
        self.s[i][j]
    }

    pub fn f(&self) -> &[Vec<f64>] {
        &self.f
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sizes(&self) -> Option<&[usize]> {
        self.n.as_deref()
    }

    /// Row sums of `S`: the degree of a vertex in each cell.
    pub fn degrees(&self) -> Vec<u32> {
        self.s.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn is_unweighted(&self) -> bool {
        self.b.iter().all(|&x| x == 0.0)
            && (0..self.k()).all(|i| (0..self.k()).all(|j| self.s[i][j] == 0 || self.f[i][j] == 1.0))
    }

    /// `(S∘F) + diag(b)`; entries of `F` where `s_ij = 0` do not contribute.
    pub fn weighted_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.k();
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let off = if self.s[i][j] > 0 { self.s[i][j] as f64 * self.f[i][j] } else { 0.0 };
                        if i == j {
                            off + self.b[i]
                        } else {
                            off
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Strong connectivity of the digraph with an arc `i → j` iff `s_ij > 0`.
    pub fn is_irreducible(&self) -> bool {
        let k = self.k();
        let reach = |forward: bool| {
            let mut seen = vec![false; k];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                for j in 0..k {
                    let arc = if forward { self.s[i][j] } else { self.s[j][i] };
                    if arc > 0 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        reach(true) && reach(false)
    }

    /// Minimal positive integer solution of `n_i s_ij = n_j s_ji`.
    ///
    /// Solved over the rationals: each weakly connected component fixes one
    /// cell to 1 and propagates `n_j = n_i s_ij / s_ji` along a BFS tree, then
    /// every equation is re-checked and denominators are cleared.
    pub fn balance_solution(&self) -> Option<Vec<u64>> {
        let k = self.k();
        let mut n: Vec<Option<Ratio<u128>>> = vec![None; k];
        for root in 0..k {
            if n[root].is_some() {
                continue;
            }
            n[root] = Some(Ratio::from_integer(1));
            let mut queue = VecDeque::from([root]);
            while let Some(i) = queue.pop_front() {
                let ni = n[i].expect("visited");
                for j in 0..k {
                    let (sij, sji) = (self.s[i][j] as u128, self.s[j][i] as u128);
                    if sij == 0 && sji == 0 {
                        continue;
                    }
                    if sij == 0 || sji == 0 {
                        return None;
                    }
                    if n[j].is_none() {
                        n[j] = Some(ni * Ratio::new(sij, sji));
                        queue.push_back(j);
                    }
                }
            }
        }
        let n: Vec<Ratio<u128>> = n.into_iter().map(|x| x.expect("all visited")).collect();
        for i in 0..k {
            for j in 0..k {
                if n[i] * self.s[i][j] as u128 != n[j] * self.s[j][i] as u128 {
                    return None;
                }
            }
        }
        let den = n.iter().fold(1u128, |acc, r| acc.lcm(r.denom()));
        let ints: Vec<u128> = n.iter().map(|r| (r * den).to_integer()).collect();
        let g = ints.iter().fold(0u128, |acc, &x| acc.gcd(&x));
        ints.iter().map(|&x| u64::try_from(x / g).ok()).collect()
    }

    /// Cell sizes for spectral work: `n` if given, else the minimal balance
    /// solution (any positive multiple yields the same similarity transform).
    pub fn sizes_or_balance(&self) -> Result<Vec<usize>> {
        if let Some(n) = &self.n {
            return Ok(n.clone());
        }
        self.balance_solution().map(|n| n.into_iter().map(|x| x as usize).collect()).ok_or(Error::NoBalanceSolution)
    }

    /// Limiting cell fractions `c_i = n_i / n`.
    pub fn cell_fractions(&self) -> Result<Vec<f64>> {
        let n = self.sizes_or_balance()?;
        let total: usize = n.iter().sum();
        Ok(n.iter().map(|&x| x as f64 / total as f64).collect())
    }
}

impl TryFrom<RawQuotientSpec> for QuotientSpec {
    type Error = Error;

    fn try_from(raw: RawQuotientSpec) -> Result<Self> {
        if let Some(v) = structural_violations(&raw).into_iter().next() {
            return Err(Error::InvalidSpec { code: v.code, message: v.message });
        }
        let s = raw.s.iter().map(|r| r.iter().map(|&x| x as u32).collect()).collect();
        let mut spec = QuotientSpec::new(s)?;
        let k = spec.k();
        let b = raw.b.unwrap_or_else(|| vec![0.0; k]);
        let f = raw.f.unwrap_or_else(|| vec![vec![1.0; k]; k]);
        spec = spec.with_weights(b, f)?;
        if let Some(n) = raw.n {
            spec = spec.with_sizes(n.iter().map(|&x| x as usize).collect())?;
        }
        Ok(spec)
    }
}

fn is_nonneg_int(x: f64) -> bool {
    x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64
}

fn structural_violations(raw: &RawQuotientSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Violation { code, message });
    let k = raw.s.len();
    if k == 0 {
        push("empty", "S has no rows".into());
        return out;
    }
    if raw.s.iter().any(|r| r.len() != k) {
        push("non_square", "S is not square".into());
        return out;
    }
    for (i, row) in raw.s.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x < 0.0 {
                push("negative_entry", format!("s[{i}][{j}] = {x} is negative"));
            } else if !is_nonneg_int(x) {
                push("non_integer_entry", format!("s[{i}][{j}] = {x} is not an integer"));
            }
        }
    }
    if let Some(f) = &raw.f {
        if f.len() != k || f.iter().any(|r| r.len() != k) {
            push("f_shape", format!("F must be {k}x{k}"));
        }
    }
    if let Some(b) = &raw.b {
        if b.len() != k {
            push("b_length", format!("b has length {}, expected {k}", b.len()));
        }
    }
    if let Some(n) = &raw.n {
        if n.len() != k {
            push("n_length", format!("n has length {}, expected {k}", n.len()));
        } else if n.iter().any(|&x| !is_nonneg_int(x) || x == 0.0) {
            push("n_not_positive", "cell sizes must be positive integers".into());
        }
    }
    out
}

/// Full validation of a raw spec: structure first, then the semantic checks
/// of [`validate_quotient`].
pub fn validate_raw(raw: &RawQuotientSpec) -> ValidationReport {
    let structural = structural_violations(raw);
    if !structural.is_empty() {
        return ValidationReport { ok: false, irreducible: false, balance: None, violations: structural };
    }
    match QuotientSpec::try_from(raw.clone()) {
        Ok(spec) => validate_quotient(&spec),
        Err(e) => ValidationReport {
            ok: false,
            irreducible: false,
            balance: None,
            violations: vec![Violation { code: "invalid", message: e.to_string() }],
        },
    }
}

/// Irreducibility, balance solvability, symmetry of `F` on the support of
/// `S`, and (if present) the balance equations for `n`.
pub fn validate_quotient(spec: &QuotientSpec) -> ValidationReport {
    let k = spec.k();
    let mut violations = Vec::new();
    let irreducible = spec.is_irreducible();
    if !irreducible {
        violations.push(Violation { code: "reducible", message: "the digraph of S is not strongly connected".into() });
    }
    let balance = spec.balance_solution();
    if balance.is_none() {
        violations.push(Violation {
            code: "no_balance_solution",
            message: "no positive rational n with n_i s_ij = n_j s_ji".into(),
        });
    }
    for i in 0..k {
        for j in 0..k {
            let support = spec.s[i][j] > 0 || spec.s[j][i] > 0;
            if i < j && support && spec.f[i][j] != spec.f[j][i] {
                violations.push(Violation {
                    code: "f_not_symmetric",
                    message: format!("F[{i}][{j}] = {} but F[{j}][{i}] = {}", spec.f[i][j], spec.f[j][i]),
                });
            }
            if spec.s[i][j] > 0 && spec.f[i][j] == 0.0 {
                violations.push(Violation {
                    code: "f_zero_on_support",
                    message: format!("F[{i}][{j}] = 0 but s[{i}][{j}] > 0"),
                });
            }
            if !spec.f[i][j].is_finite() {
                violations.push(Violation { code: "f_not_finite", message: format!("F[{i}][{j}] is not finite") });
            }
        }
        if !spec.b[i].is_finite() {
            violations.push(Violation { code: "b_not_finite", message: format!("b[{i}] is not finite") });
        }
    }
    if let Some(n) = &spec.n {
        for i in 0..k {
            for j in 0..k {
                if n[i] as u64 * spec.s[i][j] as u64 != n[j] as u64 * spec.s[j][i] as u64 {
                    violations.push(Violation {
                        code: "n_unbalanced",
                        message: format!("n[{i}] s[{i}][{j}] != n[{j}] s[{j}][{i}]"),
                    });
                }
            }
        }
    }
    ValidationReport { ok: violations.is_empty(), irreducible, balance, violations }
}

/// Why `n` cannot host the deterministic construction, if it cannot.
pub fn constructibility_problem(spec: &QuotientSpec, n: &[usize]) -> Option<String> {
    let k = spec.k();
    if n.len() != k {
        return Some(format!("expected {k} cell sizes, got {}", n.len()));
    }
    for i in 0..k {
        let sii = spec.s[i][i] as usize;
        if n[i] == 0 {
            return Some(format!("n[{i}] must be positive"));
        }
        if n[i] <= sii {
            return Some(format!("n[{i}] = {} must exceed s[{i}][{i}] = {sii}", n[i]));
        }
        if !(n[i] * sii).is_multiple_of(2) {
            return Some(format!("n[{i}] s[{i}][{i}] must be even"));
        }
        for j in 0..k {
            if n[i] < spec.s[j][i] as usize {
                return Some(format!("n[{i}] = {} is smaller than s[{j}][{i}] = {}", n[i], spec.s[j][i]));
            }
            if n[i] * spec.s[i][j] as usize != n[j] * spec.s[j][i] as usize {
                return Some(format!("balance fails for cells {i},{j}"));
            }
        }
    }
    None
}

/// Smallest multiple of the minimal balance solution with `n_i > s_ii`,
/// `n_i ≥ s_ji` for all `j`, and `n_i s_ii` even.
pub fn minimal_cell_sizes(spec: &QuotientSpec) -> Result<Vec<usize>> {
    if !spec.is_irreducible() {
        return Err(Error::Reducible);
    }
    let base = spec.balance_solution().ok_or(Error::NoBalanceSolution)?;
    let max_entry = spec.s.iter().flatten().copied().max().unwrap_or(0) as u64;
    // alpha = 2 (max_entry + 1) always satisfies every constraint.
    for alpha in 1..=2 * (max_entry + 1) {
        let n: Vec<usize> = base.iter().map(|&x| (x * alpha) as usize).collect();
        if constructibility_problem(spec, &n).is_none() {
            return Ok(n);
        }
    }
    unreachable!("alpha = 2(max+1) satisfies all constraints")
}

/// Eigenpairs of `(S∘F) + diag(b)`.
#[derive(Debug, Clone)]
pub struct QuotientEigen {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j]` is ψ_j (length k), `= N^{-1/2} u_j`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Orthonormal eigenvectors `u_j` of the symmetrized matrix
    /// `N^{1/2} ((S∘F)+diag b) N^{-1/2}`.
    pub symmetric_vectors: Vec<Vec<f64>>,
    /// Cell sizes used for the similarity transform.
    pub sizes: Vec<usize>,
    pub lambda_s: f64,
}

impl QuotientEigen {
    /// ‖Mψ_j − λ_j ψ_j‖∞ over all j, divided by max(1, ‖M‖_F).
    pub fn max_relative_residual(&self, spec: &QuotientSpec) -> f64 {
        let m = spec.weighted_matrix();
        let norm = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        let k = spec.k();
        let mut worst = 0.0f64;
        for (lam, psi) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..k {
                let mv: f64 = (0..k).map(|j| m[i][j] * psi[j]).sum();
                worst = worst.max((mv - lam * psi[i]).abs());
            }
        }
        worst / norm
    }
}

/// Flip `v` so its first clearly nonzero coordinate is positive.
pub(crate) fn sign_normalize(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Eigenpairs from the symmetrized similar matrix, mapped back.
///
/// Eigenvalues are sorted descending; ties go to the lexicographically
/// smallest sign-normalized eigenvector.
pub fn quotient_eigen(spec: &QuotientSpec) -> Result<QuotientEigen> {
    let k = spec.k();
    let sizes = spec.sizes_or_balance()?;
    let m = spec.weighted_matrix();
    let sqrt_n: Vec<f64> = sizes.iter().map(|&x| (x as f64).sqrt()).collect();
    let mut sym = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            sym[i][j] = sqrt_n[i] * m[i][j] / sqrt_n[j];
        }
    }
    // Exact arithmetic is symmetric; remove rounding asymmetry.
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (sym[i][j] + sym[j][i]);
            sym[i][j] = avg;
            sym[j][i] = avg;
        }
    }
    let (values, vectors) = linalg::sym_eigen_rows(&sym);
    let mut pairs: Vec<(f64, Vec<f64>)> = values
        .into_iter()
        .zip(vectors)
        .map(|(lam, mut u)| {
            sign_normalize(&mut u);
            (lam, u)
        })
        .collect();
    let scale = pairs.iter().fold(1.0f64, |a, p| a.max(p.0.abs()));
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= 1e-12 * scale {
            a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let symmetric_vectors: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
    let eigenvectors = symmetric_vectors.iter().map(|u| u.iter().zip(&sqrt_n).map(|(x, s)| x / s).collect()).collect();
    Ok(QuotientEigen { lambda_s: eigenvalues[0], eigenvalues, eigenvectors, symmetric_vectors, sizes })
}
