use std::io::Write;

use num::Complex;

use super::gf::{stieltjes, GfEvaluator};
use super::WalkTable;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::float as fmt;
use crate::quotient::QuotientSpec;

pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone)]
pub struct DensityOptions {
    /// Distances from the real axis, decreasing.
    pub epsilons: Vec<f64>,
    pub exec: Execution,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { epsilons: DEFAULT_EPSILONS.to_vec(), exec: Execution::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    /// At least one cell density was negative after extrapolation and was
    /// set to zero.
    Clipped,
    /// Continuation failed for some ε; values are NaN.
    Missing,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Clipped => "clipped",
            PointStatus::Missing => "missing",
        }
    }
}

/// Per-cell limiting densities `μ_i'` on a grid, their mixture
/// `Σ c_i μ_i'` and the ratios `μ_i' / Σ c_j μ_j'`.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub lambda: Vec<f64>,
    /// `mu[i][p]`: cell `i` at grid point `p`.
    pub mu: Vec<Vec<f64>>,
    pub mixture: Vec<f64>,
    pub ratio: Vec<Vec<f64>>,
    pub status: Vec<PointStatus>,
    pub epsilons: Vec<f64>,
    /// Cell fractions `c_i = n_i / n`.
    pub fractions: Vec<f64>,
    /// Largest magnitude of a clipped negative value.
    pub max_clip: f64,
}

/// Value at 0 of the polynomial through `(x_m, y_m)` (Neville's scheme).
pub(crate) fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Stieltjes inversion `μ_i'(λ) ≈ -Im R_i(λ + iε) / π` at each ε of the
/// schedule, extrapolated to ε = 0 by polynomial (Richardson) extrapolation
/// through all schedule points.
pub fn density_curve(spec: &QuotientSpec, grid: &[f64], opts: &DensityOptions) -> Result<DensityCurve> {
    if opts.epsilons.is_empty() || opts.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Argument("epsilon schedule must be non-empty and positive".into()));
    }
    if opts.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("epsilon schedule must be strictly decreasing".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("grid must be finite".into()));
    }
    let k = spec.k();
    let fractions = spec.cell_fractions()?;
    let ev = GfEvaluator::new(spec);
    let eps = &opts.epsilons;
    let points: Vec<Option<Vec<f64>>> = opts.exec.map_slice(grid, |&lam| {
        let mut per_eps = vec![Vec::with_capacity(eps.len()); k];
        for &e in eps {
            let r = stieltjes(&ev, Complex::new(lam, e)).ok()?;
            for (i, ri) in r.iter().enumerate() {
                per_eps[i].push(-ri.im / std::f64::consts::PI);
            }
        }
        Some(per_eps.iter().map(|ys| extrapolate_to_zero(eps, ys)).collect())
    });

    let n = grid.len();
    let mut mu = vec![vec![f64::NAN; n]; k];
    let mut status = vec![PointStatus::Ok; n];
    let mut max_clip: f64 = 0.0;
    for (p, vals) in points.into_iter().enumerate() {
        match vals {
            None => status[p] = PointStatus::Missing,
            Some(vals) => {
                for (i, v) in vals.into_iter().enumerate() {
                    if v < 0.0 {
                        max_clip = max_clip.max(-v);
                        status[p] = PointStatus::Clipped;
                        mu[i][p] = 0.0;
                    } else {
                        mu[i][p] = v;
                    }
                }
            }
        }
    }
    let mixture: Vec<f64> = (0..n).map(|p| (0..k).map(|i| fractions[i] * mu[i][p]).sum()).collect();
    let ratio = (0..k)
        .map(|i| (0..n).map(|p| if mixture[p] > 1e-12 { mu[i][p] / mixture[p] } else { f64::NAN }).collect())
        .collect();
    Ok(DensityCurve { lambda: grid.to_vec(), mu, mixture, ratio, status, epsilons: eps.clone(), fractions, max_clip })
}

/// Trapezoid rule; NaN samples are dropped.
pub fn integrate_trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, v)| v.is_finite()).map(|(&a, &b)| (a, b)).collect();
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

impl DensityCurve {
    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn mixture_mass(&self) -> f64 {
        integrate_trapezoid(&self.lambda, &self.mixture)
    }

    /// Mass not captured on the grid (atoms, or support beyond the grid).
    pub fn missing_mass(&self) -> f64 {
        1.0 - self.mixture_mass()
    }

    pub fn missing_points(&self) -> usize {
        self.status.iter().filter(|&&s| s == PointStatus::Missing).count()
    }

    /// Running trapezoid integral of the mixture at each grid point.
    pub fn mixture_cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lambda.len());
        let mut acc = 0.0;
        let mut last: Option<(f64, f64)> = None;
        for (&x, &y) in self.lambda.iter().zip(&self.mixture) {
            if y.is_finite() {
                if let Some((x0, y0)) = last {
                    acc += 0.5 * (x - x0) * (y + y0);
                }
                last = Some((x, y));
            }
            out.push(acc);
        }
        out
    }

    /// Linear interpolation of [`Self::mixture_cdf`], flat outside the grid.
    pub fn cdf_at(&self, cdf: &[f64], x: f64) -> f64 {
        let lam = &self.lambda;
        if lam.is_empty() {
            return 0.0;
        }
        if x <= lam[0] {
            return 0.0;
        }
        if x >= lam[lam.len() - 1] {
            return cdf[cdf.len() - 1];
        }
        let p = lam.partition_point(|&l| l <= x);
        let (x0, x1) = (lam[p - 1], lam[p]);
        cdf[p - 1] + (cdf[p] - cdf[p - 1]) * (x - x0) / (x1 - x0)
    }

    /// `lambda, mu_1..mu_k, mixture, ratio_1..ratio_k, status`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.k();
        let mut header = vec!["lambda".to_string()];
        header.extend((1..=k).map(|i| format!("mu_{i}")));
        header.push("mixture".into());
        header.extend((1..=k).map(|i| format!("ratio_{i}")));
        header.push("status".into());
        writeln!(out, "{}", header.join(","))?;
        for p in 0..self.lambda.len() {
            let mut row = vec![fmt(self.lambda[p])];
            row.extend((0..k).map(|i| fmt(self.mu[i][p])));
            row.push(fmt(self.mixture[p]));
            row.extend((0..k).map(|i| fmt(self.ratio[i][p])));
            row.push(self.status[p].as_str().into());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Kolmogorov-Smirnov distance between the empirical CDF of `samples`
    /// and [`Self::mixture_cdf`]. Non-finite samples are ignored.
    pub fn ks_distance(&self, samples: &[f64]) -> f64 {
        let mut xs: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
        xs.sort_by(f64::total_cmp);
        let cdf = self.mixture_cdf();
        let m = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = self.cdf_at(&cdf, x);
                (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// One moment comparison. `cell = None` is the mixture against
/// `Σ c_i ω_i^{(ℓ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub ell: usize,
    pub cell: Option<usize>,
    pub computed: f64,
    pub exact: f64,
    /// Relative error, or absolute when `exact` is zero.
    pub error: f64,
    pub relative: bool,
}

/// `∫ λ^ℓ μ_i'(λ) dλ` on the grid against `ω_i^{(ℓ)}`. Atoms are invisible
/// to the grid, so cells whose measure has atoms will not match.
pub fn moment_check(curve: &DensityCurve, table: &WalkTable<f64>, l_max: usize) -> Vec<MomentRow> {
    let k = curve.k();
    let l_max = l_max.min(table.len());
    let mut rows = Vec::new();
    let row = |ell: usize, cell: Option<usize>, density: &[f64], exact: f64| {
        let ys: Vec<f64> = curve.lambda.iter().zip(density).map(|(&x, &d)| x.powi(ell as i32) * d).collect();
        let computed = integrate_trapezoid(&curve.lambda, &ys);
        let relative = exact.abs() > 1e-12;
        let error = if relative { (computed - exact).abs() / exact.abs() } else { (computed - exact).abs() };
        MomentRow { ell, cell, computed, exact, error, relative }
    };
    for ell in 0..=l_max {
        for i in 0..k {
            rows.push(row(ell, Some(i), &curve.mu[i], table.omega(i, ell)));
        }
        let exact: f64 = (0..k).map(|i| curve.fractions[i] * table.omega(i, ell)).sum();
        rows.push(row(ell, None, &curve.mixture, exact));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treewalks::{walk_recurrence, Weights};

    fn kesten_mckay(d: f64, x: f64) -> f64 {
        let r = 4.0 * (d - 1.0) - x * x;
        if r <= 0.0 {
            0.0
        } else {
            d * r.sqrt() / (2.0 * std::f64::consts::PI * (d * d - x * x))
        }
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn neville_reproduces_quadratics() {
        let xs = [0.4, 0.2, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x + 5.0 * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_center_value() {
        let s = QuotientSpec::regular(3);
        let c = density_curve(&s, &[0.0], &DensityOptions::default()).unwrap();
        assert!((c.mu[0][0] - 3.0 * 8f64.sqrt() / (2.0 * std::f64::consts::PI * 9.0)).abs() < 1e-4);
        assert_eq!(c.status[0], PointStatus::Ok);
    }

    #[test]
    fn cubic_vanishes_outside_support() {
        let s = QuotientSpec::regular(3);
        let c = density_curve(&s, &[-3.2, 3.0, 3.5], &DensityOptions::default()).unwrap();
        for p in 0..3 {
            assert!(c.mu[0][p].abs() < 1e-3, "{}", c.mu[0][p]);
        }
    }

    #[test]
    fn cubic_profile_and_moments() {
        let s = QuotientSpec::regular(3);
        let g = grid(-3.2, 3.2, 321);
        let opts = DensityOptions { exec: Execution::Sequential, ..DensityOptions::default() };
        let c = density_curve(&s, &g, &opts).unwrap();
        for (p, &x) in g.iter().enumerate() {
            if (x.abs() - 8f64.sqrt()).abs() > 0.05 {
                assert!((c.mu[0][p] - kesten_mckay(3.0, x)).abs() < 2e-3, "x = {x}");
            }
        }
        let t = walk_recurrence(&s, &Weights::float(&s), 4);
        let rows = moment_check(&c, &t, 4);
        for r in rows {
            assert!(r.error < 1e-2, "{r:?}");
        }
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,mu_1,mixture,ratio_1,status\n"));
        assert_eq!(text.lines().count(), 322);
    }

    #[test]
    fn cdf_interpolates() {
        let s = QuotientSpec::regular(2);
        let c = density_curve(&s, &grid(-2.5, 2.5, 101), &DensityOptions::default()).unwrap();
        let cdf = c.mixture_cdf();
        assert_eq!(c.cdf_at(&cdf, -10.0), 0.0);
        assert!((c.cdf_at(&cdf, 0.0) - 0.5 * cdf[100]).abs() < 1e-6);
    }

    #[test]
    fn ks_against_own_quantiles() {
        let c = density_curve(&QuotientSpec::regular(3), &grid(-3.0, 3.0, 601), &DensityOptions::default()).unwrap();
        let cdf = c.mixture_cdf();
        let m = 200;
        let xs: Vec<f64> = (0..m)
            .map(|i| {
                let q = (i as f64 + 0.5) / m as f64 * cdf[600];
                c.lambda[cdf.partition_point(|&v| v < q)]
            })
            .collect();
        assert!(c.ks_distance(&xs) < 0.02);
        assert!((c.ks_distance(&[-10.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_is_validated() {
        let s = QuotientSpec::regular(3);
        let bad = DensityOptions { epsilons: vec![1e-3, 1e-2], exec: Execution::Sequential };
        assert!(density_curve(&s, &[0.0], &bad).is_err());
    }
}
