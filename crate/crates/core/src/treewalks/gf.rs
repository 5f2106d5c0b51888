use num::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_complex;
use crate::quotient::QuotientSpec;

type C = Complex<f64>;

/// Solver for the closed-walk generating functions `X_i(y)`, `X_ij(y)`:
///
/// ```text
/// p_i  = 1 - (1 - b_i y) X_i  + y² X_i  Σ_m s_im F_im² X_im
/// p_ij = 1 - (1 - b_j y) X_ij + y² X_ij Σ_m (s_jm - δ_im) F_jm² X_jm
/// ```
///
/// At `y = 0` the solution is all ones with Jacobian `-I`; other points are
/// reached by Newton continuation along the segment `t y`, `t ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct GfEvaluator {
    k: usize,
    b: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    /// Per equation: (variable index, coefficient) pairs of the quadratic sum.
    terms: Vec<Vec<(usize, f64)>>,
    /// Diagonal weight `b` entering each equation.
    diag: Vec<f64>,
    pub tolerance: f64,
    pub max_newton: usize,
    pub min_step: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GfSolution {
    #[serde(serialize_with = "ser_c")]
    pub y: C,
    #[serde(serialize_with = "ser_cs")]
    pub cells: Vec<C>,
    pub pairs: Vec<((usize, usize), [f64; 2])>,
    /// Max over equations of `|p| / (1 + |X| + |y² X Σ …|)`.
    pub residual: f64,
    pub steps: usize,
}

fn ser_c<S: serde::Serializer>(z: &C, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_cs<S: serde::Serializer>(z: &[C], s: S) -> std::result::Result<S::Ok, S::Error> {
    z.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

impl GfEvaluator {
    pub fn new(spec: &QuotientSpec) -> Self {
        let k = spec.k();
        let pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|&(i, j)| spec.s_at(i, j) > 0).collect();
        let index = |i: usize, j: usize| k + pairs.binary_search(&(i, j)).expect("pair with s_ij > 0");
        let f2 = |a: usize, c: usize| spec.f()[a][c] * spec.f()[a][c];
        let mut terms = Vec::with_capacity(k + pairs.len());
        let mut diag = Vec::with_capacity(k + pairs.len());
        for i in 0..k {
            terms.push(
                (0..k)
                    .filter(|&m| spec.s_at(i, m) > 0)
                    .map(|m| (index(i, m), spec.s_at(i, m) as f64 * f2(i, m)))
                    .collect(),
            );
            diag.push(spec.b()[i]);
        }
        for &(i, j) in &pairs {
            terms.push(
                (0..k)
                    .filter_map(|m| {
                        let mult = spec.s_at(j, m) - u32::from(m == i);
                        (mult > 0).then(|| (index(j, m), mult as f64 * f2(j, m)))
                    })
                    .collect(),
            );
            diag.push(spec.b()[j]);
        }
        GfEvaluator {
            k,
            b: spec.b().to_vec(),
            pairs,
            terms,
            diag,
            tolerance: 1e-12,
            max_newton: 25,
            min_step: 1e-10,
            initial_step: 0.05,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Residual vector and its scaled sup norm.
    fn residual(&self, y: C, x: &[C]) -> (Vec<C>, f64) {
        let y2 = y * y;
        let mut p = Vec::with_capacity(self.dim());
        let mut worst: f64 = 0.0;
        for a in 0..self.dim() {
            let sum: C = self.terms[a].iter().map(|&(v, c)| x[v] * c).sum();
            let quad = y2 * x[a] * sum;
            let lin = (C::new(1.0, 0.0) - y * self.diag[a]) * x[a];
            let val = C::new(1.0, 0.0) - lin + quad;
            worst = worst.max(val.norm() / (1.0 + lin.norm() + quad.norm()));
            p.push(val);
        }
        (p, worst)
    }

    fn jacobian(&self, y: C, x: &[C]) -> Vec<Vec<C>> {
        let y2 = y * y;
        let n = self.dim();
        let mut jac = vec![vec![C::new(0.0, 0.0); n]; n];
        for a in 0..n {
            let sum: C = self.terms[a].iter().map(|&(v, c)| x[v] * c).sum();
            jac[a][a] += -(C::new(1.0, 0.0) - y * self.diag[a]) + y2 * sum;
            for &(v, c) in &self.terms[a] {
                jac[a][v] += y2 * x[a] * c;
            }
        }
        jac
    }

    /// Newton from `x0` at fixed `y`. `None` on non-convergence or when a
    /// step is large enough to suggest a jump to another branch.
    fn newton(&self, y: C, x0: &[C], tol: f64) -> Option<(Vec<C>, f64)> {
        let mut x = x0.to_vec();
        for _ in 0..self.max_newton {
            let (p, res) = self.residual(y, &x);
            if res <= tol {
                return Some((x, res));
            }
            let rhs: Vec<C> = p.iter().map(|v| -v).collect();
            let dx = solve_complex(&self.jacobian(y, &x), &rhs);
            let size = dx.iter().map(|d| d.norm()).fold(0.0, f64::max);
            let scale = x.iter().map(|d| d.norm()).fold(0.0, f64::max);
            if !size.is_finite() || size > 0.2 * (1.0 + scale) {
                return None;
            }
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        let (_, res) = self.residual(y, &x);
        (res <= tol).then_some((x, res))
    }

    /// Analytic continuation of the `y = 0` branch to `y`.
    pub fn evaluate(&self, y: C) -> Result<GfSolution> {
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::Argument(format!("y = {y} is not finite")));
        }
        let mut x = vec![C::new(1.0, 0.0); self.dim()];
        let mut t = 0.0;
        let mut h = self.initial_step;
        let mut steps = 0;
        // Intermediate points only need to stay on the branch.
        let loose = self.tolerance.max(1e-9);
        while t < 1.0 {
            let target = (t + h).min(1.0);
            match self.newton(y * target, &x, loose) {
                Some((next, _)) => {
                    x = next;
                    t = target;
                    steps += 1;
                    h = (h * 2.0).min(0.25);
                }
                None => {
                    h *= 0.5;
                    if h < self.min_step {
                        return Err(Error::Continuation { t, step: h, y });
                    }
                }
            }
        }
        let (x, residual) = match self.newton(y, &x, self.tolerance) {
            Some(v) => v,
            None => return Err(Error::Continuation { t: 1.0, step: h, y }),
        };
        Ok(GfSolution {
            y,
            cells: x[..self.k].to_vec(),
            pairs: self.pairs.iter().zip(&x[self.k..]).map(|(&key, z)| (key, [z.re, z.im])).collect(),
            residual,
            steps,
        })
    }
}

/// `R_i(z) = X_i(1/z) / z` for every cell.
pub fn stieltjes(ev: &GfEvaluator, z: C) -> Result<Vec<C>> {
    if z.norm() == 0.0 {
        return Err(Error::Argument("Stieltjes transform needs z != 0".into()));
    }
    let sol = ev.evaluate(z.inv())?;
    Ok(sol.cells.iter().map(|x| x / z).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::treewalks::{walk_recurrence, Weights};

    fn series(spec: &QuotientSpec, cell: usize, y: C, len: usize) -> C {
        let t = walk_recurrence(spec, &Weights::float(spec), len);
        t.cell(cell).iter().rev().fold(C::new(0.0, 0.0), |acc, &w| acc * y + w)
    }

    /// Stieltjes transform of the Kesten-McKay law by quadrature. With
    /// `λ = a sin θ` the integrand is smooth and periodic, so the midpoint
    /// rule converges geometrically.
    fn kesten_mckay_r(d: f64, z: C) -> C {
        let a = 2.0 * (d - 1.0).sqrt();
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        (0..n)
            .map(|i| {
                let theta = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
                let lam = a * theta.sin();
                let rho = d * (a * a - lam * lam).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * (d * d - lam * lam));
                rho * a * theta.cos() * h / (z - lam)
            })
            .sum()
    }

    #[test]
    fn origin_is_all_ones() {
        let ev = GfEvaluator::new(&catalog::house());
        let sol = ev.evaluate(C::new(0.0, 0.0)).unwrap();
        assert!(sol.cells.iter().all(|&x| x == C::new(1.0, 0.0)));
        assert!(sol.pairs.iter().all(|&(_, x)| x == [1.0, 0.0]));
    }

    #[test]
    fn cubic_series_agreement() {
        let s = QuotientSpec::regular(3);
        let ev = GfEvaluator::new(&s);
        let y = C::new(0.1, 0.0);
        let x = ev.evaluate(y).unwrap().cells[0];
        assert!((x - series(&s, 0, y, 40)).norm() < 1e-8);
    }

    #[test]
    fn biregular_series_agreement() {
        let s = catalog::biregular_2_3();
        let ev = GfEvaluator::new(&s);
        let y = C::new(0.05, 0.0);
        let sol = ev.evaluate(y).unwrap();
        for cell in 0..2 {
            assert!((sol.cells[cell] - series(&s, cell, y, 40)).norm() < 1e-10);
        }
    }

    #[test]
    fn cubic_matches_closed_form() {
        let ev = GfEvaluator::new(&QuotientSpec::regular(3));
        let z = C::new(0.0, 3.0);
        let r = stieltjes(&ev, z).unwrap()[0];
        assert!((r - kesten_mckay_r(3.0, z)).norm() < 1e-8, "{r} vs {}", kesten_mckay_r(3.0, z));
    }

    #[test]
    fn large_z_and_conjugates() {
        let ev = GfEvaluator::new(&catalog::two_cell());
        let z = C::new(3.0e5, 9.5e5);
        for r in stieltjes(&ev, z).unwrap() {
            assert!((z * r - 1.0).norm() <= 1e-5);
        }
        let z = C::new(1.5, 0.7);
        let a = stieltjes(&ev, z).unwrap();
        let b = stieltjes(&ev, z.conj()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y.conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn herglotz_near_axis() {
        let ev = GfEvaluator::new(&catalog::house());
        for i in 0..40 {
            let z = C::new(-4.0 + 0.2 * i as f64, 0.01);
            for r in stieltjes(&ev, z).unwrap() {
                assert!(r.im < 0.0, "z = {z}, R = {r}");
            }
        }
    }

    #[test]
    fn debug_dump_is_json() {
        let ev = GfEvaluator::new(&catalog::biregular_2_3());
        let sol = ev.evaluate(C::new(0.1, -0.05)).unwrap();
        let text = serde_json::to_string(&sol).unwrap();
        assert!(text.contains("\"residual\""));
        assert!(sol.residual <= 1e-12);
    }
}
