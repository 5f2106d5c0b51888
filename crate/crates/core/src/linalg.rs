//! Thin wrappers over faer for the dense kernels used across the crate.

use faer::complex_native::c64;
use faer::prelude::*;
use faer::{Mat, Side};
use num::Complex;

/// Eigenpairs of a small symmetric matrix given as rows. Eigenvalues
/// ascending; `vectors[j]` is the j-th eigenvector.
pub(crate) fn sym_eigen_rows(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = rows.len();
    let m = Mat::<f64>::from_fn(k, k, |i, j| rows[i][j]);
    let (values, vectors) = sym_eigen(&m);
    let cols = (0..k).map(|j| (0..k).map(|i| vectors.read(i, j)).collect()).collect();
    (values, cols)
}

/// Full eigendecomposition of a dense symmetric matrix (lower triangle
/// read). Eigenvalues ascending, eigenvectors as columns.
pub(crate) fn sym_eigen(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let values = (0..m.nrows()).map(|i| s.read(i)).collect();
    (values, evd.u().to_owned())
}

/// Eigenvalues only, ascending.
pub(crate) fn sym_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    let mut v = m.selfadjoint_eigenvalues(Side::Lower);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Right singular vectors of `m` ordered by descending singular value.
pub(crate) fn right_singular_vectors(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let svd = m.svd();
    let s = svd.s_diagonal();
    let values = (0..s.nrows()).map(|i| s.read(i)).collect();
    (values, svd.v().to_owned())
}

/// Solve `a x = rhs` for a small dense complex system by partial-pivot LU.
pub(crate) fn solve_complex(a: &[Vec<Complex<f64>>], rhs: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = rhs.len();
    let am = Mat::<c64>::from_fn(n, n, |i, j| c64::new(a[i][j].re, a[i][j].im));
    let bm = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(rhs[i].re, rhs[i].im));
    let x = am.partial_piv_lu().solve(&bm);
    (0..n)
        .map(|i| {
            let v = x.read(i, 0);
            Complex::new(v.re, v.im)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_symmetric() {
        let (vals, vecs) = sym_eigen_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[1][0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn complex_solve() {
        let i = Complex::new(0.0, 1.0);
        let one = Complex::new(1.0, 0.0);
        let a = vec![vec![one, i], vec![-i, 2.0 * one]];
        let x = solve_complex(&a, &[one, one]);
        let r0 = a[0][0] * x[0] + a[0][1] * x[1] - one;
        let r1 = a[1][0] * x[0] + a[1][1] * x[1] - one;
        assert!(r0.norm() < 1e-14 && r1.norm() < 1e-14);
    }
}
