//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::tensor::Matrix;

/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_RTOL: f64 = 1e-10;

/// Pivot ratio below which a Cholesky factorization is treated as singular.
const CHOLESKY_PIVOT_RTOL: f64 = 1e-7;

/// How a symmetric system was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    PseudoInverse,
}

/// Solves `a x = b` for symmetric positive semidefinite `a`.
///
/// Uses Cholesky when `a` is numerically positive definite and falls back to
/// the eigenvalue pseudo-inverse (cutoff `1e-10 * lambda_max`) otherwise, which
/// yields the minimum-norm least-squares solution.
pub fn solve_psd(a: &Matrix, b: &Matrix) -> (Matrix, SolveMethod) {
    debug_assert_eq!(a.nrows(), a.ncols());
    if let Some(chol) = Cholesky::new(a.clone()) {
        let l = chol.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..l.nrows() {
            let d = l[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if hi > 0.0 && lo / hi > CHOLESKY_PIVOT_RTOL {
            return (chol.solve(b), SolveMethod::Cholesky);
        }
    }
    (pinv_symmetric(a) * b, SolveMethod::PseudoInverse)
}

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.
pub fn pinv_symmetric(a: &Matrix) -> Matrix {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let eig = SymmetricEigen::new(sym(a));
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = PINV_RTOL * max;
    let mut out = Matrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > cutoff && lam.abs() > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

/// Moore-Penrose inverse of a general matrix via SVD.
pub fn pinv(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return a.transpose();
    }
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
    svd.pseudo_inverse(PINV_RTOL * max).unwrap_or_else(|_| Matrix::zeros(a.ncols(), a.nrows()))
}

/// Ratio of the largest to the smallest singular value (infinite when singular).
pub fn condition_number(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |m, &v| m.max(v));
    let min = sv.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if min > 0.0 { max / min } else { f64::INFINITY }
}

/// Leading `k` eigenpairs of a symmetric matrix, eigenvalues non-increasing.
pub fn top_eigen(a: &Matrix, k: usize) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(sym(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let k = k.min(order.len());
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(a.nrows(), k);
    for (c, &i) in order[..k].iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Lower Cholesky factor, `None` when `a` is not positive definite.
pub fn cholesky_lower(a: &Matrix) -> Option<Matrix> {
    Cholesky::new(sym(a)).map(|c| c.l())
}

/// Inverse of a lower-triangular matrix.
pub fn invert_lower(l: &Matrix) -> Option<Matrix> {
    let eye = Matrix::identity(l.nrows(), l.ncols());
    l.solve_lower_triangular(&eye)
}

fn sym(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}
