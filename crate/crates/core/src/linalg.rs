//! Thin wrappers over the dense kernels of `faer`.

use faer::{Mat, MatRef, Side};

use crate::c64;
use crate::error::{Error, Result};

/// Singular values in nonincreasing order.
pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    m.singular_values().map_err(|e| Error::LinearAlgebra(format!("svd: {e:?}")))
}

/// Sum of singular values.
pub fn trace_norm(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Eigenvalues of a Hermitian matrix, nondecreasing. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("hermitian eigensolver: {e:?}")))
}

/// Eigenvalues of a general square matrix (unordered).
pub fn eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<c64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues().map_err(|e| Error::LinearAlgebra(format!("eigensolver: {e:?}")))
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn frobenius_sq(m: MatRef<'_, c64>) -> f64 {
    m.squared_norm_l2()
}

/// `Tr(a† b) = Σ conj(a_kl) b_kl` without forming the product.
pub fn trace_adjoint_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    debug_assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn zeros(rows: usize, cols: usize) -> Mat<c64> {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::identity(n, n)
}

/// Number of values `v` with `v ≥ 1/r`.
pub fn count_at_least(values: &[f64], threshold: f64) -> usize {
    values.iter().filter(|&&v| v >= threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { c64::new(-(i as f64) - 1.0, 0.0) } else { c64::new(0.0, 0.0) });
        let s = singular_values(m.as_ref()).unwrap();
        assert_eq!(s.len(), 3);
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((trace_norm(m.as_ref()).unwrap() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn hermitian_eigenvalues_sorted() {
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(2.0, 0.0),
            (1, 1) => c64::new(2.0, 0.0),
            (1, 0) => c64::new(0.0, 1.0),
            _ => c64::new(0.0, -1.0),
        });
        let e = hermitian_eigenvalues(m.as_ref()).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
        assert_eq!(hermitian_defect(m.as_ref()), 0.0);
    }

    #[test]
    fn trace_of_adjoint_product_matches_product() {
        let a = Mat::from_fn(4, 3, |i, j| c64::new(i as f64 - 1.0, (j * i) as f64 * 0.5));
        let b = Mat::from_fn(4, 3, |i, j| c64::new((i + j) as f64, 1.0 - j as f64));
        let p = a.adjoint() * &b;
        let direct = trace(p.as_ref());
        assert!((direct - trace_adjoint_product(a.as_ref(), b.as_ref())).norm() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        let m = zeros(2, 3);
        assert!(matches!(eigenvalues(m.as_ref()), Err(Error::DimensionMismatch(_))));
    }
}
