//! Thin adapters between row-major complex buffers and faer.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues (ascending) of the Hermitian `n × n` matrix stored row-major in
/// `data`. Only the lower triangle is read.
pub fn hermitian_eigenvalues(data: &[Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(data.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![data[0].re]);
    }
    // Row-major A is column-major A^T = conj(A): same spectrum.
    let m = MatRef::from_column_major_slice(data, n, n);
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("hermitian eigenvalue solver failed: {e:?}")))
}

/// Eigen-decomposition of a real symmetric matrix (row-major). Returns the
/// ascending eigenvalues and the eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(data: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(data.len(), n * n);
    let m = Mat::<f64>::from_fn(n, n, |i, j| data[i * n + j]);
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("symmetric eigen solver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let values = (0..n).map(|i| s[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vectors[i * n + j] = u[(i, j)];
        }
    }
    Ok((values, vectors))
}

/// `A B` for row-major `A (n × k)` and `B (k × m)`.
pub fn matmul(a: &[Complex64], b: &[Complex64], n: usize, k: usize, m: usize) -> Vec<Complex64> {
    assert_eq!(a.len(), n * k);
    assert_eq!(b.len(), k * m);
    // Row-major X is column-major X^T, and (AB)^T = B^T A^T.
    let at = MatRef::from_column_major_slice(a, k, n);
    let bt = MatRef::from_column_major_slice(b, m, k);
    let ct = bt * at;
    let mut out = vec![Complex64::new(0.0, 0.0); n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = ct[(j, i)];
        }
    }
    out
}
