//! Thin wrappers around the dense decompositions used throughout the crate.
//!
//! Every decomposition runs sequentially (`Par::Seq`) so that results do not
//! depend on the caller's thread count; parallelism happens one level up,
//! across independent instances.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

fn seq_parallelism() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in nondecreasing order and the matching eigenvector
/// columns.
pub fn eigh_real(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    seq_parallelism();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("symmetric eigensolve: {e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

/// Eigenvalues of a real symmetric matrix, nondecreasing.
pub fn eigvalsh_real(m: &Mat<f64>) -> Result<Vec<f64>> {
    seq_parallelism();
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("symmetric eigenvalues: {e:?}")))
}

/// Eigendecomposition of a complex Hermitian matrix.
pub fn eigh_complex(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    seq_parallelism();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("hermitian eigensolve: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Singular values of a real matrix, nonincreasing.
pub fn singular_values_real(m: &Mat<f64>) -> Result<Vec<f64>> {
    seq_parallelism();
    m.singular_values()
        .map_err(|e| Error::Decomposition(format!("svd: {e:?}")))
}

/// Singular values of a complex matrix, nonincreasing.
pub fn singular_values_complex(m: &Mat<Complex64>) -> Result<Vec<f64>> {
    seq_parallelism();
    m.singular_values()
        .map_err(|e| Error::Decomposition(format!("svd: {e:?}")))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    worst
}

/// Hermiticity defect `max |m - mᵀ|` of a real square matrix.
pub fn symmetry_defect(m: &Mat<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
