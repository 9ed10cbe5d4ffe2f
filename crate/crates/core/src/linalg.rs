//! Laplacians and quadratic forms over opinion profiles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::NetworkMatrix;
use crate::profile::OpinionProfile;

/// `diag(λ·1) − λ`. Rows of the result sum to zero.
pub fn laplacian(net: &NetworkMatrix) -> DMatrix<f64> {
    laplacian_of(net.entries())
}

/// Laplacian of a raw weight matrix (used for weighted variants).
pub fn laplacian_of(weights: &DMatrix<f64>) -> DMatrix<f64> {
    let n = weights.nrows();
    let mut l = -weights.clone();
    for i in 0..n {
        l[(i, i)] += weights.row(i).sum();
    }
    l
}

/// `Σ_k y[:,k]ᵀ M y[:,k]`, the column-wise quadratic form summed over
/// opinion coordinates.
pub fn quadratic_form(y: &OpinionProfile, m: &DMatrix<f64>) -> Result<f64> {
    let n = y.n();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let x = y.matrix();
    let mut total = 0.0;
    for k in 0..y.d() {
        let col = x.column(k);
        total += col.dot(&(m * col));
    }
    Ok(total)
}

/// `Σ_k v[:,k]ᵀ Q v[:,k]` for a raw `m x d` block and an `m x m` weight.
pub fn q_norm2(v: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() != v.nrows() || q.ncols() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", v.nrows()),
            found: format!("{}x{}", q.nrows(), q.ncols()),
        });
    }
    Ok((0..v.ncols())
        .map(|k| {
            let col = v.column(k);
            col.dot(&(q * col))
        })
        .sum())
}

/// Row-wise weighted average `x'_i = Σ_j w_ij x_j / Σ_j w_ij`, summing `j`
/// in ascending order. Rows with zero mass keep their current value.
pub fn weighted_average(x: &OpinionProfile, weights: &DMatrix<f64>) -> OpinionProfile {
    let (n, d) = (x.n(), x.d());
    let src = x.matrix();
    let mut out = src.clone();
    for i in 0..n {
        let mass: f64 = (0..n).map(|j| weights[(i, j)]).sum();
        if mass == 0.0 {
            continue;
        }
        for k in 0..d {
            let mut acc = 0.0;
            for j in 0..n {
                let w = weights[(i, j)];
                if w != 0.0 {
                    acc += w * src[(j, k)];
                }
            }
            out[(i, k)] = acc / mass;
        }
    }
    OpinionProfile::from_matrix_unchecked(out)
}

/// Row-normalised update matrix `diag(W·1)^{-1} W`; zero rows become
/// identity rows.
pub fn update_matrix(weights: &DMatrix<f64>) -> DMatrix<f64> {
    let n = weights.nrows();
    let mut a = weights.clone();
    for i in 0..n {
        let mass = weights.row(i).sum();
        if mass == 0.0 {
            a[(i, i)] = 1.0;
        } else {
            a.row_mut(i).scale_mut(1.0 / mass);
        }
    }
    a
}

/// Cholesky succeeds iff the symmetric matrix is positive definite.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && m.clone().cholesky().is_some()
}
