//! Thin helpers over faer for the small dense matrices used in the dynamics.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Runs dense kernels on the calling thread. The matrices here are small, and
/// sequential kernels make results independent of the thread pool size.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

pub fn asymmetry(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            d = d.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    d
}

pub fn max_abs(a: &Mat<f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = e.S().column_vector();
    let vals = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn sym_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))
}

/// F with F Fᵀ = A for a positive semidefinite A, dropping negligible directions.
pub fn psd_factor(a: &Mat<f64>) -> Result<Mat<f64>> {
    let (w, v) = sym_eigen(a)?;
    let top = w.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 1e-14 * top && w[i] > 0.0).collect();
    Ok(Mat::from_fn(a.nrows(), keep.len(), |i, c| {
        v[(i, keep[c])] * w[keep[c]].sqrt()
    }))
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn sym_sqrt(a: &Mat<f64>) -> Result<Mat<f64>> {
    let (w, v) = sym_eigen(a)?;
    let n = a.nrows();
    let d = Mat::from_fn(n, n, |i, j| v[(i, j)] * w[j].max(0.0).sqrt());
    Ok(&d * v.transpose())
}

/// log det of a symmetric positive definite matrix via Cholesky.
pub fn log_det_spd(a: &Mat<f64>) -> Result<f64> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|_| Error::Numerical("covariance block is not positive definite".into()))?;
    let l = llt.L();
    Ok((0..a.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub fn from_columns(cols: &[Vec<f64>]) -> Mat<f64> {
    let n = cols.first().map_or(0, Vec::len);
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn submatrix(a: &Mat<f64>, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}
