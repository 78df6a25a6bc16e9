use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, sym_eigen, sym_eigenvalues, sym_sqrt};

/// Gaussian state over quadratures ordered (x_0, p_0, x_1, p_1, …).
#[derive(Clone, Debug)]
pub struct GaussianState {
    pub r: Vec<f64>,
    pub a: Mat<f64>,
    pub t: f64,
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            r: vec![0.0; 2 * modes],
            a: Mat::from_fn(2 * modes, 2 * modes, |i, j| if i == j { 0.5 } else { 0.0 }),
            t: 0.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.r.len() / 2
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.a)
    }

    pub fn check_physical(&self, tol: f64) -> Result<()> {
        check_physical(&self.a, self.t, tol)
    }
}

/// Standard symplectic form for the interleaved ordering.
pub fn symplectic_form(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| {
        if i / 2 != j / 2 {
            0.0
        } else if i % 2 == 0 && j == i + 1 {
            1.0
        } else if i % 2 == 1 && j + 1 == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// ν_k from the eigenvalues ν² of A^{1/2} Ωᵀ A Ω A^{1/2}, one per mode, ascending.
pub fn symplectic_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let (w, _) = sym_eigen(a)?;
    if w[0] < 0.0 {
        // not positive semidefinite: report the violation through ν
        return Ok(vec![w[0]; n / 2]);
    }
    let s = sym_sqrt(a)?;
    let om = symplectic_form(n);
    let t = &s * om.transpose() * a * &om * &s;
    let t = Mat::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let ev = sym_eigenvalues(&t)?;
    // eigenvalues come in equal pairs
    Ok((0..n / 2).map(|k| ev[2 * k + 1].max(0.0).sqrt()).collect())
}

pub fn min_symplectic(a: &Mat<f64>) -> Result<f64> {
    Ok(symplectic_eigenvalues(a)?[0])
}

pub fn check_physical(a: &Mat<f64>, t: f64, tol: f64) -> Result<()> {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if !a[(i, j)].is_finite() {
                return Err(Error::Numerical(format!("covariance has a non-finite entry at t = {t}")));
            }
        }
    }
    let nu = min_symplectic(a)?;
    if nu < 0.5 - tol {
        return Err(Error::Unphysical { t, nu_min: nu });
    }
    Ok(())
}

/// Purity 1/(2^m √det A) of the whole matrix.
pub fn purity_of(a: &Mat<f64>) -> Result<f64> {
    let m = a.nrows() / 2;
    let ld = log_det_spd(a)?;
    Ok((-(m as f64) * std::f64::consts::LN_2 - 0.5 * ld).exp())
}

/// Covariance matrix snapshot for export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn of(t: f64, a: &Mat<f64>) -> Self {
        let n = a.nrows();
        Self {
            t,
            n,
            values: (0..n * n).map(|k| a[(k / n, k % n)]).collect(),
        }
    }
}
