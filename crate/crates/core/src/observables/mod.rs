//! Reported quantities derived from the conditional Gaussian state.

mod correlation;

use std::f64::consts::LN_2;

use faer::Mat;
use serde::Serialize;

pub use correlation::{
    density_correlation, momentum_correlation, region_number_statistics, CorrelationField, MomentumField,
    PoissonChannel, RegionSpec, RegionStats,
};

use crate::dynamics::state::{purity_of, symplectic_eigenvalues};
use crate::error::{ensure, Error, Result};
use crate::linalg::submatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureStats {
    pub var_x: f64,
    pub var_p: f64,
    /// covar[x̂_j, p̂_j]
    pub covar_xp: f64,
    /// covar[x̂_j, x̂_k]
    pub covar_xx: f64,
    /// covar[p̂_j, p̂_k]
    pub covar_pp: f64,
    /// covar[x̂_j, p̂_k]
    pub covar_xp_cross: f64,
}

/// Second moments of modes at basis indices j and k.
pub fn quadrature_stats(a: &Mat<f64>, j: usize, k: usize) -> Result<QuadratureStats> {
    let m = a.nrows() / 2;
    ensure(j < m && k < m, "mode", || format!("indices ({j}, {k}) outside {m} modes"))?;
    Ok(QuadratureStats {
        var_x: a[(2 * j, 2 * j)],
        var_p: a[(2 * j + 1, 2 * j + 1)],
        covar_xp: a[(2 * j, 2 * j + 1)],
        covar_xx: a[(2 * j, 2 * k)],
        covar_pp: a[(2 * j + 1, 2 * k + 1)],
        covar_xp_cross: a[(2 * j, 2 * k + 1)],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalQuadrature {
    /// Angle of q̂ = x̂ cos θ − p̂ sin θ with the least variance; None if isotropic.
    pub theta: Option<f64>,
    pub variance: f64,
}

/// Minimum-variance quadrature of a 2×2 block [[a, b], [b, c]].
pub fn optimal_quadrature(block: [[f64; 2]; 2]) -> OptimalQuadrature {
    let (a, b, c) = (block[0][0], block[0][1], block[1][1]);
    let half = 0.5 * (a - c);
    let r = half.hypot(b);
    let theta = if r <= 1e-12 * (a + c).abs() {
        None
    } else {
        Some(0.5 * b.atan2(-half))
    };
    OptimalQuadrature {
        theta,
        variance: 0.5 * (a + c) - r,
    }
}

/// Variance of x̂ cos θ − p̂ sin θ.
pub fn quadrature_variance(block: [[f64; 2]; 2], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    block[0][0] * c * c - 2.0 * block[0][1] * s * c + block[1][1] * s * s
}

/// Large-κ̃ asymptote of the squeezing angle.
pub fn strong_probe_angle(kappa_tilde: f64) -> f64 {
    1.0 / (4.0 * kappa_tilde).sqrt()
}

/// Small-κ̃ asymptote of the squeezing angle.
pub fn weak_probe_angle(kappa_tilde: f64) -> f64 {
    std::f64::consts::FRAC_PI_4 - 0.5 * kappa_tilde
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect()
}

/// Purity 1/(2^m √det A_m) of the reduced state on the given basis indices.
pub fn purity(a: &Mat<f64>, modes: &[usize]) -> Result<f64> {
    ensure(!modes.is_empty(), "subset", || "mode subset is empty".into())?;
    let m = a.nrows() / 2;
    ensure(modes.iter().all(|&i| i < m), "subset", || format!("index outside {m} modes"))?;
    let sub = submatrix(a, &quadrature_indices(modes));
    purity_of(&sub).map_err(|_| Error::Numerical("reduced covariance is not positive definite".into()))
}

/// Base-2 logarithmic negativity between modes j and k.
pub fn log_negativity(a: &Mat<f64>, j: usize, k: usize) -> Result<f64> {
    ensure(j != k, "modes", || "log-negativity needs two distinct modes".into())?;
    let mut sub = submatrix(a, &quadrature_indices(&[j, k]));
    let nu = symplectic_eigenvalues(&sub)?;
    if nu[0] < 0.5 - 1e-6 {
        return Err(Error::Numerical(format!("two-mode block is unphysical (nu = {:.6})", nu[0])));
    }
    // partial transpose: p̂_k → −p̂_k
    for i in 0..4 {
        if i != 3 {
            sub[(i, 3)] = -sub[(i, 3)];
            sub[(3, i)] = -sub[(3, i)];
        }
    }
    let nt = symplectic_eigenvalues(&sub)?;
    Ok(nt.iter().map(|&v| (-(2.0 * v).log2()).max(0.0)).sum())
}

/// β_jk = |κ̄²_jk| / √(κ̄²_jj κ̄²_kk).
pub fn distinguishability(kappa2_bar: &Mat<f64>, j: usize, k: usize) -> Result<f64> {
    let (d1, d2) = (kappa2_bar[(j, j)], kappa2_bar[(k, k)]);
    ensure(d1 > 0.0 && d2 > 0.0, "couplings", || {
        format!("diagonal couplings must be positive, got {d1} and {d2}")
    })?;
    Ok((kappa2_bar[(j, k)].abs() / (d1 * d2).sqrt()).min(1.0))
}

/// Asymptotic negativity log₄[(1 + β)/(1 − β)] of ideal stroboscopic entangling.
pub fn e_qnd(beta: f64) -> f64 {
    ((1.0 + beta) / (1.0 - beta)).ln() / (2.0 * LN_2)
}
