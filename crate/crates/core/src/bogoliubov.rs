//! Bogoliubov-de Gennes modes about the mean field.
//!
//! With L± = H − μ + (2 ± 1)c φ², the discrete equations are
//! L+ f⁻ = ω f⁺ and L− f⁺ = ω f⁻. Writing L+ = L Lᵀ, the matrix Lᵀ L− L is
//! symmetric with eigenvalues ω² and eigenvectors z = Lᵀ f⁻, so the whole
//! spectrum comes from one real symmetric eigensolve.

use std::f64::consts::{PI, SQRT_2};

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::banded::Banded;
use crate::error::{ensure, Error, Result};
use crate::grid::SpatialGrid;
use crate::meanfield::{mu_at, number_dephasing_rate, MeanField, TrapConfig};

const RESIDUAL_TOL: f64 = 1e-6;
const POINTS_PER_OSCILLATION: f64 = 10.0;

/// Excited modes j = 1..=J from the BdG eigenproblem.
#[derive(Clone, Debug)]
pub struct BdgModes {
    pub frequencies: Vec<f64>,
    pub f_plus: Vec<Vec<f64>>,
    pub f_minus: Vec<Vec<f64>>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroMode {
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub omega0: f64,
    /// ∫ f0+ f0- dx, nominally 1/2.
    pub norm: f64,
}

/// Modes that take part in the dynamics, in quadrature order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BogoliubovBasis {
    pub grid: SpatialGrid,
    pub psi: Vec<f64>,
    pub mu: f64,
    pub n0: f64,
    /// Mode label j of each retained mode (0 is the zero mode).
    pub labels: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub f_plus: Vec<Vec<f64>>,
    pub f_minus: Vec<Vec<f64>>,
    pub includes_zero_mode: bool,
    /// Always kept: f0+ enters every coupling profile.
    pub zero: ZeroMode,
    pub residual: f64,
}

impl BogoliubovBasis {
    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    /// Number of retained excited modes.
    pub fn excited(&self) -> usize {
        self.labels.iter().filter(|&&j| j > 0).count()
    }

    pub fn index_of(&self, j: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == j)
    }

    pub fn require(&self, j: usize) -> Result<usize> {
        self.index_of(j).ok_or_else(|| {
            Error::invalid(
                "mode",
                format!("mode {j} is not in the basis (labels {:?}..)", self.labels.first()),
            )
        })
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p * p).collect()
    }

    /// Copy with the zero mode removed from the dynamical set.
    pub fn number_conserving(&self) -> Self {
        let mut b = self.clone();
        if let Some(i) = b.index_of(0) {
            b.labels.remove(i);
            b.frequencies.remove(i);
            b.f_plus.remove(i);
            b.f_minus.remove(i);
        }
        b.includes_zero_mode = false;
        b
    }

    /// Restriction to the first `j_max` excited modes.
    pub fn truncated(&self, j_max: usize) -> Self {
        let keep: Vec<usize> = (0..self.n_modes()).filter(|&i| self.labels[i] <= j_max).collect();
        Self {
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            frequencies: keep.iter().map(|&i| self.frequencies[i]).collect(),
            f_plus: keep.iter().map(|&i| self.f_plus[i].clone()).collect(),
            f_minus: keep.iter().map(|&i| self.f_minus[i].clone()).collect(),
            ..self.clone()
        }
    }
}

/// Largest J the grid resolves, bounding ω_J by the noninteracting value J·ω_x.
pub fn max_resolvable_modes(mf: &MeanField, cfg: &TrapConfig) -> usize {
    let dx = mf.grid.spacing();
    let c = cfg.interaction();
    let phi = mf.phi();
    let floor = cfg
        .potential()
        .iter()
        .zip(&phi)
        .map(|(v, p)| v + c * p * p)
        .fold(f64::INFINITY, f64::min);
    let k_max = 2.0 * PI / (POINTS_PER_OSCILLATION * dx);
    // kinetic energy available to mode J at the trap floor
    let by_spacing = 0.5 * k_max * k_max - (mf.mu - floor);
    let l = mf.grid.half_width();
    let by_extent = 0.5 * (cfg.omega_x * l).powi(2) - mf.mu;
    let e = by_spacing.min(by_extent) / cfg.omega_x;
    if e < 1.0 {
        0
    } else {
        e.floor() as usize
    }
}

fn grid_norm(v: &[f64], dx: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

/// Sign so that f⁻ is positive on its outermost right lobe.
fn fix_sign(fp: &mut [f64], fm: &mut [f64]) {
    let peak = fm.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if let Some(i) = fm.iter().rposition(|v| v.abs() > 1e-3 * peak) {
        if fm[i] < 0.0 {
            fm.iter_mut().for_each(|v| *v = -*v);
            fp.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn operators(mf: &MeanField, cfg: &TrapConfig) -> (Banded, Banded) {
    let c = cfg.interaction();
    let n2: Vec<f64> = mf.phi().iter().map(|p| p * p).collect();
    let mut lp = cfg.hamiltonian();
    lp.add_diagonal(&n2.iter().map(|n| 3.0 * c * n - mf.mu).collect::<Vec<_>>());
    let mut lm = cfg.hamiltonian();
    lm.add_diagonal(&n2.iter().map(|n| c * n - mf.mu).collect::<Vec<_>>());
    (lp, lm)
}

pub fn solve_bdg(mf: &MeanField, cfg: &TrapConfig, j_count: usize) -> Result<BdgModes> {
    ensure(j_count >= 1, "basis.modes", || "need at least one excited mode".into())?;
    let max_safe = max_resolvable_modes(mf, cfg);
    if j_count > max_safe {
        return Err(Error::Unresolved {
            requested: j_count,
            max_safe,
        });
    }
    let dx = mf.grid.spacing();
    let c = cfg.interaction();
    let (lp, lm) = operators(mf, cfg);

    let mut freqs = Vec::with_capacity(j_count);
    let mut fps = Vec::with_capacity(j_count);
    let mut fms = Vec::with_capacity(j_count);
    if c == 0.0 {
        // L+ = L− = H − μ: f⁺ = f⁻ = φ_j/√2, ω_j = E_j − E_0.
        let eig = cfg
            .hamiltonian()
            .to_dense()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        for j in 1..=j_count {
            freqs.push(s[j] - s[0]);
            let f: Vec<f64> = (0..u.nrows()).map(|i| u[(i, j)] / (2.0 * dx).sqrt()).collect();
            fps.push(f.clone());
            fms.push(f);
        }
    } else {
        let chol = lp.cholesky()?;
        let l = chol.factor();
        let t = l.transpose().mul(&lm.mul(&l)).to_dense();
        let t = Mat::from_fn(t.nrows(), t.ncols(), |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        // eigenvalue 0 belongs to the zero mode (z ∝ L⁻¹ψ)
        if s[0].abs() > 1e-6 * s[1].abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "expected a null eigenvalue for the zero mode, found {:.3e}",
                s[0]
            )));
        }
        for j in 1..=j_count {
            if s[j] <= 0.0 {
                return Err(Error::Numerical(format!("negative BdG eigenvalue {:.3e}", s[j])));
            }
            let w = s[j].sqrt();
            let scale = (w / (2.0 * dx)).sqrt();
            let z: Vec<f64> = (0..u.nrows()).map(|i| u[(i, j)] * scale).collect();
            let mut fm = z.clone();
            chol.solve_upper(&mut fm);
            let fp: Vec<f64> = l.matvec(&z).iter().map(|v| v / w).collect();
            freqs.push(w);
            fps.push(fp);
            fms.push(fm);
        }
    }

    let mut residual: f64 = 0.0;
    for j in 0..j_count {
        project_parity(&mut fps[j], &mut fms[j]);
        fix_sign(&mut fps[j], &mut fms[j]);
        let w = freqs[j];
        let r1: Vec<f64> = lp.matvec(&fms[j]).iter().zip(&fps[j]).map(|(a, b)| a - w * b).collect();
        let r2: Vec<f64> = lm.matvec(&fps[j]).iter().zip(&fms[j]).map(|(a, b)| a - w * b).collect();
        residual = residual.max(grid_norm(&r1, dx)).max(grid_norm(&r2, dx));
        let norm = mf.grid.integrate_with(|i| fps[j][i] * fms[j][i]);
        if (norm - 0.5).abs() > 1e-6 {
            return Err(Error::Numerical(format!("mode {} has norm {norm:.9}", j + 1)));
        }
        if j > 0 && w <= freqs[j - 1] {
            return Err(Error::Numerical(format!("spectrum not increasing at mode {}", j + 1)));
        }
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("BdG residual {residual:.3e} above {RESIDUAL_TOL:.0e}")));
    }
    Ok(BdgModes {
        frequencies: freqs,
        f_plus: fps,
        f_minus: fms,
        residual,
    })
}

/// Removes the part of the wrong parity left by the eigensolver.
fn project_parity(fp: &mut [f64], fm: &mut [f64]) {
    let n = fm.len();
    let overlap: f64 = (0..n).map(|i| fm[i] * fm[n - 1 - i]).sum();
    let p = if overlap >= 0.0 { 1.0 } else { -1.0 };
    for f in [fp, fm] {
        for i in 0..n / 2 {
            let k = n - 1 - i;
            let a = 0.5 * (f[i] + p * f[k]);
            f[i] = a;
            f[k] = p * a;
        }
        if n % 2 == 1 && p < 0.0 {
            f[n / 2] = 0.0;
        }
    }
}

pub fn zero_mode_pair(mf: &MeanField, cfg: &TrapConfig) -> Result<ZeroMode> {
    let c = cfg.interaction();
    let phi = mf.phi();
    let f_plus: Vec<f64> = phi.iter().map(|p| p / SQRT_2).collect();
    let (f_minus, omega0) = if c == 0.0 {
        (f_plus.clone(), 0.0)
    } else {
        let h = 1e-4 * c;
        let pp = mu_at(cfg, c + h)?.phi();
        let pm = mu_at(cfg, c - h)?.phi();
        let fm = (0..phi.len())
            .map(|i| SQRT_2 * (0.5 * phi[i] + c * (pp[i] - pm[i]) / (2.0 * h)))
            .collect();
        (fm, number_dephasing_rate(cfg)?)
    };
    let norm = mf.grid.integrate_with(|i| f_plus[i] * f_minus[i]);
    if (norm - 0.5).abs() > 1e-4 {
        return Err(Error::FiniteDifference(format!(
            "zero-mode normalization {norm:.8} differs from 1/2 by more than 1e-4"
        )));
    }
    Ok(ZeroMode {
        f_plus,
        f_minus,
        omega0,
        norm,
    })
}

/// Mean field, zero mode and J excited modes in one basis.
pub fn build_basis(
    mf: &MeanField,
    cfg: &TrapConfig,
    j_count: usize,
    include_zero_mode: bool,
) -> Result<BogoliubovBasis> {
    let modes = solve_bdg(mf, cfg, j_count)?;
    let zero = zero_mode_pair(mf, cfg)?;
    let mut labels: Vec<usize> = (1..=j_count).collect();
    let mut frequencies = modes.frequencies;
    let mut f_plus = modes.f_plus;
    let mut f_minus = modes.f_minus;
    if include_zero_mode {
        labels.insert(0, 0);
        frequencies.insert(0, zero.omega0);
        f_plus.insert(0, zero.f_plus.clone());
        f_minus.insert(0, zero.f_minus.clone());
    }
    Ok(BogoliubovBasis {
        grid: mf.grid.clone(),
        psi: mf.psi.clone(),
        mu: mf.mu,
        n0: mf.n0,
        labels,
        frequencies,
        f_plus,
        f_minus,
        includes_zero_mode: include_zero_mode,
        zero,
        residual: modes.residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    Noninteracting { omega_x: f64 },
    ThomasFermi { omega_x: f64, interaction: f64 },
}

#[derive(Clone, Debug)]
pub struct ModeReference {
    pub omega: f64,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
}

/// Unit-normalized Hermite functions φ_0..=φ_j for trap frequency ω.
pub fn hermite_functions(j: usize, omega: f64, x: &[f64]) -> Vec<Vec<f64>> {
    let norm = (omega / PI).powf(0.25);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(j + 1);
    out.push(x.iter().map(|&x| norm * (-0.5 * omega * x * x).exp()).collect());
    if j >= 1 {
        let s = omega.sqrt();
        out.push(x.iter().zip(&out[0]).map(|(&x, p)| SQRT_2 * s * x * p).collect());
    }
    for n in 1..j {
        let a = (2.0 / (n as f64 + 1.0)).sqrt();
        let b = (n as f64 / (n as f64 + 1.0)).sqrt();
        let s = omega.sqrt();
        let next = (0..x.len())
            .map(|i| a * s * x[i] * out[n][i] - b * out[n - 1][i])
            .collect();
        out.push(next);
    }
    out
}

fn legendre(j: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if j == 0 {
        return p0;
    }
    for n in 1..j {
        let p2 = ((2 * n + 1) as f64 * t * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Closed-form modes: Hermite-Gauss without interactions, Legendre forms in the TF limit.
pub fn analytic_reference(regime: Regime, j: usize, grid: &SpatialGrid) -> Result<ModeReference> {
    let x = grid.points();
    match regime {
        Regime::Noninteracting { omega_x } => {
            let turning = ((2 * j + 1) as f64 / omega_x).sqrt();
            ensure(turning < grid.half_width(), "mode", || {
                format!("Hermite function {j} extends past the grid edge")
            })?;
            let phi = hermite_functions(j, omega_x, x).pop().unwrap();
            let f: Vec<f64> = phi.iter().map(|p| p / SQRT_2).collect();
            Ok(ModeReference {
                omega: j as f64 * omega_x,
                f_plus: f.clone(),
                f_minus: f,
            })
        }
        Regime::ThomasFermi { omega_x, interaction } => {
            ensure(interaction > 0.0, "trap.interaction", || {
                "Thomas-Fermi modes need a positive interaction".into()
            })?;
            let c = interaction;
            let mu = (3.0 * c * omega_x / (4.0 * SQRT_2)).powf(2.0 / 3.0);
            let r = (2.0 * mu).sqrt() / omega_x;
            let omega = if j == 0 {
                4.0 * mu / 3.0
            } else {
                omega_x * ((j * (j + 1)) as f64 / 2.0).sqrt()
            };
            ensure(j == 0 || omega < mu, "mode", || {
                format!("mode {j} (omega {omega:.3}) is outside the hydrodynamic range omega < mu = {mu:.3}")
            })?;
            let phi: Vec<f64> = x
                .iter()
                .map(|&x| ((mu - 0.5 * omega_x * omega_x * x * x) / c).max(0.0).sqrt())
                .collect();
            let (fp, fm) = if j == 0 {
                let fp = phi.iter().map(|p| p / SQRT_2).collect();
                let fm = phi
                    .iter()
                    .map(|&p| if p > 0.0 { SQRT_2 * mu / (3.0 * c * p) } else { 0.0 })
                    .collect();
                (fp, fm)
            } else {
                let a = (omega * (2 * j + 1) as f64 / (8.0 * c * r)).sqrt();
                let p: Vec<f64> = x.iter().map(|&x| legendre(j, (x / r).clamp(-1.0, 1.0))).collect();
                let fp = (0..x.len()).map(|i| 2.0 * c * a / omega * phi[i] * p[i]).collect();
                let fm = (0..x.len())
                    .map(|i| if phi[i] > 0.0 { a * p[i] / phi[i] } else { 0.0 })
                    .collect();
                (fp, fm)
            };
            Ok(ModeReference {
                omega,
                f_plus: fp,
                f_minus: fm,
            })
        }
    }
}
