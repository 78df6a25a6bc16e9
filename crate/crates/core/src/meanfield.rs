//! Ground state of the 1D Gross-Pitaevskii equation in a harmonic trap.
//!
//! Internally the solver works with φ normalized to 1 and the dimensionless
//! coupling c = N·g1d; ψ = √N φ is what callers see.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::banded::{kinetic, Banded};
use crate::error::{ensure, Error, Result};
use crate::grid::SpatialGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub omega_x: f64,
    pub atom_number: f64,
    pub g1d: f64,
    pub grid: SpatialGrid,
}

impl TrapConfig {
    /// Builds a trap from the dimensionless interaction parameter N·g1d.
    pub fn from_interaction(interaction: f64, atom_number: f64, grid: SpatialGrid) -> Result<Self> {
        ensure(atom_number > 0.0, "trap.atom_number", || {
            format!("must be positive, got {atom_number}")
        })?;
        let cfg = Self {
            omega_x: 1.0,
            atom_number,
            g1d: interaction / atom_number,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn interaction(&self) -> f64 {
        self.atom_number * self.g1d
    }

    pub fn with_interaction(&self, interaction: f64) -> Self {
        Self {
            g1d: interaction / self.atom_number,
            ..self.clone()
        }
    }

    pub fn thomas_fermi_radius(&self) -> f64 {
        if self.g1d <= 0.0 {
            return 0.0;
        }
        (2.0 * tf_mu(self)).sqrt() / self.omega_x
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.atom_number > 0.0, "trap.atom_number", || {
            format!("must be positive, got {}", self.atom_number)
        })?;
        ensure(self.omega_x > 0.0, "trap.omega_x", || {
            format!("must be positive, got {}", self.omega_x)
        })?;
        ensure(self.g1d >= 0.0, "trap.interaction", || {
            format!("attractive interactions are not supported, got {}", self.interaction())
        })?;
        let extent = 2.0 * self.grid.half_width();
        let need = (8.0 / self.omega_x.sqrt()).max(2.0 * self.thomas_fermi_radius());
        ensure(extent >= need, "grid.half_width", || {
            format!("grid extent {extent:.3} is below the required {need:.3}")
        })
    }

    pub fn potential(&self) -> Vec<f64> {
        let w2 = self.omega_x * self.omega_x;
        self.grid.points().iter().map(|x| 0.5 * w2 * x * x).collect()
    }

    /// Single-particle Hamiltonian -½∂² + V as a banded matrix.
    pub fn hamiltonian(&self) -> Banded {
        let mut h = kinetic(self.grid.len(), self.grid.spacing());
        h.add_diagonal(&self.potential());
        h
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanField {
    pub grid: SpatialGrid,
    /// ψ(x), normalized to N0.
    pub psi: Vec<f64>,
    pub density: Vec<f64>,
    pub mu: f64,
    pub n0: f64,
    /// ‖(H + c φ² − μ)φ‖ for the unit-normalized φ.
    pub residual: f64,
    /// GP energy per particle after each imaginary-time step.
    #[serde(skip)]
    pub energy_history: Vec<f64>,
}

impl MeanField {
    /// Unit-normalized ground state φ = ψ/√N0.
    pub fn phi(&self) -> Vec<f64> {
        let s = self.n0.sqrt();
        self.psi.iter().map(|p| p / s).collect()
    }

    pub fn peak(&self) -> f64 {
        self.psi.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateOptions {
    pub tau: f64,
    pub max_relax_steps: usize,
    pub relax_tol: f64,
    pub max_newton: usize,
    pub tol: f64,
    pub edge_limit: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tau: 0.05,
            max_relax_steps: 20_000,
            relax_tol: 1e-8,
            max_newton: 40,
            tol: 1e-11,
            edge_limit: 1e-6,
        }
    }
}

fn normalize(phi: &mut [f64], dx: f64) {
    let s = (phi.iter().map(|p| p * p).sum::<f64>() * dx).sqrt();
    phi.iter_mut().for_each(|p| *p /= s);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn energy(h: &Banded, c: f64, phi: &[f64], dx: f64) -> f64 {
    let hphi = h.matvec(phi);
    (dot(phi, &hphi) + 0.5 * c * phi.iter().map(|p| p.powi(4)).sum::<f64>()) * dx
}

fn gp_residual(h: &Banded, c: f64, phi: &[f64], mu: f64, dx: f64) -> (Vec<f64>, f64) {
    let mut r = h.matvec(phi);
    for (ri, p) in r.iter_mut().zip(phi) {
        *ri += (c * p * p - mu) * p;
    }
    let norm = (dot(&r, &r) * dx).sqrt();
    (r, norm)
}

pub fn solve_ground_state(cfg: &TrapConfig) -> Result<MeanField> {
    solve_ground_state_with(cfg, &GroundStateOptions::default())
}

pub fn solve_ground_state_with(cfg: &TrapConfig, opts: &GroundStateOptions) -> Result<MeanField> {
    cfg.validate()?;
    let grid = &cfg.grid;
    let dx = grid.spacing();
    let c = cfg.interaction();
    let h = cfg.hamiltonian();
    let w = cfg.omega_x;

    let mut phi: Vec<f64> = grid.points().iter().map(|x| (-0.5 * w * x * x).exp()).collect();
    normalize(&mut phi, dx);

    // Linear problem: large steps make backward Euler an inverse iteration.
    let tau = if c == 0.0 { 1e3 } else { opts.tau };
    let mut history = vec![energy(&h, c, &phi, dx)];
    let mut converged = false;
    for _ in 0..opts.max_relax_steps {
        let mut a = h.scaled(tau);
        a.add_diagonal(&phi.iter().map(|p| 1.0 + tau * c * p * p).collect::<Vec<_>>());
        let mut next = a.cholesky()?.solve(&phi);
        normalize(&mut next, dx);
        let change = next
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        history.push(energy(&h, c, &phi, dx));
        let tol = if c == 0.0 { 1e-13 } else { opts.relax_tol };
        if change < tol {
            converged = true;
            break;
        }
    }
    let hphi = h.matvec(&phi);
    let mut mu = (dot(&phi, &hphi) + c * phi.iter().map(|p| p.powi(4)).sum::<f64>()) * dx;
    let (_, mut res) = gp_residual(&h, c, &phi, mu, dx);
    if !converged && res > 1e-4 {
        return Err(Error::NoConvergence {
            what: "imaginary-time relaxation",
            iterations: opts.max_relax_steps,
            residual: res,
        });
    }

    if c > 0.0 {
        // Newton on the bordered system [[L+, -φ], [φᵀdx, 0]].
        let mut it = 0;
        while res > opts.tol {
            if it == opts.max_newton {
                return Err(Error::NoConvergence {
                    what: "Newton polishing",
                    iterations: it,
                    residual: res,
                });
            }
            let (f, _) = gp_residual(&h, c, &phi, mu, dx);
            let cn = 0.5 * (dot(&phi, &phi) * dx - 1.0);
            let mut jac = h.clone();
            jac.add_diagonal(&phi.iter().map(|p| 3.0 * c * p * p - mu).collect::<Vec<_>>());
            let chol = jac.cholesky()?;
            let a = chol.solve(&f.iter().map(|v| -v).collect::<Vec<_>>());
            let b = chol.solve(&phi);
            let dmu = (-cn - dx * dot(&phi, &a)) / (dx * dot(&phi, &b));
            for i in 0..phi.len() {
                phi[i] += a[i] + dmu * b[i];
            }
            mu += dmu;
            let (_, r) = gp_residual(&h, c, &phi, mu, dx);
            res = r;
            it += 1;
        }
        // Rayleigh quotient of the polished state.
        let hphi = h.matvec(&phi);
        let norm = dot(&phi, &phi) * dx;
        mu = (dot(&phi, &hphi) + c * phi.iter().map(|p| p.powi(4)).sum::<f64>()) * dx / norm;
        normalize(&mut phi, dx);
        res = gp_residual(&h, c, &phi, mu, dx).1;
    }
    if res > 1e-8 {
        return Err(Error::NoConvergence {
            what: "ground state",
            iterations: history.len(),
            residual: res,
        });
    }

    let peak = phi.iter().cloned().fold(0.0, f64::max);
    let edge = phi[0].abs().max(phi[phi.len() - 1].abs());
    if edge > opts.edge_limit * peak {
        return Err(Error::GridTooSmall { ratio: edge / peak });
    }
    // Symmetrize against roundoff so parity holds to machine precision.
    let n = phi.len();
    for i in 0..n / 2 {
        let m = 0.5 * (phi[i] + phi[n - 1 - i]);
        phi[i] = m;
        phi[n - 1 - i] = m;
    }
    phi.iter_mut().for_each(|p| *p = p.abs());

    let s = cfg.atom_number.sqrt();
    let psi: Vec<f64> = phi.iter().map(|p| p * s).collect();
    Ok(MeanField {
        grid: grid.clone(),
        density: psi.iter().map(|p| p * p).collect(),
        psi,
        mu,
        n0: cfg.atom_number,
        residual: res,
        energy_history: history,
    })
}

fn tf_mu(cfg: &TrapConfig) -> f64 {
    (3.0 * cfg.interaction() * cfg.omega_x / (4.0 * SQRT_2)).powf(2.0 / 3.0)
}

/// Thomas-Fermi reference profile; not a solution of the discrete GPE.
pub fn thomas_fermi_profile(cfg: &TrapConfig) -> Result<MeanField> {
    ensure(cfg.g1d > 0.0, "trap.interaction", || {
        "Thomas-Fermi profile needs a positive interaction".into()
    })?;
    let mu = tf_mu(cfg);
    let v = cfg.potential();
    let density: Vec<f64> = v.iter().map(|v| ((mu - v) / cfg.g1d).max(0.0)).collect();
    let psi: Vec<f64> = density.iter().map(|n| n.sqrt()).collect();
    let phi: Vec<f64> = psi.iter().map(|p| p / cfg.atom_number.sqrt()).collect();
    let residual = gp_residual(&cfg.hamiltonian(), cfg.interaction(), &phi, mu, cfg.grid.spacing()).1;
    Ok(MeanField {
        grid: cfg.grid.clone(),
        psi,
        density,
        mu,
        n0: cfg.atom_number,
        residual,
        energy_history: Vec::new(),
    })
}

pub(crate) fn mu_at(cfg: &TrapConfig, c: f64) -> Result<MeanField> {
    solve_ground_state(&cfg.with_interaction(c))
}

/// ω0 = 2N ∂μ/∂N = 2c ∂μ/∂c, by central differences with a halving check.
pub fn number_dephasing_rate(cfg: &TrapConfig) -> Result<f64> {
    let c = cfg.interaction();
    if c == 0.0 {
        return Ok(0.0);
    }
    let estimate = |d: f64| -> Result<f64> {
        let p = mu_at(cfg, c * (1.0 + d))?.mu;
        let m = mu_at(cfg, c * (1.0 - d))?.mu;
        Ok((p - m) / d)
    };
    let mut d = 1e-3;
    let mut prev = estimate(d)?;
    let mut change = f64::INFINITY;
    for _ in 0..4 {
        d *= 0.5;
        let next = estimate(d)?;
        change = ((next - prev) / next).abs();
        prev = next;
        if change < 1e-3 {
            return Ok(next);
        }
    }
    if change < 1e-2 {
        Ok(prev)
    } else {
        Err(Error::FiniteDifference(format!(
            "omega_0 changed by {:.2}% on halving dN; use a finer grid",
            100.0 * change
        )))
    }
}


/// The interaction N·g1d at which the ground state has chemical potential `mu`.
pub fn interaction_for_mu(cfg: &TrapConfig, mu: f64) -> Result<f64> {
    let mu_free = 0.5 * cfg.omega_x;
    ensure(mu >= mu_free, "trap.chemical_potential", || {
        format!("must be at least omega_x/2 = {mu_free}, got {mu}")
    })?;
    if mu == mu_free {
        return Ok(0.0);
    }
    let f = |c: f64| -> Result<f64> { Ok(mu_at(cfg, c)?.mu - mu) };
    // TF estimate μ = (3c ω / 4√2)^(2/3) as the first upper guess
    let mut hi = (4.0 * SQRT_2 / 3.0) * mu.powf(1.5) / cfg.omega_x.sqrt();
    let mut f_hi = f(hi)?;
    let mut lo = 0.0;
    let mut f_lo = mu_free - mu;
    while f_hi < 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        let probe = cfg.with_interaction(hi);
        probe.validate()?;
        f_hi = f(hi)?;
    }
    // regula falsi with the Illinois modification
    let mut side = 0;
    for _ in 0..100 {
        let c = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let fc = f(c)?;
        if fc.abs() < 1e-11 || (hi - lo) < 1e-12 * hi {
            return Ok(c);
        }
        if fc.signum() == f_hi.signum() {
            hi = c;
            f_hi = fc;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = c;
            f_lo = fc;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence {
        what: "interaction for chemical potential",
        iterations: 100,
        residual: f(0.5 * (lo + hi))?.abs(),
    })
}
