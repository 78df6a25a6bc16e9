use faer::Mat;

use super::propagate::{congruence, plan, propagators, rk4_step, Piece};
use super::state::check_physical;
use crate::error::{Error, Result};
use crate::probe::{Generators, ProbeSchedule};

/// Physicality tolerance applied at every output sample.
pub const PHYSICAL_TOL: f64 = 1e-6;

/// Covariance samples on the requested output times.
#[derive(Clone, Debug)]
pub struct CovarianceSeries {
    pub times: Vec<f64>,
    pub states: Vec<Mat<f64>>,
}

impl CovarianceSeries {
    pub fn last(&self) -> &Mat<f64> {
        self.states.last().expect("series is never empty")
    }

    /// Entry (i, j) over time.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.states.iter().map(|a| a[(i, j)]).collect()
    }
}

/// Evenly spaced sample times 0, t_end/n, …, t_end.
pub fn sample_times(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn check_finite(a: &Mat<f64>, t: f64) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::Numerical(format!(
                    "covariance became non-finite at t = {t:.6}; reduce dt"
                )));
            }
        }
    }
    Ok(())
}

/// Integrates the Riccati equation, calling `observe` at each sample time.
///
/// The observer sees the covariance after the physicality check has passed.
pub fn evolve_covariance_with<F>(
    a0: &Mat<f64>,
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    dt: Option<f64>,
    samples: &[f64],
    mut observe: F,
) -> Result<Mat<f64>>
where
    F: FnMut(f64, &Mat<f64>) -> Result<()>,
{
    let n = 2 * gen.n_modes();
    if a0.nrows() != n || a0.ncols() != n {
        return Err(Error::invalid(
            "state",
            format!("covariance is {}x{}, generators need {n}x{n}", a0.nrows(), a0.ncols()),
        ));
    }
    check_physical(a0, 0.0, PHYSICAL_TOL)?;
    let mut a = a0.clone();
    for piece in plan(gen, schedule, t_end, dt, samples)? {
        match piece {
            Piece::Free { t0, t1 } => {
                congruence(&mut a, &propagators(&gen.drift, t1 - t0));
                crate::linalg::symmetrize(&mut a);
            }
            Piece::Active { t0, t1, steps, segment } => {
                let h = (t1 - t0) / steps as f64;
                for k in 0..steps {
                    rk4_step(&mut a, gen, &segment, t0 + k as f64 * h, h);
                }
                check_finite(&a, t1)?;
            }
            Piece::Sample { t } => {
                check_finite(&a, t)?;
                check_physical(&a, t, PHYSICAL_TOL)?;
                observe(t, &a)?;
            }
        }
    }
    Ok(a)
}

/// Integrates the Riccati equation and keeps every sample.
pub fn evolve_covariance(
    a0: &Mat<f64>,
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    dt: Option<f64>,
    samples: &[f64],
) -> Result<CovarianceSeries> {
    let mut series = CovarianceSeries {
        times: Vec::new(),
        states: Vec::new(),
    };
    evolve_covariance_with(a0, gen, schedule, t_end, dt, samples, |t, a| {
        series.times.push(t);
        series.states.push(a.clone());
        Ok(())
    })?;
    Ok(series)
}

/// The same generators with measurement back action removed (E kept).
pub fn unconditioned(gen: &Generators) -> Generators {
    let mut g = gen.clone();
    g.k2 = Mat::zeros(g.k2.nrows(), g.k2.ncols());
    g.meas = Mat::zeros(g.meas.nrows(), g.meas.ncols());
    g
}
