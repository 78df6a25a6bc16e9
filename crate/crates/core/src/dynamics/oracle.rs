//! Discrete homodyne updates on a joint system + probe Gaussian state.

use faer::Mat;

use super::propagate::{congruence, propagators};
use super::state::{check_physical, GaussianState};
use crate::error::{ensure, Error, Result};
use crate::linalg::{sym_eigen, symmetrize};
use crate::probe::{Generators, ProbeSchedule};

/// Eigenvalues of ΛBΛ above this fraction of the largest are inverted.
pub const PINV_KEEP: f64 = 1e-8;
/// Eigenvalues below this fraction are treated as exact zeros.
pub const PINV_DROP: f64 = 1e-12;

/// System (A, R) and probe (B, Q) blocks with cross covariance C.
#[derive(Clone, Debug)]
pub struct JointGaussian {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub r: Vec<f64>,
    pub q: Vec<f64>,
}

impl JointGaussian {
    pub fn full(&self) -> Mat<f64> {
        let (n, k) = (self.a.nrows(), self.b.nrows());
        Mat::from_fn(n + k, n + k, |i, j| match (i < n, j < n) {
            (true, true) => self.a[(i, j)],
            (true, false) => self.c[(i, j - n)],
            (false, true) => self.c[(j, i - n)],
            (false, false) => self.b[(i - n, j - n)],
        })
    }

    pub fn check_physical(&self, tol: f64) -> Result<()> {
        check_physical(&self.full(), 0.0, tol)
    }

    /// System state ⊗ vacuum probes, then the QND coupling p_j −= Σ_d g_jd r_d, s_d −= Σ_j g_jd x_j.
    ///
    /// Probe d has quadratures (r_d, s_d); `g` is modes × probes.
    pub fn coupled(state: &GaussianState, g: &Mat<f64>) -> Self {
        let m = state.n_modes();
        let k = g.ncols();
        let n = 2 * m + 2 * k;
        let mut s = Mat::<f64>::identity(n, n);
        for j in 0..m {
            for d in 0..k {
                s[(2 * j + 1, 2 * m + 2 * d)] = -g[(j, d)];
                s[(2 * m + 2 * d + 1, 2 * j)] = -g[(j, d)];
            }
        }
        let full0 = Mat::from_fn(n, n, |i, j| {
            if i < 2 * m && j < 2 * m {
                state.a[(i, j)]
            } else if i == j {
                0.5
            } else {
                0.0
            }
        });
        let mut full = &s * &full0 * s.transpose();
        symmetrize(&mut full);
        let mut r0 = state.r.clone();
        r0.resize(n, 0.0);
        let r = &s * Mat::from_fn(n, 1, |i, _| r0[i]);
        let nm = 2 * m;
        Self {
            a: Mat::from_fn(nm, nm, |i, j| full[(i, j)]),
            b: Mat::from_fn(2 * k, 2 * k, |i, j| full[(nm + i, nm + j)]),
            c: Mat::from_fn(nm, 2 * k, |i, j| full[(i, nm + j)]),
            r: (0..nm).map(|i| r[(i, 0)]).collect(),
            q: (0..2 * k).map(|i| r[(nm + i, 0)]).collect(),
        }
    }
}

/// Moore-Penrose inverse of a symmetric PSD matrix with a rank-stability check.
pub fn pseudo_inverse(m: &Mat<f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let (w, v) = sym_eigen(m)?;
    let top = w.iter().cloned().fold(0.0, |a: f64, b| a.max(b.abs()));
    let mut out = Mat::<f64>::zeros(n, n);
    if top == 0.0 {
        return Ok(out);
    }
    for (k, &l) in w.iter().enumerate() {
        let rel = l.abs() / top;
        if rel > PINV_KEEP {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[(i, k)] * v[(j, k)] / l;
                }
            }
        } else if rel >= PINV_DROP {
            return Err(Error::IllConditioned(rel));
        }
    }
    Ok(out)
}

/// Homodyne detection of every probe momentum quadrature with the given outcomes.
pub fn discrete_measurement_update(joint: &JointGaussian, outcomes: &[f64]) -> Result<GaussianState> {
    let k = joint.b.nrows() / 2;
    ensure(outcomes.len() == k, "outcomes", || {
        format!("expected {k} outcomes, got {}", outcomes.len())
    })?;
    let n = joint.a.nrows();
    let bp = Mat::from_fn(k, k, |i, j| joint.b[(2 * i + 1, 2 * j + 1)]);
    let cp = Mat::from_fn(n, k, |i, j| joint.c[(i, 2 * j + 1)]);
    let pinv = pseudo_inverse(&bp)?;
    let gain = &cp * &pinv;
    let mut a = &joint.a - &gain * cp.transpose();
    symmetrize(&mut a);
    let dq: Vec<f64> = (0..k).map(|d| joint.q[2 * d + 1] - outcomes[d]).collect();
    let r = (0..n)
        .map(|i| joint.r[i] - (0..k).map(|d| gain[(i, d)] * dq[d]).sum::<f64>())
        .collect();
    Ok(GaussianState { r, a, t: 0.0 })
}

/// One step of length τ: couple vacuum probes, measure them, add the unresolved
/// back action, then rotate freely. Outcomes equal the predicted means, so
/// only the covariance is exercised.
pub fn discrete_step(state: &GaussianState, gen: &Generators, strength: f64, tau: f64) -> Result<GaussianState> {
    let m = gen.n_modes();
    let scale = (tau * strength / 2.0).sqrt();
    let g = Mat::from_fn(m, gen.n_channels(), |i, d| scale * gen.meas[(i, d)]);
    let joint = JointGaussian::coupled(state, &g);
    let outcomes: Vec<f64> = (0..g.ncols()).map(|d| joint.q[2 * d + 1]).collect();
    let mut next = discrete_measurement_update(&joint, &outcomes)?;
    // E − K²/4 on the p entries: back action not carried by the detected probes
    for i in 0..m {
        for j in 0..m {
            next.a[(2 * i + 1, 2 * j + 1)] += tau * strength * (gen.env[(i, j)] - 0.25 * gen.k2[(i, j)]);
        }
    }
    congruence(&mut next.a, &propagators(&gen.drift, tau));
    symmetrize(&mut next.a);
    next.t = state.t + tau;
    Ok(next)
}

/// Iterates `discrete_step` from 0 to t_end (a multiple of τ).
pub fn discrete_pipeline(
    state: &GaussianState,
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    tau: f64,
) -> Result<GaussianState> {
    let steps = (t_end / tau).round() as usize;
    ensure(steps >= 1 && ((steps as f64) * tau - t_end).abs() < 1e-9 * t_end, "tau", || {
        format!("t_end = {t_end} is not a multiple of tau = {tau}")
    })?;
    let mut s = state.clone();
    for k in 0..steps {
        let t = k as f64 * tau;
        s = discrete_step(&s, gen, schedule.strength_at(t + 0.5 * tau), tau)?;
    }
    Ok(s)
}
