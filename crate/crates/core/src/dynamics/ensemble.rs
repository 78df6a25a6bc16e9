use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::propagate::{apply_blocks, congruence, plan, propagators, rk4_step, x_columns, Piece};
use super::riccati::PHYSICAL_TOL;
use super::state::{check_physical, GaussianState};
use crate::error::{ensure, Error, Result};
use crate::probe::{Generators, ProbeSchedule};

/// Random stream for trajectory `index` under a master seed.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One homodyne record increment.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecordIncrement {
    pub t: f64,
    pub channel: usize,
    pub increment: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub moments: Vec<Vec<f64>>,
    pub covariances: Vec<Mat<f64>>,
    pub records: Vec<RecordIncrement>,
}

/// Advances a batch of first-moment vectors together with the shared covariance.
///
/// `rs` holds one vector per trajectory, back to back, with the (x, p) pairs
/// of the basis indices in `track`, and `rngs` one stream per trajectory.
/// Record increments are written only for a batch of one tracking every mode.
#[allow(clippy::too_many_arguments)]
fn drive<F>(
    a0: &Mat<f64>,
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    dt: Option<f64>,
    samples: &[f64],
    track: &[usize],
    rs: &mut [f64],
    rngs: &mut [ChaCha8Rng],
    mut records: Option<&mut Vec<RecordIncrement>>,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(f64, &Mat<f64>, &[f64]) -> Result<()>,
{
    let m = gen.n_modes();
    let n = 2 * m;
    let c = gen.n_channels();
    ensure(gen.meas.nrows() == m, "generators", || {
        format!("measurement matrix has {} rows for {m} modes", gen.meas.nrows())
    })?;
    let nt = 2 * track.len();
    ensure(a0.nrows() == n && rs.len() == nt * rngs.len() && track.iter().all(|&i| i < m), "state", || {
        "state dimension does not match the generators".into()
    })?;
    ensure(records.is_none() || nt == n, "state", || "a recorded trajectory tracks every mode".into())?;
    let pick = |p: Vec<crate::probe::Block>| -> Vec<crate::probe::Block> { track.iter().map(|&i| p[i]).collect() };
    check_physical(a0, 0.0, PHYSICAL_TOL)?;
    let mut a = a0.clone();
    for piece in plan(gen, schedule, t_end, dt, samples)? {
        match piece {
            Piece::Free { t0, t1 } => {
                congruence(&mut a, &propagators(&gen.drift, t1 - t0));
                crate::linalg::symmetrize(&mut a);
                let p = pick(propagators(&gen.feedback_drift, t1 - t0));
                rs.par_chunks_mut(nt).for_each(|r| apply_blocks(r, &p));
            }
            Piece::Active { t0, t1, steps, segment } => {
                let h = (t1 - t0) / steps as f64;
                let p = pick(propagators(&gen.feedback_drift, h));
                let sq = h.sqrt();
                for k in 0..steps {
                    let t = t0 + k as f64 * h;
                    let s = segment.at(t).sqrt();
                    // innovation gain A_x M on all 2m rows
                    let g = x_columns(&a) * &gen.meas;
                    if let Some(rec) = records.as_deref_mut() {
                        let r = &mut rs[..n];
                        let mut dw = vec![0.0; c];
                        for (ch, w) in dw.iter_mut().enumerate() {
                            *w = sq * rngs[0].sample::<f64, _>(StandardNormal);
                            let signal: f64 = (0..m).map(|i| gen.meas[(i, ch)] * r[2 * i]).sum();
                            rec.push(RecordIncrement {
                                t,
                                channel: ch,
                                increment: s * signal * h + *w,
                            });
                        }
                        step_moments(r, &p, &g, s, &dw);
                    } else {
                        let g = tracked_factor(&g, track)?;
                        let c = g.ncols();
                        rs.par_chunks_mut(nt).zip(rngs.par_iter_mut()).for_each_init(
                            || vec![0.0; c],
                            |dw, (r, rng)| {
                                for w in dw.iter_mut() {
                                    *w = sq * rng.sample::<f64, _>(StandardNormal);
                                }
                                step_moments(r, &p, &g, s, dw);
                            },
                        );
                    }
                    rk4_step(&mut a, gen, &segment, t, h);
                }
            }
            Piece::Sample { t } => {
                check_physical(&a, t, PHYSICAL_TOL)?;
                if rs.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical(format!("first moments became non-finite at t = {t:.6}")));
                }
                observe(t, &a, rs)?;
            }
        }
    }
    Ok(())
}

/// F with F Fᵀ = G_T G_Tᵀ for the rows T of the tracked modes.
///
/// The increments G_T dW and F dW′ have the same law, and F has at most
/// 2|T| columns, so untracked modes cost nothing per trajectory.
fn tracked_factor(g: &Mat<f64>, track: &[usize]) -> Result<Mat<f64>> {
    let rows: Vec<usize> = track.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    let gt = Mat::from_fn(rows.len(), g.ncols(), |r, c| g[(rows[r], c)]);
    if gt.ncols() <= gt.nrows() {
        return Ok(gt);
    }
    crate::linalg::psd_factor(&(&gt * gt.transpose()))
}

/// R ← P R + s G dW.
fn step_moments(r: &mut [f64], p: &[crate::probe::Block], g: &Mat<f64>, s: f64, dw: &[f64]) {
    apply_blocks(r, p);
    for (i, ri) in r.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (ch, w) in dw.iter().enumerate() {
            acc += g[(i, ch)] * w;
        }
        *ri += s * acc;
    }
}

/// A single conditional trajectory with its homodyne record, one increment per step and channel.
pub fn evolve_trajectory(
    state: &GaussianState,
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    dt: Option<f64>,
    samples: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    let mut rs = state.r.clone();
    let all: Vec<usize> = (0..gen.n_modes()).collect();
    let mut rngs = vec![trajectory_rng(seed, 0)];
    let mut records = Vec::new();
    let mut out = Trajectory {
        times: Vec::new(),
        moments: Vec::new(),
        covariances: Vec::new(),
        records: Vec::new(),
    };
    drive(
        &state.a,
        gen,
        schedule,
        t_end,
        dt,
        samples,
        &all,
        &mut rs,
        &mut rngs,
        Some(&mut records),
        |t, a, r| {
            out.times.push(t);
            out.moments.push(r.to_vec());
            out.covariances.push(a.clone());
            Ok(())
        },
    )?;
    out.records = records;
    Ok(out)
}

/// Ensemble statistics at one sample time.
///
/// `mean`, `a_ens`, `a_ens_se` and `mean_energy` cover the tracked modes in
/// order; `a_cond` is the full conditional covariance.
#[derive(Clone, Debug)]
pub struct EnsembleSample {
    pub t: f64,
    pub mean: Vec<f64>,
    /// Covariance of the trajectory first moments (unbiased).
    pub a_ens: Mat<f64>,
    /// Standard error of each entry of `a_ens`.
    pub a_ens_se: Mat<f64>,
    /// Conditional covariance shared by all trajectories.
    pub a_cond: Mat<f64>,
    /// Per-mode ω(⟨x⟩² + ⟨p⟩²)/2 averaged over trajectories.
    pub mean_energy: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    /// Basis indices of the tracked modes.
    pub modes: Vec<usize>,
    /// Mode labels of the tracked modes.
    pub labels: Vec<usize>,
    pub samples: Vec<EnsembleSample>,
    /// First-moment series of the first few trajectories, for plotting.
    pub examples: Vec<Vec<Vec<f64>>>,
}

impl EnsembleSummary {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// σ²_⟨x⟩ of the i-th tracked mode over time.
    pub fn sigma2_x(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.a_ens[(2 * i, 2 * i)]).collect()
    }

    pub fn sigma2_x_se(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.a_ens_se[(2 * i, 2 * i)]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub samples: Vec<f64>,
    /// How many trajectories to keep in full.
    pub keep: usize,
    /// Basis indices whose first moments are propagated; all when `None`.
    pub modes: Option<Vec<usize>>,
}

fn summarize(t: f64, a: &Mat<f64>, rs: &[f64], n: usize, freqs: &[f64]) -> EnsembleSample {
    let nt = rs.len() / n;
    let mut mean = vec![0.0; n];
    for r in rs.chunks(n) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= nt as f64;
    }
    let mut sum = Mat::<f64>::zeros(n, n);
    let mut sum2 = Mat::<f64>::zeros(n, n);
    let mut d = vec![0.0; n];
    let mut energy = vec![0.0; n / 2];
    for r in rs.chunks(n) {
        for i in 0..n {
            d[i] = r[i] - mean[i];
        }
        for i in 0..n {
            for j in 0..n {
                let v = d[i] * d[j];
                sum[(i, j)] += v;
                sum2[(i, j)] += v * v;
            }
        }
        for (k, e) in energy.iter_mut().enumerate() {
            *e += 0.5 * freqs[k] * (r[2 * k] * r[2 * k] + r[2 * k + 1] * r[2 * k + 1]);
        }
    }
    let nf = nt as f64;
    let a_ens = Mat::from_fn(n, n, |i, j| sum[(i, j)] / (nf - 1.0));
    let a_ens_se = Mat::from_fn(n, n, |i, j| {
        let mu = sum[(i, j)] / nf;
        let var = (sum2[(i, j)] / nf - mu * mu).max(0.0);
        (var / (nf - 1.0)).sqrt()
    });
    EnsembleSample {
        t,
        mean,
        a_ens,
        a_ens_se,
        a_cond: a.clone(),
        mean_energy: energy.into_iter().map(|e| e / nf).collect(),
    }
}

/// Runs `n_traj` independent trajectories from a common initial state.
///
/// Trajectory i draws from stream i of the master seed, and reductions run
/// in trajectory order, so the summary is bit-identical for any thread count.
/// The means of different modes couple only through the noise, so only the
/// tracked modes are propagated, driven by a factor of their noise covariance;
/// the moments have the same law as with the per-pixel channels.
pub fn run_ensemble(
    state: &GaussianState,
    gen: &Generators,
    schedule: &ProbeSchedule,
    opts: &EnsembleOptions,
) -> Result<EnsembleSummary> {
    ensure(opts.n_traj >= 2, "ensemble.n_traj", || {
        format!("need at least 2 trajectories, got {}", opts.n_traj)
    })?;
    let track: Vec<usize> = match &opts.modes {
        Some(m) => m.clone(),
        None => (0..gen.n_modes()).collect(),
    };
    ensure(!track.is_empty() && track.iter().all(|&i| i < gen.n_modes()), "ensemble.modes", || {
        format!("tracked modes {track:?} must be non-empty basis indices below {}", gen.n_modes())
    })?;
    let n = 2 * track.len();
    let r0: Vec<f64> = track.iter().flat_map(|&i| [state.r[2 * i], state.r[2 * i + 1]]).collect();
    let freqs: Vec<f64> = track.iter().map(|&i| gen.frequencies[i]).collect();
    let mut rs: Vec<f64> = (0..opts.n_traj).flat_map(|_| r0.iter().cloned()).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..opts.n_traj as u64).map(|i| trajectory_rng(opts.seed, i)).collect();
    let keep = opts.keep.min(opts.n_traj);
    let mut out = EnsembleSummary {
        n_traj: opts.n_traj,
        labels: track.iter().map(|&i| gen.labels[i]).collect(),
        modes: track.clone(),
        samples: Vec::new(),
        examples: vec![Vec::new(); keep],
    };
    drive(
        &state.a,
        gen,
        schedule,
        opts.t_end,
        opts.dt,
        &opts.samples,
        &track,
        &mut rs,
        &mut rngs,
        None,
        |t, a, rs| {
            out.samples.push(summarize(t, a, rs, n, &freqs));
            for (k, ex) in out.examples.iter_mut().enumerate() {
                ex.push(rs[k * n..(k + 1) * n].to_vec());
            }
            Ok(())
        },
    )?;
    Ok(out)
}
