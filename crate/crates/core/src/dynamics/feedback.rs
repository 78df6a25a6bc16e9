//! Single-mode closed forms: the probed steady state and feedback damping.

use std::sync::OnceLock;

use serde::Serialize;

/// 2×2 symmetric block [[xx, xp], [xp, pp]].
pub type Block2 = [[f64; 2]; 2];

/// Steady state of the continuously probed mode with κ̃ = κ̄²_jj/ω_j.
pub fn steady_state_prediction(kappa_tilde: f64) -> Block2 {
    let k = kappa_tilde;
    let a = (1.0 + 4.0 * k * k).sqrt();
    // a − 1 evaluated without cancellation
    let am1 = 4.0 * k * k / (a + 1.0);
    let s = (2.0 * am1).sqrt();
    let f = 1.0 / (4.0 * k);
    [[f * s, f * am1], [f * am1, f * a * s]]
}

/// Solves D X + X Dᵀ = Q for 2×2 blocks with D = [[0, −1], [1, 2ε]] (ω = 1).
fn lyapunov(eps: f64, q: Block2) -> Block2 {
    // unknowns (u, v, w) = (X_xx, X_xp, X_pp)
    // (1,1): −2v = q11; (1,2): −w + u + 2εv = q12; (2,2): 2v + 4εw = q22
    let v = -0.5 * q[0][0];
    let w = (q[1][1] - 2.0 * v) / (4.0 * eps);
    let u = q[0][1] + w - 2.0 * eps * v;
    [[u, v], [v, w]]
}

/// Ensemble covariance of the conditional means under feedback gain ε.
pub fn ensemble_steady_state(kappa_tilde: f64, eps: f64) -> Block2 {
    let a = steady_state_prediction(kappa_tilde);
    // Q = A K A with K = 4κ̃ on the x entry
    let k = 4.0 * kappa_tilde;
    let q = [
        [k * a[0][0] * a[0][0], k * a[0][0] * a[0][1]],
        [k * a[0][0] * a[0][1], k * a[0][1] * a[0][1]],
    ];
    lyapunov(eps, q)
}

/// Mean energy of the conditional means, ω(⟨x⟩² + ⟨p⟩²)/2, in units of κ̄²_jj.
pub fn feedback_energy(kappa_tilde: f64, eps: f64) -> f64 {
    let x = ensemble_steady_state(kappa_tilde, eps);
    0.5 * (x[0][0] + x[1][1]) / kappa_tilde
}

pub fn strong_gain(kappa_tilde: f64) -> f64 {
    (1.0 + 4.0 * kappa_tilde).sqrt() / 2.0
}

fn crossover() -> f64 {
    static CROSS: OnceLock<f64> = OnceLock::new();
    *CROSS.get_or_init(|| {
        // branches meet trivially at κ̃ = 3/4 where both gains equal 1
        let f = |k: f64| feedback_energy(k, 1.0) - feedback_energy(k, strong_gain(k));
        let mut lo = 0.8;
        let mut flo = f(lo);
        let mut hi = lo;
        while hi < 1e6 {
            hi *= 1.1;
            let fhi = f(hi);
            if fhi.signum() != flo.signum() {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            lo = hi;
            flo = fhi;
        }
        f64::INFINITY
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeedbackGain {
    pub epsilon: f64,
    pub critical: f64,
    pub strong: f64,
    /// κ̃ above which the strong branch gives the lower predicted energy.
    pub crossover: f64,
}

pub fn optimal_feedback_gain(kappa_tilde: f64) -> FeedbackGain {
    let cross = crossover();
    let strong = strong_gain(kappa_tilde);
    FeedbackGain {
        epsilon: if kappa_tilde <= cross { 1.0 } else { strong },
        critical: 1.0,
        strong,
        crossover: cross,
    }
}
