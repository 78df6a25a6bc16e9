use std::f64::consts::PI;

use becprobe::meanfield::{
    number_dephasing_rate, solve_ground_state, thomas_fermi_profile, TrapConfig,
};
use becprobe::{Error, SpatialGrid};

fn trap(interaction: f64, n: usize, half_width: f64) -> TrapConfig {
    TrapConfig::from_interaction(interaction, 1000.0, SpatialGrid::symmetric(n, half_width).unwrap())
        .unwrap()
}

#[test]
fn noninteracting_ground_state_is_gaussian() {
    let cfg = trap(0.0, 512, 10.0);
    let mf = solve_ground_state(&cfg).unwrap();
    assert!((mf.mu - 0.5).abs() < 1e-6, "mu = {}", mf.mu);
    let amp = (1000.0 / PI.sqrt()).sqrt();
    let err = mf
        .grid
        .points()
        .iter()
        .zip(&mf.psi)
        .map(|(x, p)| (p - amp * (-0.5 * x * x).exp()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5 * amp, "max deviation {err}");
}

#[test]
fn paper_interaction_gives_mu_two() {
    let mf = solve_ground_state(&trap(4.953, 1024, 12.0)).unwrap();
    assert!((mf.mu - 2.0).abs() < 0.02, "mu = {}", mf.mu);
    // frozen from the first validated run
    assert!((mf.mu - 1.999_92).abs() < 1e-4, "mu = {}", mf.mu);
}

#[test]
fn normalization_residual_and_parity() {
    let mf = solve_ground_state(&trap(4.953, 1024, 12.0)).unwrap();
    let n: f64 = mf.grid.integrate(&mf.density);
    assert!((n - 1000.0).abs() < 1e-8 * 1000.0);
    assert!(mf.residual < 1e-8, "residual {}", mf.residual);
    let m = mf.psi.len();
    for i in 0..m / 2 {
        assert!((mf.psi[i] - mf.psi[m - 1 - i]).abs() < 1e-10 * mf.peak());
    }
    assert!(mf.psi.iter().all(|&p| p >= 0.0));
}

#[test]
fn relaxation_energy_never_increases() {
    for c in [0.0, 4.953, 100.0] {
        let mf = solve_ground_state(&trap(c, 512, 12.0)).unwrap();
        for w in mf.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "energy rose {} -> {} at c = {c}", w[0], w[1]);
        }
    }
}

fn tf_mu_by_quadrature(c: f64) -> f64 {
    // bisection on ∫ max(0, μ − x²/2) dx = c, Simpson quadrature
    let norm = |mu: f64| {
        let r = (2.0 * mu).sqrt();
        let n = 2000;
        let h = 2.0 * r / n as f64;
        let f = |x: f64| (mu - 0.5 * x * x).max(0.0);
        let mut s = f(-r) + f(r);
        for i in 1..n {
            let x = -r + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let (mut lo, mut hi) = (1e-6, 1e4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn strong_coupling_matches_thomas_fermi() {
    let cfg = trap(500.0, 1024, 20.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let mu_tf = tf_mu_by_quadrature(500.0);
    assert!((mf.mu / mu_tf - 1.0).abs() < 0.02, "mu {} vs TF {mu_tf}", mf.mu);

    let tf = thomas_fermi_profile(&cfg).unwrap();
    assert!((tf.mu / mu_tf - 1.0).abs() < 1e-9);
    let r = cfg.thomas_fermi_radius();
    let healing = 1.0 / (2.0 * mf.mu).sqrt();
    let peak = tf.density.iter().cloned().fold(0.0, f64::max);
    for (i, &x) in cfg.grid.points().iter().enumerate() {
        if (x.abs() - r).abs() > 2.0 * healing {
            let d = (tf.density[i] - mf.density[i]).abs() / peak;
            assert!(d < 0.05, "x = {x}: TF deviates by {d}");
        }
    }
}

#[test]
fn thomas_fermi_profile_boundary_and_norm() {
    let cfg = trap(500.0, 4096, 20.0);
    let tf = thomas_fermi_profile(&cfg).unwrap();
    let r = cfg.thomas_fermi_radius();
    assert!((0.5 * r * r - tf.mu).abs() < 1e-12 * tf.mu);
    let n: f64 = tf.grid.integrate(&tf.density);
    assert!((n / 1000.0 - 1.0).abs() < 1e-6, "norm {n}");
    assert!(matches!(thomas_fermi_profile(&trap(0.0, 256, 8.0)), Err(Error::Invalid { .. })));
}

#[test]
fn chemical_potential_increases_with_atom_number() {
    let base = trap(4.953, 512, 12.0);
    let mut last = 0.5;
    for scale in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let mu = solve_ground_state(&base.with_interaction(4.953 * scale)).unwrap().mu;
        assert!(mu > last);
        last = mu;
    }
}

#[test]
fn refinement_changes_mu_little() {
    let a = solve_ground_state(&trap(4.953, 512, 12.0)).unwrap().mu;
    let b = solve_ground_state(&trap(4.953, 1023, 12.0)).unwrap().mu;
    assert!(((a - b) / b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn dephasing_rate_limits() {
    assert_eq!(number_dephasing_rate(&trap(0.0, 256, 8.0)).unwrap(), 0.0);
    // TF: μ ∝ N^(2/3) gives ω0 = 4μ/3
    let cfg = trap(5000.0, 2048, 40.0);
    let w0 = number_dephasing_rate(&cfg).unwrap();
    let mu = solve_ground_state(&cfg).unwrap().mu;
    assert!((w0 / (4.0 * mu / 3.0) - 1.0).abs() < 0.01, "{w0} vs {}", 4.0 * mu / 3.0);
}

#[test]
fn dephasing_rate_at_paper_interaction() {
    let fine = number_dephasing_rate(&trap(4.953, 1024, 12.0)).unwrap();
    let coarse = number_dephasing_rate(&trap(4.953, 512, 12.0)).unwrap();
    assert!(((fine - coarse) / fine).abs() < 1e-4, "{fine} vs {coarse}");
    assert!((fine - 2.436).abs() < 2e-3, "omega_0 = {fine}");
}

#[test]
fn grid_too_small_is_reported() {
    // extent 8 passes the static check but the Gaussian tail is still 3e-4 of the peak
    let cfg = trap(0.0, 256, 4.0);
    assert!(cfg.validate().is_ok());
    assert!(matches!(solve_ground_state(&cfg), Err(Error::GridTooSmall { .. })));
    let narrow = TrapConfig::from_interaction(500.0, 1000.0, SpatialGrid::symmetric(256, 6.0).unwrap());
    assert!(matches!(narrow, Err(Error::Invalid { .. })));
}

#[test]
fn interaction_from_chemical_potential() {
    let cfg = TrapConfig::from_interaction(0.0, 1000.0, SpatialGrid::symmetric(1024, 12.0).unwrap()).unwrap();
    let c = becprobe::meanfield::interaction_for_mu(&cfg, 2.0).unwrap();
    assert!((c - 4.953).abs() < 0.01, "{c}");
    let mf = solve_ground_state(&cfg.with_interaction(c)).unwrap();
    assert!((mf.mu - 2.0).abs() < 1e-9);
    assert_eq!(becprobe::meanfield::interaction_for_mu(&cfg, 0.5).unwrap(), 0.0);
    assert!(becprobe::meanfield::interaction_for_mu(&cfg, 0.4).is_err());
}
