use std::f64::consts::{FRAC_PI_4, LN_2, PI};

use becprobe::bogoliubov::{build_basis, BogoliubovBasis};
use becprobe::dynamics::propagate::{congruence, propagators};
use becprobe::dynamics::{evolve_covariance, steady_state_prediction, GaussianState};
use becprobe::meanfield::{solve_ground_state, TrapConfig};
use becprobe::observables::*;
use becprobe::probe::{assemble_generators, CouplingSet, ProbeConfig, ProbeSchedule};
use becprobe::SpatialGrid;
use faer::Mat;
use proptest::prelude::*;

fn basis(interaction: f64, n: usize, half_width: f64, j: usize, zero: bool) -> BogoliubovBasis {
    let cfg = TrapConfig::from_interaction(interaction, 1000.0, SpatialGrid::symmetric(n, half_width).unwrap()).unwrap();
    let mf = solve_ground_state(&cfg).unwrap();
    build_basis(&mf, &cfg, j, zero).unwrap()
}

fn block(a: &Mat<f64>, i: usize) -> [[f64; 2]; 2] {
    [[a[(2 * i, 2 * i)], a[(2 * i, 2 * i + 1)]], [a[(2 * i + 1, 2 * i)], a[(2 * i + 1, 2 * i + 1)]]]
}

fn two_mode_squeezed(r: f64) -> Mat<f64> {
    let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    Mat::from_fn(4, 4, |i, j| match (i, j) {
        _ if i == j => c,
        (0, 2) | (2, 0) => s,
        (1, 3) | (3, 1) => -s,
        _ => 0.0,
    })
}

/// Partial-transpose symplectic eigenvalues of a 4×4 block from its invariants.
fn pt_invariants(a: &Mat<f64>) -> (f64, f64) {
    let det2 = |i: usize, j: usize| a[(i, i)] * a[(j + 1, j + 1)] - a[(i, j + 1)] * a[(i + 1, j)];
    let d1 = det2(0, 0);
    let d2 = det2(2, 2);
    let dc = a[(0, 2)] * a[(1, 3)] - a[(0, 3)] * a[(1, 2)];
    let full = a.determinant();
    let delta = d1 + d2 - 2.0 * dc;
    let disc = (delta * delta - 4.0 * full).max(0.0).sqrt();
    (((delta - disc) / 2.0).sqrt(), ((delta + disc) / 2.0).sqrt())
}

#[test]
fn vacuum_and_steady_state_moments() {
    let v = GaussianState::vacuum(3).a;
    let s = quadrature_stats(&v, 1, 2).unwrap();
    assert_eq!((s.var_x, s.var_p, s.covar_xp, s.covar_xx), (0.5, 0.5, 0.0, 0.0));
    assert!(quadrature_stats(&v, 1, 3).is_err());
    let a = steady_state_prediction(1.0);
    let m = Mat::from_fn(2, 2, |i, j| a[i][j]);
    let s = quadrature_stats(&m, 0, 0).unwrap();
    assert!((s.covar_xp - (5f64.sqrt() - 1.0) / 4.0).abs() < 1e-14);
}

#[test]
fn rotated_moments_are_rotated_stats() {
    let a = steady_state_prediction(2.0);
    let mut m = Mat::from_fn(2, 2, |i, j| a[i][j]);
    let t = 0.37;
    congruence(&mut m, &propagators(&[[[0.0, -1.0], [1.0, 0.0]]], t));
    // exp(−D t) maps x → x cos t + p sin t, so var x̂(t) = var of x cos t + p sin t before
    let expect = quadrature_variance(a, -t);
    assert!((m[(0, 0)] - expect).abs() < 1e-14);
    let o0 = optimal_quadrature(a);
    let o1 = optimal_quadrature(block(&m, 0));
    assert!((o0.variance - o1.variance).abs() < 1e-14);
}

#[test]
fn squeezing_angle_asymptotes() {
    assert!(optimal_quadrature([[0.5, 0.0], [0.0, 0.5]]).theta.is_none());
    let strong = optimal_quadrature(steady_state_prediction(10.0));
    let t = strong.theta.unwrap();
    assert!((t - strong_probe_angle(10.0)).abs() < 0.15 * strong_probe_angle(10.0), "{t}");
    let weak = optimal_quadrature(steady_state_prediction(0.05));
    let t = weak.theta.unwrap();
    assert!((t - weak_probe_angle(0.05)).abs() < 0.15 * weak_probe_angle(0.05));
    assert!((strong_probe_angle(10.0) - 0.158).abs() < 1e-3);
}

#[test]
fn purity_values() {
    let v = GaussianState::vacuum(4).a;
    for m in 1..=4 {
        let idx: Vec<usize> = (0..m).collect();
        assert!((purity(&v, &idx).unwrap() - 1.0).abs() < 1e-14);
    }
    let thermal = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    assert!((purity(&thermal, &[0]).unwrap() - 0.5).abs() < 1e-14);
    assert!(purity(&v, &[]).is_err());
    // a pure two-mode state: both halves are equally mixed
    let t = two_mode_squeezed(0.4);
    let p0 = purity(&t, &[0]).unwrap();
    assert!((p0 - purity(&t, &[1]).unwrap()).abs() < 1e-12);
    assert!((p0 - 1.0 / (0.8f64).cosh()).abs() < 1e-12);
}

#[test]
fn negativity_of_constructed_states() {
    let v = GaussianState::vacuum(2).a;
    assert_eq!(log_negativity(&v, 0, 1).unwrap(), 0.0);
    for r in [0.1, 0.5, 1.2] {
        let t = two_mode_squeezed(r);
        let e = log_negativity(&t, 0, 1).unwrap();
        let (nm, _) = pt_invariants(&t);
        assert!((nm - (-2.0 * r).exp() / 2.0).abs() < 1e-10);
        assert!((e - (-(2.0 * nm).log2())).abs() < 1e-9);
        assert!((e - 2.0 * r / LN_2).abs() < 1e-9);
    }
    // separable but correlated (classically mixed)
    let mut c = GaussianState::vacuum(2).a;
    c[(0, 0)] = 1.0;
    c[(2, 2)] = 1.0;
    c[(0, 2)] = 0.4;
    c[(2, 0)] = 0.4;
    assert_eq!(log_negativity(&c, 0, 1).unwrap(), 0.0);
    assert!(log_negativity(&c, 0, 0).is_err());
}

#[test]
fn distinguishability_and_bound() {
    let k = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 + i as f64 } else if (i + j) % 2 == 0 { 0.5 } else { 0.0 });
    assert!((distinguishability(&k, 1, 1).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(distinguishability(&k, 0, 1).unwrap(), 0.0);
    let b = distinguishability(&k, 0, 2).unwrap();
    assert!((b - 0.5 / 3f64.sqrt()).abs() < 1e-15);
    assert!((e_qnd(b) - ((1.0 + b) / (1.0 - b)).log(4.0)).abs() < 1e-14);
    assert_eq!(e_qnd(0.0), 0.0);
    let z = Mat::from_fn(2, 2, |i, _| i as f64);
    assert!(distinguishability(&z, 0, 1).is_err());
}

#[test]
fn free_gas_vacuum_is_poissonian() {
    let b = basis(0.0, 512, 10.0, 12, true);
    let v = GaussianState::vacuum(b.n_modes()).a;
    let f = density_correlation(&b, &v, PoissonChannel::Full).unwrap();
    assert!(f.values.norm_max() < 1e-9 * b.psi.iter().map(|p| p * p).fold(0.0, f64::max));
    let k: Vec<f64> = (-20..=20).map(|i| 0.2 * i as f64).collect();
    let m = momentum_correlation(&b, &v, &k).unwrap();
    let scale = m.density.iter().cloned().fold(0.0, f64::max);
    assert!(m.values.norm_max() < 1e-9 * scale);
}

#[test]
fn interacting_vacuum_is_sub_poissonian() {
    let b = basis(4.953, 512, 10.0, 30, true);
    let v = GaussianState::vacuum(b.n_modes()).a;
    let f = density_correlation(&b, &v, PoissonChannel::Full).unwrap();
    assert!(f.max_asymmetry() < 1e-10);
    let c = b.grid.len() / 2;
    assert!(f.values[(c, c)] < 0.0);
    // whole cloud: Poissonian total number
    let h = b.grid.half_width() + b.grid.spacing();
    let total = f.region_covariance((-h, h), (-h, h));
    assert!((total / b.n0 - 1.0).abs() < 1e-2, "{}", total / b.n0);
    // sum rule against the zero-mode block
    let direct = 2.0 * b.n0 * v[(0, 0)];
    assert!((total - direct).abs() < 0.01 * direct);
    // interior region is sub-Poissonian
    let regions = RegionSpec::centred(1.0, &b.grid).unwrap();
    let s = region_number_statistics(&f, &regions).unwrap();
    assert!(s.var_n2_normalized < 1.0);
}

#[test]
fn number_conserving_basis_fixes_total_number() {
    let b = basis(4.953, 512, 10.0, 30, true).number_conserving();
    let v = GaussianState::vacuum(b.n_modes()).a;
    let f = density_correlation(&b, &v, PoissonChannel::Projected).unwrap();
    let h = b.grid.half_width() + b.grid.spacing();
    let total = f.region_covariance((-h, h), (-h, h));
    assert!(total.abs() < 1e-3 * b.n0, "{total}");
}

#[test]
fn probed_state_correlations_stay_symmetric() {
    let b = basis(4.953, 512, 10.0, 6, true);
    let cs = CouplingSet::build(&b, &ProbeConfig { kappa2: 0.5, ..ProbeConfig::default() }).unwrap();
    let g = assemble_generators(&b, &cs, None).unwrap();
    let t = 1.0;
    let s = evolve_covariance(&GaussianState::vacuum(b.n_modes()).a, &g, &ProbeSchedule::constant(t), t, None, &[t]).unwrap();
    let a = s.last();
    let f = density_correlation(&b, a, PoissonChannel::Full).unwrap();
    assert!(f.max_asymmetry() < 1e-10);
    let k: Vec<f64> = (-15..=15).map(|i| 0.25 * i as f64).collect();
    let m = momentum_correlation(&b, a, &k).unwrap();
    let n = k.len();
    let scale = m.values.norm_max();
    for p in 0..n {
        for q in 0..n {
            assert!((m.values[(p, q)] - m.values[(q, p)]).abs() < 1e-10 * scale);
            assert!((m.values[(p, q)] - m.values[(n - 1 - p, n - 1 - q)]).abs() < 1e-8 * scale);
        }
    }
    // nested subsets of a mixed state stay in (0, 1]
    for m in 1..=b.n_modes() {
        let p = purity(a, &(0..m).collect::<Vec<_>>()).unwrap();
        assert!(p > 0.0 && p <= 1.0 + 1e-9);
    }
    // ideal detection keeps the global state pure: complementary subsets agree
    let all: Vec<usize> = (0..b.n_modes()).collect();
    assert!((purity(a, &all).unwrap() - 1.0).abs() < 1e-6);
    let p_low = purity(a, &all[..3]).unwrap();
    let p_high = purity(a, &all[3..]).unwrap();
    assert!((p_low - p_high).abs() < 1e-6);
}

#[test]
fn momentum_grid_limits() {
    let b = basis(4.953, 256, 10.0, 4, true);
    let v = GaussianState::vacuum(b.n_modes()).a;
    let k_nyq = PI / b.grid.spacing();
    assert!(momentum_correlation(&b, &v, &[0.0, 1.1 * k_nyq]).is_err());
    // a mode function oscillating near the grid limit is aliased
    let mut noisy = b.clone();
    let x = noisy.grid.points().to_vec();
    noisy.f_minus[1] = x.iter().map(|&x| (0.8 * k_nyq * x).cos() * (-x * x / 8.0).exp()).collect();
    assert!(momentum_correlation(&noisy, &v, &[0.0]).is_err());
}

#[test]
fn regions_must_fit_the_grid() {
    let grid = SpatialGrid::symmetric(128, 5.0).unwrap();
    assert!(RegionSpec::centred(20.0, &grid).is_err());
    let r = RegionSpec { edges: [-6.0, -1.0, 1.0, 5.0] };
    assert!(r.validate(&grid).is_err());
}

proptest! {
    #[test]
    fn optimal_angle_minimizes_variance(a in 0.1..3.0f64, c in 0.1..3.0f64, rho in -0.95..0.95f64) {
        let b = rho * (a * c).sqrt();
        let blk = [[a, b], [b, c]];
        let o = optimal_quadrature(blk);
        let scan = (0..3600).map(|i| quadrature_variance(blk, i as f64 * PI / 3600.0)).fold(f64::INFINITY, f64::min);
        prop_assert!(o.variance <= scan + 1e-12);
        if let Some(t) = o.theta {
            prop_assert!((quadrature_variance(blk, t) - o.variance).abs() < 1e-12);
        }
    }

    #[test]
    fn negativity_matches_invariants(r in 0.0..1.0f64, n1 in 0.0..0.5f64, n2 in 0.0..0.5f64, phi in 0.0..1.0f64) {
        // squeezed state with thermal noise on each arm, then a local rotation
        let mut a = two_mode_squeezed(r);
        a[(0, 0)] += n1; a[(1, 1)] += n1; a[(2, 2)] += n2; a[(3, 3)] += n2;
        let rot = [[[phi.cos(), phi.sin()], [-phi.sin(), phi.cos()]], [[1.0, 0.0], [0.0, 1.0]]];
        congruence(&mut a, &rot);
        let e = log_negativity(&a, 0, 1).unwrap();
        let (nm, _) = pt_invariants(&a);
        let expect = (-(2.0 * nm).log2()).max(0.0);
        prop_assert!(e >= 0.0);
        prop_assert!((e - expect).abs() < 1e-8);
    }
}

#[test]
fn weak_angle_is_near_quarter_turn() {
    assert!((weak_probe_angle(0.0) - FRAC_PI_4).abs() < 1e-15);
}
