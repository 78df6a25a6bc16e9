use becprobe::bogoliubov::{
    analytic_reference, build_basis, max_resolvable_modes, solve_bdg, zero_mode_pair, Regime,
};
use becprobe::meanfield::{solve_ground_state, TrapConfig};
use becprobe::{Error, SpatialGrid};

fn trap(interaction: f64, n: usize, half_width: f64) -> TrapConfig {
    TrapConfig::from_interaction(interaction, 1000.0, SpatialGrid::symmetric(n, half_width).unwrap())
        .unwrap()
}

#[test]
fn harmonic_spectrum_without_interactions() {
    let cfg = trap(0.0, 1024, 12.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let m = solve_bdg(&mf, &cfg, 20).unwrap();
    for (j, w) in m.frequencies.iter().enumerate() {
        assert!((w - (j + 1) as f64).abs() < 1e-6, "omega_{} = {w}", j + 1);
    }
    for j in 0..20 {
        let r = analytic_reference(Regime::Noninteracting { omega_x: 1.0 }, j + 1, &cfg.grid).unwrap();
        let d = m.f_minus[j]
            .iter()
            .zip(&r.f_minus)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6, "mode {} differs from Hermite by {d}", j + 1);
        assert_eq!(m.f_plus[j], m.f_minus[j]);
    }
}

#[test]
fn paper_case_spectrum() {
    let cfg = trap(4.953, 1024, 12.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let m = solve_bdg(&mf, &cfg, 30).unwrap();
    let w = &m.frequencies;
    assert!((w[0] - 1.0).abs() < 1e-4, "Kohn mode {}", w[0]);
    let r20 = w[19] / w[0];
    let r25 = w[24] / w[2];
    assert!(((r20 - 19.0005) / 19.0005).abs() < 1e-3, "w20/w1 = {r20}");
    assert!(((r25 - 8.9971) / 8.9971).abs() < 1e-3, "w25/w3 = {r25}");
    for j in 2..=10 {
        let tf = ((j * (j + 1)) as f64 / 2.0).sqrt();
        assert!(w[j - 1] > tf && w[j - 1] < j as f64, "omega_{j} = {}", w[j - 1]);
    }
    // frozen baseline
    assert!((w[1] - 1.809_00).abs() < 1e-4 && (w[2] - 2.661_72).abs() < 1e-4);
}

#[test]
fn kohn_mode_for_all_interactions() {
    for (c, l) in [(0.5, 12.0), (20.0, 12.0), (200.0, 16.0)] {
        let cfg = trap(c, 1024, l);
        let mf = solve_ground_state(&cfg).unwrap();
        let m = solve_bdg(&mf, &cfg, 3).unwrap();
        assert!((m.frequencies[0] - 1.0).abs() < 1e-4, "c = {c}: {}", m.frequencies[0]);
    }
}

#[test]
fn deep_thomas_fermi_spectrum() {
    let cfg = trap(500.0, 1024, 20.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let m = solve_bdg(&mf, &cfg, 5).unwrap();
    for j in 1..=5 {
        let tf = ((j * (j + 1)) as f64 / 2.0).sqrt();
        assert!((m.frequencies[j - 1] / tf - 1.0).abs() < 0.01, "j = {j}");
    }
}

#[test]
fn biorthogonality_and_parity() {
    let cfg = trap(4.953, 1024, 12.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let b = build_basis(&mf, &cfg, 12, true).unwrap();
    let n = b.grid.len();
    for i in 0..b.n_modes() {
        for k in 0..b.n_modes() {
            let o = b.grid.integrate_with(|q| b.f_plus[i][q] * b.f_minus[k][q]);
            let want = if i == k { 0.5 } else { 0.0 };
            let tol = if i == 0 || k == 0 { 1e-4 } else { 1e-6 };
            assert!((o - want).abs() < tol, "<f+_{i} f-_{k}> = {o}");
        }
        let sign = if b.labels[i] % 2 == 0 { 1.0 } else { -1.0 };
        for q in 0..n / 2 {
            let peak = b.f_minus[i].iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!((b.f_minus[i][q] - sign * b.f_minus[i][n - 1 - q]).abs() < 1e-8 * peak);
        }
    }
}

#[test]
fn overlaps_stable_under_refinement() {
    let overlaps = |n: usize| {
        let cfg = trap(4.953, n, 12.0);
        let mf = solve_ground_state(&cfg).unwrap();
        let b = build_basis(&mf, &cfg, 6, true).unwrap();
        let w = b.frequencies.clone();
        let mut o = vec![];
        for i in 0..b.n_modes() {
            for k in 0..b.n_modes() {
                o.push(b.grid.integrate_with(|q| b.f_plus[i][q] * b.f_minus[k][q]));
            }
        }
        (o, w)
    };
    let (a, wa) = overlaps(512);
    let (b, wb) = overlaps(1023);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-4);
    }
    for j in 1..wa.len() {
        assert!(((wa[j] - wb[j]) / wb[j]).abs() < 1e-5, "omega_{j}: {} vs {}", wa[j], wb[j]);
    }
}

#[test]
fn zero_mode_normalization() {
    let cfg = trap(0.0, 512, 10.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let z = zero_mode_pair(&mf, &cfg).unwrap();
    assert!((z.norm - 0.5).abs() < 1e-12);
    assert_eq!(z.omega0, 0.0);

    let cfg = trap(4.953, 1024, 12.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let z = zero_mode_pair(&mf, &cfg).unwrap();
    assert!((z.norm - 0.5).abs() < 1e-8, "norm {}", z.norm);
}

#[test]
fn unresolvable_mode_count_is_an_error() {
    let cfg = trap(4.953, 256, 12.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let max = max_resolvable_modes(&mf, &cfg);
    assert!(max < 60);
    match solve_bdg(&mf, &cfg, 60) {
        Err(Error::Unresolved { max_safe, .. }) => assert_eq!(max_safe, max),
        other => panic!("expected an unresolved-mode error, got {other:?}"),
    }
    let fine = trap(4.953, 1024, 12.0);
    let mf = solve_ground_state(&fine).unwrap();
    assert!(max_resolvable_modes(&mf, &fine) >= 60);
}

#[test]
fn reference_forms() {
    let grid = SpatialGrid::symmetric(512, 10.0).unwrap();
    let r = analytic_reference(Regime::Noninteracting { omega_x: 1.0 }, 1, &grid).unwrap();
    assert_eq!(r.omega, 1.0);
    assert_eq!(r.f_plus, r.f_minus);
    let tf = |j| analytic_reference(Regime::ThomasFermi { omega_x: 1.0, interaction: 500.0 }, j, &grid);
    assert_eq!(tf(1).unwrap().omega, 1.0);
    assert!((tf(2).unwrap().omega - 3f64.sqrt()).abs() < 1e-15);
    assert!(tf(60).is_err());
    assert!(analytic_reference(Regime::Noninteracting { omega_x: 1.0 }, 80, &grid).is_err());
    let r = tf(3).unwrap();
    let norm = grid.integrate_with(|i| r.f_plus[i] * r.f_minus[i]);
    assert!((norm - 0.5).abs() < 1e-2, "TF norm {norm}");
}

#[test]
fn thomas_fermi_modes_match_numerics_in_the_bulk() {
    let cfg = trap(2000.0, 2048, 30.0);
    let mf = solve_ground_state(&cfg).unwrap();
    let m = solve_bdg(&mf, &cfg, 3).unwrap();
    let r = cfg.thomas_fermi_radius();
    for j in 1..=3 {
        let a = analytic_reference(Regime::ThomasFermi { omega_x: 1.0, interaction: 2000.0 }, j, &cfg.grid)
            .unwrap();
        let bulk: Vec<usize> = (0..cfg.grid.len()).filter(|&i| cfg.grid.points()[i].abs() < 0.7 * r).collect();
        let dot: f64 = bulk.iter().map(|&i| a.f_plus[i] * m.f_plus[j - 1][i]).sum();
        let na: f64 = bulk.iter().map(|&i| a.f_plus[i].powi(2)).sum();
        let nb: f64 = bulk.iter().map(|&i| m.f_plus[j - 1][i].powi(2)).sum();
        let cos = dot.abs() / (na * nb).sqrt();
        assert!(cos > 0.999, "j = {j}: shape overlap {cos}");
    }
}
