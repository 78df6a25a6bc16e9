use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::bogoliubov::BogoliubovBasis;
use crate::error::{ensure, Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::from_columns;

/// How the δ(x₁ − x₂) term of the density covariance is carried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PoissonChannel {
    /// Smooth part only.
    Excluded,
    /// n₀(x) δ(x₁ − x₂).
    Full,
    /// n₀(x) δ(x₁ − x₂) − n₀(x₁) n₀(x₂)/N₀, for a fixed total number.
    Projected,
}

/// Density covariance 𝒩(x₁, x₂) with its δ channel kept separate.
#[derive(Clone, Debug)]
pub struct CorrelationField {
    pub grid: SpatialGrid,
    /// Smooth part on the grid product.
    pub values: Mat<f64>,
    /// Weight n₀(x) of the δ(x₁ − x₂) term, if included.
    pub delta: Option<Vec<f64>>,
    pub channel: PoissonChannel,
    pub warnings: Vec<String>,
}

impl CorrelationField {
    /// Dense matrix with the δ channel written as n₀(x)/Δx on the diagonal.
    pub fn dense(&self) -> Mat<f64> {
        let mut m = self.values.clone();
        if let Some(d) = &self.delta {
            let dx = self.grid.spacing();
            for (i, w) in d.iter().enumerate() {
                m[(i, i)] += w / dx;
            }
        }
        m
    }

    pub fn max_asymmetry(&self) -> f64 {
        crate::linalg::asymmetry(&self.values)
    }

    /// covar[N̂_a, N̂_b] for the intervals a and b.
    pub fn region_covariance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let wa = self.grid.cell_weights(a.0, a.1);
        let wb = self.grid.cell_weights(b.0, b.1);
        let dx = self.grid.spacing();
        let n = wa.len();
        let mut s = 0.0;
        for i in 0..n {
            if wa[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..n {
                row += self.values[(i, j)] * wb[j];
            }
            s += wa[i] * row;
        }
        s *= dx * dx;
        if let Some(d) = &self.delta {
            let (lo, hi) = (a.0.max(b.0), a.1.min(b.1));
            if hi > lo {
                let w = self.grid.cell_weights(lo, hi);
                s += w.iter().zip(d).map(|(w, n)| w * n).sum::<f64>() * dx;
            }
        }
        s
    }
}

/// 𝒩(x₁, x₂) = −2ψ(x₁)ψ(x₂) Σ_j f_j⁻(x₁){f_j⁺(x₂) − 2 Σ_k f_k⁻(x₂) covar[x̂_j, x̂_k]}, symmetrized.
///
/// The sum runs over the modes of the basis; `a` uses the same ordering.
pub fn density_correlation(basis: &BogoliubovBasis, a: &Mat<f64>, channel: PoissonChannel) -> Result<CorrelationField> {
    let m = basis.n_modes();
    ensure(a.nrows() == 2 * m, "state", || {
        format!("covariance has {} rows, basis needs {}", a.nrows(), 2 * m)
    })?;
    let n = basis.grid.len();
    let psi = &basis.psi;
    let fm = from_columns(&basis.f_minus);
    let fp = from_columns(&basis.f_plus);
    let cx = Mat::from_fn(m, m, |j, k| a[(2 * j, 2 * k)]);
    // per-mode kernel G_j(x₂) = f_j⁺(x₂) − 2 Σ_k covar_jk f_k⁻(x₂)
    let g = &fp - (&fm * &cx) * 2.0;
    let raw = &fm * g.transpose();
    let mut values = Mat::from_fn(n, n, |i, j| -psi[i] * psi[j] * (raw[(i, j)] + raw[(j, i)]));

    let mut warnings = Vec::new();
    if m >= 2 {
        // contribution of the highest mode at a few sample points
        let last = m - 1;
        let tail = |i: usize, j: usize| -psi[i] * psi[j] * (fm[(i, last)] * g[(j, last)] + fm[(j, last)] * g[(i, last)]);
        let peak = (0..n).map(|i| values[(i, i)].abs()).fold(0.0, f64::max);
        let step = (n / 16).max(1);
        let mut worst: f64 = 0.0;
        for i in (0..n).step_by(step) {
            for j in (0..n).step_by(step) {
                worst = worst.max(tail(i, j).abs());
            }
        }
        if peak > 0.0 && worst > 0.01 * peak {
            warnings.push(format!(
                "mode sum not converged: the last mode contributes {:.1}% of the peak correlation",
                100.0 * worst / peak
            ));
        }
    }

    let n0: Vec<f64> = psi.iter().map(|v| v * v).collect();
    let delta = match channel {
        PoissonChannel::Excluded => None,
        PoissonChannel::Full => Some(n0.clone()),
        PoissonChannel::Projected => {
            let total = basis.grid.integrate(&n0);
            for i in 0..n {
                for j in 0..n {
                    values[(i, j)] -= n0[i] * n0[j] / total;
                }
            }
            Some(n0.clone())
        }
    };
    Ok(CorrelationField {
        grid: basis.grid.clone(),
        values,
        delta,
        channel,
        warnings,
    })
}

/// Three adjacent intervals R₁, R₂, R₃ with R₂ centred on the trap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSpec {
    pub edges: [f64; 4],
}

impl RegionSpec {
    /// R₂ = [−l_G/2, l_G/2]; R₁ and R₃ fill the rest of the grid.
    pub fn centred(width: f64, grid: &SpatialGrid) -> Result<Self> {
        let h = grid.half_width() + 0.5 * grid.spacing();
        ensure(width > 0.0 && 0.5 * width <= h, "regions.width", || {
            format!("central width {width} must lie in (0, {:.4}]", 2.0 * h)
        })?;
        Ok(Self {
            edges: [-h, -0.5 * width, 0.5 * width, h],
        })
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        let h = grid.half_width() + 0.5 * grid.spacing();
        let e = self.edges;
        ensure(e.windows(2).all(|w| w[1] >= w[0]), "regions", || "edges must be ordered".into())?;
        ensure(e[0] >= -h - 1e-12 && e[3] <= h + 1e-12, "regions", || {
            format!("regions extend beyond the grid [{:.4}, {:.4}]", -h, h)
        })
    }

    pub fn region(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionStats {
    /// N₂⁰ = ∫_{R₂} n₀.
    pub mean_n2: f64,
    pub total: f64,
    pub var_n2: f64,
    pub covar_n1_n3: f64,
    /// var[N̂₂]/N₂⁰
    pub var_n2_normalized: f64,
    /// covar[N̂₁, N̂₃]/N₀
    pub covar_n1_n3_normalized: f64,
}

pub fn region_number_statistics(field: &CorrelationField, regions: &RegionSpec) -> Result<RegionStats> {
    regions.validate(&field.grid)?;
    ensure(field.delta.is_some(), "field", || {
        "number statistics need the Poisson channel".into()
    })?;
    let n0 = field.delta.as_ref().unwrap();
    let grid = &field.grid;
    let dx = grid.spacing();
    let r2 = regions.region(1);
    let w2 = grid.cell_weights(r2.0, r2.1);
    let mean_n2 = w2.iter().zip(n0).map(|(w, n)| w * n).sum::<f64>() * dx;
    let total = grid.integrate(n0);
    let var_n2 = field.region_covariance(r2, r2);
    let covar = field.region_covariance(regions.region(0), regions.region(2));
    if mean_n2 <= 0.0 {
        return Err(Error::invalid("regions.width", "central region holds no atoms"));
    }
    Ok(RegionStats {
        mean_n2,
        total,
        var_n2,
        covar_n1_n3: covar,
        var_n2_normalized: var_n2 / mean_n2,
        covar_n1_n3_normalized: covar / total,
    })
}

/// Deviation of covar[m̂(k₁), m̂(k₂)] from Poissonian statistics.
#[derive(Clone, Debug)]
pub struct MomentumField {
    pub k: Vec<f64>,
    pub values: Mat<f64>,
    /// Mean momentum density |ψ̃(k)|².
    pub density: Vec<f64>,
}

/// ∫ dx e^{ikx} f(x)/√2π by quadrature.
fn fourier(grid: &SpatialGrid, f: &[f64], k: &[f64]) -> Vec<Complex64> {
    let dx = grid.spacing();
    let x = grid.points();
    k.iter()
        .map(|&kk| {
            let mut s = Complex64::new(0.0, 0.0);
            for (xi, fi) in x.iter().zip(f) {
                s += Complex64::from_polar(*fi, kk * xi);
            }
            s * dx / (2.0 * PI).sqrt()
        })
        .collect()
}

/// Fraction of Σ|F_s|² carried by |s| above half the Nyquist index.
fn high_frequency_fraction(f: &[f64]) -> f64 {
    let n = f.len();
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let high: f64 = buf
        .iter()
        .enumerate()
        .filter(|(s, _)| {
            let s = if *s <= n / 2 { *s } else { n - s };
            s > n / 4
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    if total > 0.0 {
        high / total
    } else {
        0.0
    }
}

/// Linearized momentum-density covariance minus the truncated Poisson term.
///
/// With δψ̃ = Σ_j (f̃_j⁻ x̂_j + i f̃_j⁺ p̂_j), δm(k) = 2 Re(ψ̃* δψ̃) = Σ_j a_j x̂_j + b_j p̂_j and
/// the map is vᵀ(k₁) A v(k₂) − Re[ψ̃*(k₁) ψ̃(k₂) C(k₁, k₂)] with
/// C(k₁, k₂) = Σ_j f̃_j⁻(k₁) f̃_j⁺*(k₂) + f̃_j⁺(k₁) f̃_j⁻*(k₂), symmetrized.
pub fn momentum_correlation(basis: &BogoliubovBasis, a: &Mat<f64>, k: &[f64]) -> Result<MomentumField> {
    let m = basis.n_modes();
    ensure(a.nrows() == 2 * m, "state", || "covariance does not match the basis".into())?;
    let grid = &basis.grid;
    let k_nyq = PI / grid.spacing();
    ensure(k.iter().all(|kk| kk.abs() <= k_nyq), "momentum.k", || {
        format!("k grid exceeds the Nyquist limit {k_nyq:.4}")
    })?;
    let mut worst = high_frequency_fraction(&basis.psi);
    for j in 0..m {
        worst = worst
            .max(high_frequency_fraction(&basis.f_minus[j]))
            .max(high_frequency_fraction(&basis.f_plus[j]));
    }
    if worst > 0.01 {
        return Err(Error::Numerical(format!(
            "aliasing: {:.2}% of the spectral weight lies above half the Nyquist frequency",
            100.0 * worst
        )));
    }
    let nk = k.len();
    let psi = fourier(grid, &basis.psi, k);
    let fm: Vec<Vec<Complex64>> = basis.f_minus.iter().map(|f| fourier(grid, f, k)).collect();
    let fp: Vec<Vec<Complex64>> = basis.f_plus.iter().map(|f| fourier(grid, f, k)).collect();
    let i = Complex64::new(0.0, 1.0);
    // v(k) interleaves (a_j, b_j)
    let v = Mat::from_fn(2 * m, nk, |r, q| {
        let j = r / 2;
        if r % 2 == 0 {
            2.0 * (psi[q].conj() * fm[j][q]).re
        } else {
            2.0 * (psi[q].conj() * i * fp[j][q]).re
        }
    });
    let cov = v.transpose() * a * &v;
    let mut values = Mat::from_fn(nk, nk, |p, q| {
        let mut c = Complex64::new(0.0, 0.0);
        for j in 0..m {
            c += fm[j][p] * fp[j][q].conj() + fp[j][p] * fm[j][q].conj();
        }
        cov[(p, q)] - (psi[p].conj() * psi[q] * c).re
    });
    crate::linalg::symmetrize(&mut values);
    Ok(MomentumField {
        k: k.to_vec(),
        values,
        density: psi.iter().map(|c| c.norm_sqr()).collect(),
    })
}
