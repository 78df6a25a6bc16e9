//! Light–matter couplings, detector model and probe schedules.
//!
//! The light field is never represented; only the generators it induces on
//! the atomic quadratures (x_0, p_0, x_1, p_1, …) are built here.

mod kernel;
mod schedule;

use std::f64::consts::{PI, SQRT_2};

use faer::Mat;
use serde::{Deserialize, Serialize};

pub use kernel::{diffraction_kernel, fourier_weight, DiffractionKernel};
pub use schedule::{make_schedule, ProbeSchedule, ScheduleMode, ScheduleSpec, Segment};

use crate::bogoliubov::BogoliubovBasis;
use crate::dynamics::feedback::optimal_feedback_gain;
use crate::error::{ensure, Error, Result};
use crate::linalg::{asymmetry, psd_factor, sym_eigen};

/// Kernel exponent for the environment couplings, 2^(1/4).
pub const ENVIRONMENT_ALPHA: f64 = 1.189_207_115_002_721;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeamProfile {
    Uniform,
    /// u(x) = exp(−x²/2σ²) with σ = width/2.
    Gaussian { width: f64 },
}

impl BeamProfile {
    pub fn intensity(&self, x: f64) -> f64 {
        match *self {
            BeamProfile::Uniform => 1.0,
            BeamProfile::Gaussian { width } => {
                let s = 0.5 * width;
                (-x * x / (2.0 * s * s)).exp()
            }
        }
    }
}

/// Imaging resolution, either given directly or from the optics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Optics {
    Rayleigh { rayleigh_length: f64 },
    /// Wavelength and transverse length, both in units of l_x.
    Wavelength { wavelength: f64, l_perp: f64 },
}

impl Optics {
    pub fn rayleigh_length(&self) -> f64 {
        match *self {
            Optics::Rayleigh { rayleigh_length } => rayleigh_length,
            Optics::Wavelength { wavelength, l_perp } => (wavelength * l_perp).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// κ² in units of ω_x.
    pub kappa2: f64,
    pub optics: Optics,
    /// l_D; zero selects the ideal detector.
    pub pixel_width: f64,
    /// Position of a pixel boundary relative to the trap centre.
    pub pixel_offset: f64,
    /// Detector half extent; defaults to the whole grid.
    pub detector_half_width: Option<f64>,
    pub profile: BeamProfile,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            kappa2: 1.0,
            optics: Optics::Rayleigh { rayleigh_length: 0.0 },
            pixel_width: 0.0,
            pixel_offset: 0.0,
            detector_half_width: None,
            profile: BeamProfile::Uniform,
        }
    }
}

impl ProbeConfig {
    pub fn rayleigh_length(&self) -> f64 {
        self.optics.rayleigh_length()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa2 >= 0.0 && self.kappa2.is_finite(), "probe.kappa2", || {
            format!("must be non-negative, got {}", self.kappa2)
        })?;
        ensure(self.pixel_width >= 0.0, "probe.pixel_width", || {
            format!("must be non-negative, got {}", self.pixel_width)
        })?;
        let l_r = self.rayleigh_length();
        ensure(l_r >= 0.0 && l_r.is_finite(), "probe.optics", || {
            format!("Rayleigh length must be non-negative, got {l_r}")
        })?;
        if let BeamProfile::Gaussian { width } = self.profile {
            ensure(width > 0.0, "probe.profile.width", || format!("must be positive, got {width}"))?;
        }
        if let Some(h) = self.detector_half_width {
            ensure(h > 0.0, "probe.detector_half_width", || format!("must be positive, got {h}"))?;
        }
        Ok(())
    }
}

/// κ_j(x) = √(4πκ²) f0⁺(x) f_j⁻(x) √u(x) for mode label j.
pub fn coupling_profile(basis: &BogoliubovBasis, j: usize, probe: &ProbeConfig) -> Result<Vec<f64>> {
    let fm: &[f64] = match basis.index_of(j) {
        Some(i) => &basis.f_minus[i],
        None if j == 0 => &basis.zero.f_minus,
        None => {
            return Err(Error::invalid(
                "mode",
                format!("mode {j} is outside the basis (J = {})", basis.excited()),
            ))
        }
    };
    let amp = (4.0 * PI * probe.kappa2).sqrt();
    Ok(basis
        .grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| amp * basis.zero.f_plus[i] * fm[i] * probe.profile.intensity(x).sqrt())
        .collect())
}

fn profiles(basis: &BogoliubovBasis, probe: &ProbeConfig) -> Result<Vec<Vec<f64>>> {
    basis.labels.iter().map(|&j| coupling_profile(basis, j, probe)).collect()
}

/// κ̄²_jk = ∬ 𝒦(x − x′) κ_j(x) κ_k(x′) for the basis modes.
pub fn environment_couplings(
    basis: &BogoliubovBasis,
    probe: &ProbeConfig,
    kernel: &DiffractionKernel,
) -> Result<Mat<f64>> {
    let prof = profiles(basis, probe)?;
    let smooth: Vec<Vec<f64>> = prof.iter().map(|p| kernel.convolve(p)).collect();
    let m = prof.len();
    let dx = basis.grid.spacing();
    let mut k = Mat::from_fn(m, m, |a, b| {
        prof[a].iter().zip(&smooth[b]).map(|(u, v)| u * v).sum::<f64>() * dx
    });
    let scale = (0..m).map(|i| k[(i, i)].abs()).fold(f64::MIN_POSITIVE, f64::max);
    let asym = asymmetry(&k);
    if asym > 1e-10 * scale {
        return Err(Error::Numerical(format!("environment couplings asymmetric by {asym:.3e}")));
    }
    crate::linalg::symmetrize(&mut k);
    Ok(k)
}

/// Pixel edges covering the detector span, one of them at `offset`.
pub fn pixel_edges(width: f64, offset: f64, lo: f64, hi: f64) -> Vec<f64> {
    let first = ((lo - offset) / width).floor() as i64;
    let last = ((hi - offset) / width).ceil() as i64;
    (first..=last).map(|k| offset + k as f64 * width).collect()
}

#[derive(Clone, Debug)]
pub struct PixelCouplings {
    /// ν̄_jd, modes × pixels.
    pub nu_bar: Mat<f64>,
    pub k2: Mat<f64>,
    pub edges: Vec<f64>,
    pub warnings: Vec<String>,
}

/// ν̄_jd = −(2/√l_D) ∫_pixel d dx (𝒦₁ * κ_j)(x) and K² = ν̄ν̄ᵀ.
pub fn pixel_couplings(
    basis: &BogoliubovBasis,
    probe: &ProbeConfig,
    kernel: &DiffractionKernel,
) -> Result<PixelCouplings> {
    let l_d = probe.pixel_width;
    ensure(l_d > 0.0, "probe.pixel_width", || "pixel couplings need l_D > 0".into())?;
    let grid = &basis.grid;
    let dx = grid.spacing();
    let span = probe.detector_half_width.unwrap_or(grid.half_width() + 0.5 * dx);
    let edges = pixel_edges(l_d, probe.pixel_offset, -span, span);
    let weights: Vec<Vec<f64>> = edges
        .windows(2)
        .map(|w| grid.cell_weights(w[0].max(-span), w[1].min(span)))
        .collect();
    let smooth: Vec<Vec<f64>> = profiles(basis, probe)?.iter().map(|p| kernel.convolve(p)).collect();
    let m = smooth.len();
    let pre = -2.0 / l_d.sqrt();
    let nu = Mat::from_fn(m, weights.len(), |j, d| {
        pre * weights[d].iter().zip(&smooth[j]).map(|(w, g)| w * g).sum::<f64>() * dx
    });
    let mut warnings = Vec::new();
    for (j, g) in smooth.iter().enumerate() {
        let total: f64 = g.iter().map(|v| v.abs()).sum();
        let covered: f64 = (0..g.len())
            .map(|i| weights.iter().map(|w| w[i]).sum::<f64>() * g[i].abs())
            .sum();
        if total > 0.0 && covered < 0.99 * total {
            warnings.push(format!(
                "pixels cover only {:.1}% of the coupling profile of mode {}",
                100.0 * covered / total,
                basis.labels[j]
            ));
        }
    }
    let k2 = &nu * nu.transpose();
    Ok(PixelCouplings {
        nu_bar: nu,
        k2,
        edges,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct CouplingSet {
    pub labels: Vec<usize>,
    pub kappa2_bar: Mat<f64>,
    /// None for the ideal detector.
    pub nu_bar: Option<Mat<f64>>,
    pub k2: Mat<f64>,
    pub pixel_edges: Vec<f64>,
    pub warnings: Vec<String>,
}

impl CouplingSet {
    pub fn build(basis: &BogoliubovBasis, probe: &ProbeConfig) -> Result<Self> {
        probe.validate()?;
        let l_r = probe.rayleigh_length();
        let env_kernel = diffraction_kernel(ENVIRONMENT_ALPHA, l_r, &basis.grid)?;
        let kappa2_bar = environment_couplings(basis, probe, &env_kernel)?;
        let labels = basis.labels.clone();
        if probe.pixel_width == 0.0 {
            let k2 = Mat::from_fn(labels.len(), labels.len(), |i, j| 4.0 * kappa2_bar[(i, j)]);
            return Ok(Self {
                labels,
                kappa2_bar,
                nu_bar: None,
                k2,
                pixel_edges: Vec::new(),
                warnings: Vec::new(),
            });
        }
        let meas_kernel = diffraction_kernel(1.0, l_r, &basis.grid)?;
        let px = pixel_couplings(basis, probe, &meas_kernel)?;
        Ok(Self {
            labels,
            kappa2_bar,
            nu_bar: Some(px.nu_bar),
            k2: px.k2,
            pixel_edges: px.edges,
            warnings: px.warnings,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, j: usize) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == j)
            .ok_or_else(|| Error::invalid("mode", format!("mode {j} has no couplings")))
    }

    /// κ̄²_jj by mode label.
    pub fn diagonal(&self, j: usize) -> Result<f64> {
        let i = self.index_of(j)?;
        Ok(self.kappa2_bar[(i, i)])
    }

    /// All couplings are linear in κ²; rescales them by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let r = s.sqrt();
        let sc = |m: &Mat<f64>, f: f64| Mat::from_fn(m.nrows(), m.ncols(), |i, j| f * m[(i, j)]);
        Self {
            labels: self.labels.clone(),
            kappa2_bar: sc(&self.kappa2_bar, s),
            nu_bar: self.nu_bar.as_ref().map(|n| sc(n, r)),
            k2: sc(&self.k2, s),
            pixel_edges: self.pixel_edges.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// Keeps only the listed mode labels, in the given order.
    pub fn restricted(&self, labels: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = labels.iter().map(|&j| self.index_of(j)).collect::<Result<_>>()?;
        let sub = |m: &Mat<f64>| Mat::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
        Ok(Self {
            labels: labels.to_vec(),
            kappa2_bar: sub(&self.kappa2_bar),
            nu_bar: self
                .nu_bar
                .as_ref()
                .map(|n| Mat::from_fn(idx.len(), n.ncols(), |a, d| n[(idx[a], d)])),
            k2: sub(&self.k2),
            pixel_edges: self.pixel_edges.clone(),
            warnings: self.warnings.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Fixed(f64),
    /// The optimal gain for κ̃_j = κ̄²_jj/ω_j.
    Auto(AutoGain),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoGain {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSpec {
    pub targets: Vec<usize>,
    pub gain: Gain,
}

/// 2×2 block [[a, b], [c, d]].
pub type Block = [[f64; 2]; 2];

#[derive(Clone, Debug)]
pub struct Generators {
    pub labels: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// Drift blocks for the covariance (free rotation).
    pub drift: Vec<Block>,
    /// Drift blocks for the first moments, including feedback damping.
    pub feedback_drift: Vec<Block>,
    /// Feedback gains ε per mode (0 when not targeted).
    pub gains: Vec<f64>,
    /// κ̄² on the (p, p) entries.
    pub env: Mat<f64>,
    /// Measurement coefficients on the (x, channel) entries, modes × channels.
    pub meas: Mat<f64>,
    /// M Mᵀ restricted to the x entries, modes × modes.
    pub k2: Mat<f64>,
}

pub fn assemble_generators(
    basis: &BogoliubovBasis,
    couplings: &CouplingSet,
    feedback: Option<&FeedbackSpec>,
) -> Result<Generators> {
    ensure(couplings.labels == basis.labels, "couplings", || {
        "coupling matrices do not match the basis modes".into()
    })?;
    let m = basis.n_modes();
    let drift: Vec<Block> = basis
        .labels
        .iter()
        .zip(&basis.frequencies)
        .map(|(&j, &w)| {
            if j == 0 {
                [[0.0, 0.0], [w, 0.0]]
            } else {
                [[0.0, -w], [w, 0.0]]
            }
        })
        .collect();
    let mut gains = vec![0.0; m];
    if let Some(fb) = feedback {
        for &j in &fb.targets {
            if j == 0 {
                return Err(Error::invalid(
                    "feedback.targets",
                    "the zero mode is not a harmonic oscillator and cannot be damped",
                ));
            }
            let i = basis.require(j)?;
            gains[i] = match fb.gain {
                Gain::Fixed(e) => {
                    ensure(e >= 0.0, "feedback.gain", || format!("must be non-negative, got {e}"))?;
                    e
                }
                Gain::Auto(_) => {
                    let kt = couplings.kappa2_bar[(i, i)] / basis.frequencies[i];
                    optimal_feedback_gain(kt).epsilon
                }
            };
        }
    }
    let feedback_drift = drift
        .iter()
        .zip(&gains)
        .zip(&basis.frequencies)
        .map(|((b, &e), &w)| {
            let mut b = *b;
            b[1][1] = 2.0 * e * w;
            b
        })
        .collect();
    let meas = match &couplings.nu_bar {
        Some(nu) => nu.clone(),
        None => psd_factor(&couplings.k2)?,
    };
    Ok(Generators {
        labels: basis.labels.clone(),
        frequencies: basis.frequencies.clone(),
        drift,
        feedback_drift,
        gains,
        env: couplings.kappa2_bar.clone(),
        meas,
        k2: couplings.k2.clone(),
    })
}

fn block_matrix(blocks: &[Block]) -> Mat<f64> {
    let n = 2 * blocks.len();
    Mat::from_fn(n, n, |r, c| {
        if r / 2 == c / 2 {
            blocks[r / 2][r % 2][c % 2]
        } else {
            0.0
        }
    })
}

impl Generators {
    /// Harmonic modes probed by an ideal detector with a given κ̄² matrix (K² = 4κ̄²).
    pub fn ideal(frequencies: &[f64], kappa2_bar: Mat<f64>) -> Result<Self> {
        let m = frequencies.len();
        ensure(kappa2_bar.nrows() == m && kappa2_bar.ncols() == m, "kappa2_bar", || {
            format!("expected {m}x{m}")
        })?;
        let k2 = Mat::from_fn(m, m, |i, j| 4.0 * kappa2_bar[(i, j)]);
        let drift: Vec<Block> = frequencies.iter().map(|&w| [[0.0, -w], [w, 0.0]]).collect();
        Ok(Self {
            labels: (1..=m).collect(),
            frequencies: frequencies.to_vec(),
            feedback_drift: drift.clone(),
            drift,
            gains: vec![0.0; m],
            env: kappa2_bar,
            meas: psd_factor(&k2)?,
            k2,
        })
    }

    /// Adds p-damping 2εω to mode i of the first-moment drift.
    pub fn with_gain(mut self, i: usize, eps: f64) -> Self {
        self.gains[i] = eps;
        self.feedback_drift[i][1][1] = 2.0 * eps * self.frequencies[i];
        self
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_channels(&self) -> usize {
        self.meas.ncols()
    }

    pub fn drift_matrix(&self) -> Mat<f64> {
        block_matrix(&self.drift)
    }

    pub fn feedback_drift_matrix(&self) -> Mat<f64> {
        block_matrix(&self.feedback_drift)
    }

    pub fn env_matrix(&self) -> Mat<f64> {
        let n = 2 * self.n_modes();
        Mat::from_fn(n, n, |r, c| {
            if r % 2 == 1 && c % 2 == 1 {
                self.env[(r / 2, c / 2)]
            } else {
                0.0
            }
        })
    }

    /// M with x-row, p-column support, 2m × 2c.
    pub fn measurement_matrix(&self) -> Mat<f64> {
        Mat::from_fn(2 * self.n_modes(), 2 * self.n_channels(), |r, c| {
            if r % 2 == 0 && c % 2 == 1 {
                self.meas[(r / 2, c / 2)]
            } else {
                0.0
            }
        })
    }

    pub fn mm_t(&self) -> Mat<f64> {
        let n = 2 * self.n_modes();
        Mat::from_fn(n, n, |r, c| {
            if r % 2 == 0 && c % 2 == 0 {
                self.k2[(r / 2, c / 2)]
            } else {
                0.0
            }
        })
    }

    /// Same K² with the fewest channels (eigen-channels of K²).
    pub fn compressed(&self) -> Result<Self> {
        Ok(Self {
            meas: psd_factor(&self.k2)?,
            ..self.clone()
        })
    }

    /// Largest rate entering the step-size bound.
    pub fn max_rate(&self) -> Result<f64> {
        let w = self.frequencies.iter().cloned().fold(0.0, f64::max);
        let (k2, _) = sym_eigen(&self.k2)?;
        let env = (0..self.n_modes()).map(|i| self.env[(i, i)]).fold(0.0, f64::max);
        Ok(w.max(k2.last().cloned().unwrap_or(0.0)).max(env))
    }
}

/// Hermite-integral closed form of κ̄²_jk for g = 0, ideal optics, uniform beam.
///
/// Uses ∫φ0² φ_j φ_k dx = (−1)^((j−k)/2) Γ((j+k+1)/2)/(π√2 √(j! k!)) for even j + k.
pub fn noninteracting_coupling(kappa2: f64, j: usize, k: usize) -> f64 {
    if (j + k) % 2 == 1 {
        return 0.0;
    }
    let lf = |n: usize| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    let g = ln_gamma_half(j + k + 1);
    let mag = (g - 0.5 * (lf(j) + lf(k))).exp() / (PI * SQRT_2);
    let sign = if ((j as i64 - k as i64).abs() / 2) % 2 == 0 { 1.0 } else { -1.0 };
    // κ_j = √(4πκ²) f0⁺ f_j⁻ with f = φ/√2 gives a factor πκ²
    PI * kappa2 * sign * mag
}

/// ln Γ(n/2) for a positive integer n.
fn ln_gamma_half(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..n / 2).map(|i| (i as f64).ln()).sum()
    } else {
        // Γ(m + 1/2) = (2m)! √π / (4^m m!)
        let m = (n - 1) / 2;
        let mut s = 0.5 * PI.ln();
        for i in 1..=m {
            s += ((2 * i - 1) as f64 / 2.0).ln();
        }
        s
    }
}
