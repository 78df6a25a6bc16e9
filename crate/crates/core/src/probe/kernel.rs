use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure, Error, Result};
use crate::grid::SpatialGrid;

/// 𝒦_α(x) = (1/2π)∫dk exp(−(α l_R k)⁴/64π²) e^{ikx}, applied by padded FFT.
#[derive(Clone)]
pub struct DiffractionKernel {
    pub alpha: f64,
    pub l_r: f64,
    n: usize,
    dx: f64,
    weights: Vec<f64>,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for DiffractionKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffractionKernel")
            .field("alpha", &self.alpha)
            .field("l_r", &self.l_r)
            .field("n", &self.n)
            .finish()
    }
}

pub fn fourier_weight(alpha: f64, l_r: f64, k: f64) -> f64 {
    (-(alpha * l_r * k).powi(4) / (64.0 * PI * PI)).exp()
}

pub fn diffraction_kernel(alpha: f64, l_r: f64, grid: &SpatialGrid) -> Result<DiffractionKernel> {
    ensure(l_r >= 0.0 && l_r.is_finite(), "probe.rayleigh_length", || {
        format!("must be non-negative, got {l_r}")
    })?;
    let n = grid.len();
    let dx = grid.spacing();
    let mut kernel = DiffractionKernel {
        alpha,
        l_r,
        n,
        dx,
        weights: Vec::new(),
        forward: None,
        inverse: None,
    };
    if l_r == 0.0 {
        return Ok(kernel);
    }
    let m = 2 * n;
    kernel.weights = (0..m)
        .map(|i| {
            let s = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
            fourier_weight(alpha, l_r, 2.0 * PI * s / (m as f64 * dx))
        })
        .collect();
    let mut planner = FftPlanner::new();
    kernel.forward = Some(planner.plan_fft_forward(m));
    kernel.inverse = Some(planner.plan_fft_inverse(m));
    let mass = kernel.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "kernel mass {mass:.9} deviates from 1; grid too coarse or too small for l_R = {l_r}"
        )));
    }
    Ok(kernel)
}

impl DiffractionKernel {
    pub fn is_identity(&self) -> bool {
        self.weights.is_empty()
    }

    /// Kernel values at offsets m·dx, m = −(n−1)..=(n−1).
    pub fn samples(&self) -> Vec<f64> {
        let n = self.n;
        if self.is_identity() {
            let mut s = vec![0.0; 2 * n - 1];
            s[n - 1] = 1.0 / self.dx;
            return s;
        }
        let m = 2 * n;
        let mut buf: Vec<Complex64> = self.weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        self.inverse.as_ref().unwrap().process(&mut buf);
        let scale = 1.0 / (m as f64 * self.dx);
        (0..2 * n - 1)
            .map(|i| {
                let off = i as isize - (n as isize - 1);
                buf[off.rem_euclid(m as isize) as usize].re * scale
            })
            .collect()
    }

    /// ∫𝒦 dx over offsets within the grid half-width.
    pub fn mass(&self) -> f64 {
        let s = self.samples();
        let c = self.n - 1;
        let h = self.n / 2;
        s[c - h..=c + h].iter().sum::<f64>() * self.dx
    }

    pub fn convolve(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n, "profile length does not match the kernel grid");
        if self.is_identity() {
            return f.to_vec();
        }
        let m = 2 * self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (b, v) in buf.iter_mut().zip(f) {
            b.re = *v;
        }
        self.forward.as_ref().unwrap().process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.weights) {
            *b *= *w;
        }
        self.inverse.as_ref().unwrap().process(&mut buf);
        buf[..self.n].iter().map(|c| c.re / m as f64).collect()
    }
}
