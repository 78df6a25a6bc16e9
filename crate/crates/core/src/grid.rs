use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Uniform grid symmetric about x = 0, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    points: Vec<f64>,
    spacing: f64,
}

impl SpatialGrid {
    pub fn symmetric(n: usize, half_width: f64) -> Result<Self> {
        ensure(n >= 16, "grid.points", || format!("need at least 16 points, got {n}"))?;
        ensure(half_width.is_finite() && half_width > 0.0, "grid.half_width", || {
            format!("must be positive, got {half_width}")
        })?;
        let spacing = 2.0 * half_width / (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                // mirror the right half so the grid is exactly symmetric
                let k = i.min(n - 1 - i);
                let x = -half_width + k as f64 * spacing;
                if i > n - 1 - i {
                    -x
                } else {
                    x
                }
            })
            .collect();
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Trapezoid-free rectangle rule; integrands vanish at the edges.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.spacing
    }

    pub fn integrate_with(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.len()).map(f).sum::<f64>() * self.spacing
    }

    /// Fraction of each grid cell [x - dx/2, x + dx/2] that lies inside [a, b].
    pub fn cell_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let h = 0.5 * self.spacing;
        self.points
            .iter()
            .map(|&x| {
                let lo = (x - h).max(a);
                let hi = (x + h).min(b);
                ((hi - lo) / self.spacing).max(0.0)
            })
            .collect()
    }
}
