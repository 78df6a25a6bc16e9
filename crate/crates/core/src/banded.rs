//! Small banded-matrix toolkit for the finite-difference operators.

use faer::Mat;

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, row-major band storage.
#[derive(Clone, Debug)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[i * self.width() + j + self.kl - i]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (i, v) in d.iter().enumerate() {
            let old = self.get(i, i);
            self.set(i, i, old + v);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Banded::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for j in self.cols(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Banded) -> Banded {
        let mut out = Banded::zeros(self.n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.n {
            for k in self.cols(i) {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in other.cols(k) {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.cols(i) {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// Cholesky factor of a symmetric positive definite banded matrix.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let p = self.kl;
        let n = self.n;
        // l[i*(p+1) + k] = L[i, i-k]
        let mut l = vec![0.0; n * (p + 1)];
        for i in 0..n {
            for k in (1..=p.min(i)).rev() {
                let j = i - k;
                let mut s = self.get(i, j);
                for m in 1..=(p - k).min(j) {
                    s -= l[i * (p + 1) + k + m] * l[j * (p + 1) + m];
                }
                l[i * (p + 1) + k] = s / l[j * (p + 1)];
            }
            let mut s = self.get(i, i);
            for k in 1..=p.min(i) {
                s -= l[i * (p + 1) + k].powi(2);
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix not positive definite (pivot {s:.3e} at row {i})"
                )));
            }
            l[i * (p + 1)] = s.sqrt();
        }
        Ok(BandedCholesky { n, p, l })
    }
}

/// L of A = L Lᵀ in band storage.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn at(&self, i: usize, k: usize) -> f64 {
        self.l[i * (self.p + 1) + k]
    }

    pub fn factor(&self) -> Banded {
        let mut b = Banded::zeros(self.n, self.p, 0);
        for i in 0..self.n {
            for k in 0..=self.p.min(i) {
                b.set(i, i - k, self.at(i, k));
            }
        }
        b
    }

    /// Solves L y = b in place.
    pub fn solve_lower(&self, y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = y[i];
            for k in 1..=self.p.min(i) {
                s -= self.at(i, k) * y[i - k];
            }
            y[i] = s / self.at(i, 0);
        }
    }

    /// Solves Lᵀ x = y in place.
    pub fn solve_upper(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in 1..=self.p {
                if i + k < self.n {
                    s -= self.at(i + k, k) * x[i + k];
                }
            }
            x[i] = s / self.at(i, 0);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }
}

/// Sixth-order central-difference kinetic operator -½ d²/dx² with Dirichlet edges.
pub fn kinetic(n: usize, dx: f64) -> Banded {
    const C: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let mut t = Banded::zeros(n, 3, 3);
    let s = -0.5 / (dx * dx);
    for i in 0..n {
        for (k, c) in C.iter().enumerate() {
            if i + k < n {
                t.set(i, i + k, s * c);
            }
            if k > 0 && i >= k {
                t.set(i, i - k, s * c);
            }
        }
    }
    t
}
