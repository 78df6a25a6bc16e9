//! Acceptance checks for becprobe.
//!
//! Each criterion is a function returning a [`Verdict`]. Runs that produce
//! covariance matrices also feed a shared [`Physicality`] record, which the
//! last criterion reads.

use std::fmt;
use std::time::Instant;

use anyhow::Result;
use becprobe::dynamics::state::{min_symplectic, purity_of};
use becprobe_cli::experiment::{CovarianceRun, Outcome, RunResult};
use faer::Mat;

pub mod baseline;
pub mod criteria;

#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

/// Runs `check` and turns an error into a failing verdict.
pub fn judge(id: usize, title: &'static str, check: impl FnOnce() -> Result<(bool, String)>) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    Verdict {
        id,
        title,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Smallest symplectic eigenvalue and largest purity over every sample seen.
#[derive(Clone, Debug)]
pub struct Physicality {
    pub min_nu: f64,
    pub max_purity: f64,
    pub samples: usize,
    pub worst_nu: String,
    pub worst_purity: String,
}

impl Default for Physicality {
    fn default() -> Self {
        Self {
            min_nu: f64::INFINITY,
            max_purity: f64::NEG_INFINITY,
            samples: 0,
            worst_nu: String::new(),
            worst_purity: String::new(),
        }
    }
}

impl Physicality {
    pub fn record(&mut self, source: &str, nu: f64, purity: Option<f64>) {
        self.samples += 1;
        if nu < self.min_nu {
            self.min_nu = nu;
            self.worst_nu = source.to_string();
        }
        if let Some(p) = purity {
            if p > self.max_purity {
                self.max_purity = p;
                self.worst_purity = source.to_string();
            }
        }
    }

    pub fn matrix(&mut self, source: &str, a: &Mat<f64>) -> Result<()> {
        self.record(source, min_symplectic(a)?, Some(purity_of(a)?));
        Ok(())
    }

    pub fn covariance(&mut self, source: &str, r: &CovarianceRun) {
        for (nu, p) in r.nu_min.iter().zip(&r.purity_total) {
            self.record(source, *nu, Some(*p));
        }
        for pt in &r.purity {
            self.record(source, f64::INFINITY, Some(pt.value));
        }
    }

    pub fn outcome(&mut self, source: &str, o: &Outcome) -> Result<()> {
        match o {
            Outcome::Covariance(r) => self.covariance(source, r),
            Outcome::Regions(r) => self.record(source, r.nu_min, None),
            Outcome::Ensemble(r) => {
                for s in std::iter::once(&r.damped).chain(&r.undamped) {
                    for sample in &s.samples {
                        self.matrix(source, &sample.a_cond)?;
                    }
                }
            }
            Outcome::Couplings(_) => {}
        }
        Ok(())
    }
}

/// Runs a shipped preset with `key=value` overrides applied first.
pub fn run_preset(name: &str, overrides: &[&str], phys: &mut Physicality) -> Result<Vec<(Option<String>, RunResult)>> {
    let mut value = becprobe_cli::presets::preset(name)?;
    for o in overrides {
        becprobe_cli::load::apply_override(&mut value, o)?;
    }
    let results = becprobe_cli::run::execute_value(&value)?;
    for (label, r) in &results {
        let source = match label {
            Some(l) => format!("{name} [{l}]"),
            None => name.to_string(),
        };
        phys.outcome(&source, &r.outcome)?;
    }
    Ok(results)
}

pub fn covariance(r: &RunResult) -> Result<&CovarianceRun> {
    match &r.outcome {
        Outcome::Covariance(c) => Ok(c),
        _ => anyhow::bail!("expected a covariance run"),
    }
}

/// True when `v` never rises by more than `tol`.
pub fn non_increasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// True when `v` never falls by more than `tol`.
pub fn non_decreasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - tol)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
