use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("grid too small: edge density is {ratio:.3e} of the peak (limit 1e-6); widen the grid")]
    GridTooSmall { ratio: f64 },

    #[error("mode {requested} is not resolved by the grid; maximum safe mode count is {max_safe}")]
    Unresolved { requested: usize, max_safe: usize },

    #[error("finite difference unstable: {0}")]
    FiniteDifference(String),

    #[error("unphysical state at t = {t:.6}: smallest symplectic eigenvalue {nu_min:.9} (try a smaller dt)")]
    Unphysical { t: f64, nu_min: f64 },

    #[error("ill-conditioned pseudoinverse: singular value {0:.3e} inside the [1e-12, 1e-8] band")]
    IllConditioned(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. } | Error::Unresolved { .. })
    }
}

pub(crate) fn ensure(cond: bool, field: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(field, reason()))
    }
}
