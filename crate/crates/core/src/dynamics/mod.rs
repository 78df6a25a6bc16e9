//! Conditional Gaussian dynamics under continuous homodyne probing.

pub mod ensemble;
pub mod feedback;
pub mod oracle;
pub mod propagate;
pub mod riccati;
pub mod state;

pub use ensemble::{evolve_trajectory, run_ensemble, EnsembleOptions, EnsembleSample, EnsembleSummary, Trajectory};
pub use feedback::{optimal_feedback_gain, steady_state_prediction, FeedbackGain};
pub use oracle::{discrete_measurement_update, discrete_pipeline, JointGaussian};
pub use riccati::{evolve_covariance, evolve_covariance_with, sample_times, CovarianceSeries};
pub use state::GaussianState;
