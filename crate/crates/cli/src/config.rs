//! Experiment configuration schema.
//!
//! Configs are TOML; every section except `trap` and `time` has defaults.
//! Lengths are in units of l_x, times in 1/ω_x, rates in ω_x.

use becprobe::probe::{BeamProfile, Gain, Optics};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Mean field, spectrum, mode functions and couplings.
    Couplings,
    /// Conditional covariance under deterministic Riccati evolution.
    Covariance,
    /// Monte Carlo trajectories of the first moments.
    Ensemble,
    /// Atom number statistics of three regions.
    Regions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Free-text note on where the parameters come from.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    pub trap: TrapSection,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSection>,
    pub time: TimeSection,
    #[serde(default)]
    pub observe: ObserveSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    /// N·g1d in units of ħω_x l_x; exclusive with `chemical_potential`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    /// Target μ in units of ħω_x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chemical_potential: Option<f64>,
    #[serde(default = "default_atoms")]
    pub atom_number: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_atoms() -> f64 {
    1000.0
}
fn default_points() -> usize {
    1024
}
fn default_half_width() -> f64 {
    12.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    /// Number J of excited modes.
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// false drops the zero mode (fixed total atom number).
    #[serde(default = "yes")]
    pub zero_mode: bool,
}

fn default_modes() -> usize {
    20
}
fn yes() -> bool {
    true
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            zero_mode: true,
        }
    }
}

/// Rescale κ² so that κ̄²_jj of `mode` equals `kappa2_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalize {
    pub mode: usize,
    pub kappa2_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "one")]
    pub kappa2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<Normalize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rayleigh_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_perp: Option<f64>,
    #[serde(default)]
    pub pixel_width: f64,
    #[serde(default)]
    pub pixel_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_half_width: Option<f64>,
    #[serde(default = "uniform")]
    pub profile: BeamProfile,
}

fn one() -> f64 {
    1.0
}
fn uniform() -> BeamProfile {
    BeamProfile::Uniform
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            kappa2: 1.0,
            normalize: None,
            rayleigh_length: None,
            wavelength: None,
            l_perp: None,
            pixel_width: 0.0,
            pixel_offset: 0.0,
            detector_half_width: None,
            profile: BeamProfile::Uniform,
        }
    }
}

impl ProbeSection {
    pub fn optics(&self) -> Optics {
        match (self.rayleigh_length, self.wavelength, self.l_perp) {
            (_, Some(wavelength), Some(l_perp)) => Optics::Wavelength { wavelength, l_perp },
            (Some(rayleigh_length), _, _) => Optics::Rayleigh { rayleigh_length },
            _ => Optics::Rayleigh { rayleigh_length: 0.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSection {
    /// Constant strength over the whole run.
    Continuous {
        #[serde(default = "one")]
        strength: f64,
    },
    /// Pulses every half period of `mode`, each of duration pulse_phase/ω_j.
    Squeezing {
        mode: usize,
        pulse_phase: f64,
        #[serde(default = "one")]
        strength: f64,
    },
    /// Pulses every 2π/ϖ with ϖ = ω_j + ω_k, each of duration pulse_phase/ϖ.
    Entangling {
        modes: [usize; 2],
        pulse_phase: f64,
        #[serde(default = "one")]
        strength: f64,
    },
    /// Constant until `ramp_start`, then linear to zero at `ramp_end`.
    Ramp {
        ramp_start: f64,
        ramp_end: f64,
        #[serde(default = "one")]
        strength: f64,
    },
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection::Continuous { strength: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub targets: Vec<usize>,
    /// A number or "auto".
    pub gain: Gain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Run length in pulse repetition periods; exclusive with `t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Number of evenly spaced output intervals.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Also sample at the end of every pulse.
    #[serde(default)]
    pub pulse_samples: bool,
    /// Extra output times.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_times: Vec<f64>,
}

fn default_samples() -> usize {
    200
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveSection {
    /// Mode labels whose variances are written as time series.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<usize>,
    /// Purity of {0..m} for each m, at `purity_times`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub purity_m: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub purity_times: Vec<f64>,
    /// Mode label pairs for the log-negativity series.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub negativity: Vec<[usize; 2]>,
    /// Mode whose variance extrema select the density-correlation snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_extrema_of: Option<usize>,
    /// Ignore extrema before this time.
    #[serde(default)]
    pub extrema_after: f64,
    /// Momentum map at the variance minimum, with this many k points over [−k_max, k_max].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<MomentumSection>,
    /// Times at which the full covariance is written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumSection {
    pub k_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub trajectories: usize,
    /// Trajectories kept in full for plotting.
    #[serde(default = "default_keep")]
    pub keep: usize,
    /// Also run without feedback from the same seed.
    #[serde(default)]
    pub compare_undamped: bool,
    /// Write the per-channel measurement record of the first trajectory.
    #[serde(default)]
    pub record: bool,
}

fn default_keep() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSection {
    /// Widths l_G of R₂; the Gaussian beam follows l_G unless `fixed_beam`.
    pub widths: Vec<f64>,
    /// Widths whose full time trace is written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace_widths: Vec<f64>,
    #[serde(default)]
    pub fixed_beam: bool,
}

/// Repeat the run for each value of one config key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
