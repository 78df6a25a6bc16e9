//! Static checks of a config: schema, grid against J, dt against the rates,
//! pixel coverage. Builds the mode basis and couplings but runs no dynamics.

use std::fmt;

use becprobe::bogoliubov::max_resolvable_modes;
use becprobe::dynamics::propagate::max_step;
use becprobe::meanfield::{interaction_for_mu, solve_ground_state, TrapConfig};
use becprobe::SpatialGrid;
use serde::Serialize;
use toml::Value;

use crate::config::{ExperimentConfig, Kind};
use crate::experiment::{build_probed, output_times, probe_config, PhysicsCache};
use crate::load::expand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{s}: {}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub findings: Vec<Finding>,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    fn error(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Error, field, message);
    }

    fn warning(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Warning, field, message);
    }

    fn push(&mut self, severity: Severity, field: impl Into<String>, message: impl Into<String>) {
        let f = Finding {
            severity,
            field: field.into(),
            message: message.into(),
        };
        if !self.findings.iter().any(|g| g.field == f.field && g.message == f.message) {
            self.findings.push(f);
        }
    }

    fn model_error(&mut self, e: becprobe::Error) {
        match e {
            becprobe::Error::Invalid { field, reason } => self.error(field, reason),
            becprobe::Error::Unresolved { requested, max_safe } => self.error(
                "basis.modes",
                format!("unresolvable modes: J = {requested} exceeds the {max_safe} modes this grid resolves"),
            ),
            other => self.error("physics", other.to_string()),
        }
    }
}

fn sections(cfg: &ExperimentConfig, r: &mut Report) {
    match cfg.kind {
        Kind::Ensemble => match &cfg.ensemble {
            None => r.error("ensemble", "kind = \"ensemble\" needs an [ensemble] section"),
            Some(e) if e.trajectories < 2 => r.error("ensemble.trajectories", "need at least 2 trajectories"),
            _ => {}
        },
        Kind::Regions => match &cfg.regions {
            None => r.error("regions", "kind = \"regions\" needs a [regions] section"),
            Some(g) if g.widths.is_empty() => r.error("regions.widths", "need at least one width"),
            _ => {}
        },
        _ => {}
    }
    if cfg.feedback.is_some() && cfg.kind != Kind::Ensemble {
        r.warning("feedback", "feedback only changes the first moments; this kind ignores it");
    }
}

/// Grid resolution against J, from the mean field alone.
fn resolution(cfg: &ExperimentConfig, r: &mut Report) -> bool {
    let t = &cfg.trap;
    let grid = match SpatialGrid::symmetric(t.grid_points, t.half_width) {
        Ok(g) => g,
        Err(e) => {
            r.model_error(e);
            return false;
        }
    };
    let check = || -> becprobe::Result<usize> {
        let base = TrapConfig::from_interaction(0.0, t.atom_number, grid.clone())?;
        let c = match (t.interaction, t.chemical_potential) {
            (Some(c), None) => c,
            (None, Some(mu)) => interaction_for_mu(&base, mu)?,
            _ => return Err(becprobe::Error::invalid("trap", "give exactly one of interaction and chemical_potential")),
        };
        let trap = TrapConfig::from_interaction(c, t.atom_number, grid.clone())?;
        trap.validate()?;
        let mf = solve_ground_state(&trap)?;
        Ok(max_resolvable_modes(&mf, &trap))
    };
    match check() {
        Ok(max_safe) if cfg.basis.modes > max_safe => {
            r.error(
                "basis.modes",
                format!(
                    "unresolvable modes: J = {} exceeds the {max_safe} modes a {}-point grid on [-{}, {}] resolves",
                    cfg.basis.modes, t.grid_points, t.half_width, t.half_width
                ),
            );
            false
        }
        Ok(_) => true,
        Err(e) => {
            r.model_error(e);
            false
        }
    }
}

fn check_point(cfg: &ExperimentConfig, cache: &mut PhysicsCache, r: &mut Report) {
    sections(cfg, r);
    if !resolution(cfg, r) {
        return;
    }
    let phys = match cache.get(cfg) {
        Ok(p) => p,
        Err(e) => return r.model_error(e),
    };
    let basis = &phys.basis;
    let labels: Vec<usize> = cfg
        .observe
        .modes
        .iter()
        .chain(cfg.observe.negativity.iter().flatten())
        .chain(cfg.observe.density_extrema_of.iter())
        .cloned()
        .collect();
    for j in labels {
        if basis.index_of(j).is_none() {
            r.error("observe", format!("mode {j} is not in the basis (J = {})", basis.excited()));
        }
    }
    for &m in &cfg.observe.purity_m {
        if m > basis.excited() {
            r.error("observe.purity_m", format!("subset 0..={m} exceeds J = {}", basis.excited()));
        }
    }
    let mut probes = vec![probe_config(cfg)];
    if let (Kind::Regions, Some(reg)) = (cfg.kind, &cfg.regions) {
        if !reg.fixed_beam {
            probes = reg
                .widths
                .iter()
                .chain(&reg.trace_widths)
                .map(|&w| {
                    let mut p = probe_config(cfg);
                    p.profile = becprobe::probe::BeamProfile::Gaussian { width: w };
                    p
                })
                .collect();
        }
    }
    for probe in probes {
        let p = match build_probed(cfg, phys, probe) {
            Ok(p) => p,
            Err(e) => return r.model_error(e),
        };
        for w in &p.warnings {
            r.warning("probe", w.clone());
        }
        match max_step(&p.gen) {
            Ok(bound) => {
                if let Some(dt) = cfg.time.dt {
                    if dt > bound * (1.0 + 1e-12) {
                        r.error(
                            "time.dt",
                            format!("dt = {dt} exceeds the bound 0.01 / max rate = {bound:.4e}"),
                        );
                    }
                }
            }
            Err(e) => r.model_error(e),
        }
        for &t in cfg.observe.purity_times.iter().chain(&cfg.observe.snapshots) {
            if t < 0.0 || t > p.t_end {
                r.error("observe", format!("time {t} is outside [0, {}]", p.t_end));
            }
        }
        if output_times(cfg, &p.schedule, p.t_end).len() < 2 {
            r.warning("time.samples", "fewer than two output samples");
        }
    }
}

pub fn validate_value(value: &Value) -> Report {
    let mut r = Report::default();
    let points = match expand(value) {
        Ok(p) => p,
        Err(e) => {
            r.error("config", e.to_string());
            return r;
        }
    };
    let mut cache = PhysicsCache::default();
    for (label, cfg, _) in points {
        let before = r.findings.len();
        check_point(&cfg, &mut cache, &mut r);
        if let Some(l) = label {
            for f in &mut r.findings[before..] {
                f.field = format!("[{l}] {}", f.field);
            }
        }
    }
    r
}
