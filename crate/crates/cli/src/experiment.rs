//! Builds the physics from a config and runs the four experiment kinds.

use std::f64::consts::PI;

use becprobe::bogoliubov::{build_basis, BogoliubovBasis};
use becprobe::dynamics::riccati::evolve_covariance_with;
use becprobe::dynamics::state::{min_symplectic, purity_of};
use becprobe::dynamics::{
    evolve_trajectory, run_ensemble, sample_times, EnsembleOptions, EnsembleSummary, GaussianState, Trajectory,
};
use becprobe::meanfield::{interaction_for_mu, solve_ground_state, MeanField, TrapConfig};
use becprobe::observables::{
    density_correlation, distinguishability, e_qnd, log_negativity, momentum_correlation, purity,
    region_number_statistics, CorrelationField, MomentumField, PoissonChannel, RegionSpec, RegionStats,
};
use becprobe::probe::{
    assemble_generators, make_schedule, BeamProfile, CouplingSet, FeedbackSpec, Generators, ProbeConfig,
    ProbeSchedule, ScheduleSpec,
};
use becprobe::{Error, Result, SpatialGrid};
use faer::Mat;

use crate::config::{ExperimentConfig, Kind, ScheduleSection};

/// Mean field and mode basis; shared by every probe setting of a scan.
#[derive(Clone, Debug)]
pub struct Physics {
    pub trap: TrapConfig,
    pub mf: MeanField,
    pub basis: BogoliubovBasis,
}

pub fn build_physics(cfg: &ExperimentConfig) -> Result<Physics> {
    let t = &cfg.trap;
    let grid = SpatialGrid::symmetric(t.grid_points, t.half_width)?;
    let base = TrapConfig::from_interaction(0.0, t.atom_number, grid)?;
    let c = match (t.interaction, t.chemical_potential) {
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "trap",
                "give either interaction or chemical_potential, not both",
            ))
        }
        (Some(c), None) => c,
        (None, Some(mu)) => interaction_for_mu(&base, mu)?,
        (None, None) => return Err(Error::invalid("trap", "need interaction or chemical_potential")),
    };
    let trap = TrapConfig::from_interaction(c, t.atom_number, base.grid.clone())?;
    trap.validate()?;
    let mf = solve_ground_state(&trap)?;
    let basis = build_basis(&mf, &trap, cfg.basis.modes, cfg.basis.zero_mode)?;
    Ok(Physics { trap, mf, basis })
}

pub fn probe_config(cfg: &ExperimentConfig) -> ProbeConfig {
    let p = &cfg.probe;
    ProbeConfig {
        kappa2: p.kappa2,
        optics: p.optics(),
        pixel_width: p.pixel_width,
        pixel_offset: p.pixel_offset,
        detector_half_width: p.detector_half_width,
        profile: p.profile,
    }
}

/// Couplings, generators and schedule for one probe setting.
#[derive(Clone, Debug)]
pub struct Probed {
    /// The probe actually used, with κ² after normalization.
    pub probe: ProbeConfig,
    pub couplings: CouplingSet,
    pub gen: Generators,
    pub schedule: ProbeSchedule,
    pub t_end: f64,
    pub warnings: Vec<String>,
}

fn frequency(basis: &BogoliubovBasis, j: usize) -> Result<f64> {
    Ok(basis.frequencies[basis.require(j)?])
}

/// Pulse repetition period of a stroboscopic schedule.
pub fn repetition_period(cfg: &ExperimentConfig, basis: &BogoliubovBasis) -> Result<Option<f64>> {
    Ok(match &cfg.schedule {
        ScheduleSection::Squeezing { mode, .. } => Some(PI / frequency(basis, *mode)?),
        ScheduleSection::Entangling { modes, .. } => {
            Some(2.0 * PI / (frequency(basis, modes[0])? + frequency(basis, modes[1])?))
        }
        _ => None,
    })
}

pub fn resolve_t_end(cfg: &ExperimentConfig, basis: &BogoliubovBasis) -> Result<f64> {
    let t_end = match (cfg.time.t_end, cfg.time.periods) {
        (Some(_), Some(_)) => return Err(Error::invalid("time", "give either t_end or periods, not both")),
        (Some(t), None) => t,
        (None, Some(n)) => {
            let period = repetition_period(cfg, basis)?
                .ok_or_else(|| Error::invalid("time.periods", "only defined for pulsed schedules"))?;
            n * period
        }
        (None, None) => return Err(Error::invalid("time", "need t_end or periods")),
    };
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("time.t_end", format!("must be positive, got {t_end}")));
    }
    Ok(t_end)
}

pub fn build_schedule(cfg: &ExperimentConfig, basis: &BogoliubovBasis, t_end: f64) -> Result<ProbeSchedule> {
    let pulses = |period: f64| (t_end / period * (1.0 + 1e-12)).floor() as usize + 1;
    let spec = match cfg.schedule {
        ScheduleSection::Continuous { strength } => ScheduleSpec::Continuous { t_end, strength },
        ScheduleSection::Squeezing {
            mode,
            pulse_phase,
            strength,
        } => {
            let omega = frequency(basis, mode)?;
            ScheduleSpec::SingleModeSqueezing {
                omega,
                pulses: pulses(PI / omega),
                pulse_duration: pulse_phase / omega,
                strength,
            }
        }
        ScheduleSection::Entangling {
            modes,
            pulse_phase,
            strength,
        } => {
            let omega_sum = frequency(basis, modes[0])? + frequency(basis, modes[1])?;
            ScheduleSpec::TwoModeEntangling {
                omega_sum,
                pulses: pulses(2.0 * PI / omega_sum),
                pulse_duration: pulse_phase / omega_sum,
                strength,
            }
        }
        ScheduleSection::Ramp {
            ramp_start,
            ramp_end,
            strength,
        } => ScheduleSpec::Ramp {
            ramp_start,
            ramp_end,
            strength,
        },
    };
    make_schedule(&spec)
}

pub fn build_probed(cfg: &ExperimentConfig, phys: &Physics, probe: ProbeConfig) -> Result<Probed> {
    let mut probe = probe;
    let mut couplings = CouplingSet::build(&phys.basis, &probe)?;
    if let Some(n) = cfg.probe.normalize {
        let d = couplings.diagonal(n.mode)?;
        if !(d > 0.0) || !(n.kappa2_bar > 0.0) {
            return Err(Error::invalid(
                "probe.normalize",
                format!("cannot rescale kappa2_bar of mode {} from {d} to {}", n.mode, n.kappa2_bar),
            ));
        }
        let s = n.kappa2_bar / d;
        couplings = couplings.scaled(s);
        probe.kappa2 *= s;
    }
    let feedback = cfg.feedback.as_ref().map(|f| FeedbackSpec {
        targets: f.targets.clone(),
        gain: f.gain,
    });
    let gen = assemble_generators(&phys.basis, &couplings, feedback.as_ref())?;
    let t_end = resolve_t_end(cfg, &phys.basis)?;
    let schedule = build_schedule(cfg, &phys.basis, t_end)?;
    let warnings = couplings.warnings.clone();
    Ok(Probed {
        probe,
        couplings,
        gen,
        schedule,
        t_end,
        warnings,
    })
}

/// Output times: the even grid plus requested extras and pulse ends.
pub fn output_times(cfg: &ExperimentConfig, schedule: &ProbeSchedule, t_end: f64) -> Vec<f64> {
    let mut t = sample_times(t_end, cfg.time.samples);
    t.extend(&cfg.time.extra_times);
    t.extend(&cfg.observe.purity_times);
    t.extend(&cfg.observe.snapshots);
    if cfg.time.pulse_samples {
        t.extend(schedule.segments.iter().map(|s| s.end).filter(|&e| e < t_end));
    }
    t.retain(|&v| (0.0..=t_end).contains(&v));
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-12 * t_end.max(1.0);
    t.dedup_by(|b, a| (*b - *a).abs() <= tol);
    t
}

fn nearest(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    times.iter().position(|&s| (s - t).abs() <= tol)
}

/// ∫₀ᵗ s(t′) dt′ for the piecewise-linear schedule.
pub fn integrated_strength(schedule: &ProbeSchedule, t: f64) -> f64 {
    schedule
        .segments
        .iter()
        .filter(|s| t > s.start)
        .map(|s| {
            let b = t.min(s.end);
            0.5 * (s.at(s.start) + s.at(b)) * (b - s.start)
        })
        .sum()
}

fn labels_up_to(basis: &BogoliubovBasis, m: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..=m).filter_map(|j| basis.index_of(j)).collect();
    if idx.len() != m + 1 - usize::from(!basis.includes_zero_mode) || idx.is_empty() {
        return Err(Error::invalid(
            "observe.purity_m",
            format!("modes 0..={m} are not all in the basis (J = {})", basis.excited()),
        ));
    }
    Ok(idx)
}

fn poisson_channel(basis: &BogoliubovBasis) -> PoissonChannel {
    if basis.includes_zero_mode {
        PoissonChannel::Full
    } else {
        PoissonChannel::Projected
    }
}

fn indices(basis: &BogoliubovBasis, labels: &[usize]) -> Result<Vec<usize>> {
    labels.iter().map(|&j| basis.require(j)).collect()
}

#[derive(Clone, Debug)]
pub struct CouplingsRun {
    pub interaction: f64,
    pub mu: f64,
    pub n0: f64,
    pub omega0: f64,
    pub labels: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub kappa2: f64,
    pub kappa2_bar: Mat<f64>,
    pub k2: Mat<f64>,
    pub max_rate: f64,
}

#[derive(Clone, Debug)]
pub struct ModeSeries {
    pub label: usize,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub covar_xp: Vec<f64>,
    /// Smallest and largest eigenvalue of the 2×2 block.
    pub block_min: Vec<f64>,
    pub block_max: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NegativitySeries {
    pub pair: [usize; 2],
    pub beta: f64,
    pub e_qnd: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PurityPoint {
    pub t: f64,
    pub m: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Extremum {
    pub t: f64,
    pub var_x: f64,
    pub field: CorrelationField,
}

#[derive(Clone, Debug)]
pub struct DensityExtrema {
    pub mode: usize,
    pub min: Extremum,
    pub max: Extremum,
    pub momentum: Option<MomentumField>,
}

#[derive(Clone, Debug)]
pub struct CovarianceRun {
    pub labels: Vec<usize>,
    pub times: Vec<f64>,
    pub strength: Vec<f64>,
    pub modes: Vec<ModeSeries>,
    pub nu_min: Vec<f64>,
    pub purity_total: Vec<f64>,
    pub purity: Vec<PurityPoint>,
    pub negativity: Vec<NegativitySeries>,
    pub extrema: Option<DensityExtrema>,
    pub snapshots: Vec<(f64, Mat<f64>)>,
    pub final_state: Mat<f64>,
    pub kappa2: f64,
    pub kappa2_bar: Mat<f64>,
    pub t_end: f64,
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub labels: Vec<usize>,
    pub observed: Vec<usize>,
    pub kappa2_diag: Vec<f64>,
    pub times: Vec<f64>,
    pub strength: Vec<f64>,
    pub integrated: Vec<f64>,
    pub gains: Vec<f64>,
    pub damped: EnsembleSummary,
    pub undamped: Option<EnsembleSummary>,
    pub record: Option<Trajectory>,
}

#[derive(Clone, Debug)]
pub struct RegionPoint {
    pub width: f64,
    pub kappa2: f64,
    pub unprobed: RegionStats,
    pub probed: RegionStats,
}

#[derive(Clone, Debug)]
pub struct RegionTrace {
    pub width: f64,
    pub times: Vec<f64>,
    pub stats: Vec<RegionStats>,
}

#[derive(Clone, Debug)]
pub struct RegionsRun {
    pub t_end: f64,
    pub points: Vec<RegionPoint>,
    pub traces: Vec<RegionTrace>,
    pub nu_min: f64,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Couplings(CouplingsRun),
    Covariance(CovarianceRun),
    Ensemble(EnsembleRun),
    Regions(RegionsRun),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub warnings: Vec<String>,
}

/// Reuses the mode basis across scan points that share trap and basis settings.
#[derive(Default)]
pub struct PhysicsCache {
    key: Option<(crate::config::TrapSection, crate::config::BasisSection)>,
    phys: Option<Physics>,
}

impl PhysicsCache {
    pub fn get(&mut self, cfg: &ExperimentConfig) -> Result<&Physics> {
        let key = (cfg.trap.clone(), cfg.basis.clone());
        if self.key.as_ref() != Some(&key) || self.phys.is_none() {
            self.phys = Some(build_physics(cfg)?);
            self.key = Some(key);
        }
        Ok(self.phys.as_ref().unwrap())
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunResult> {
    execute_cached(cfg, &mut PhysicsCache::default())
}

pub fn execute_cached(cfg: &ExperimentConfig, cache: &mut PhysicsCache) -> Result<RunResult> {
    let phys = cache.get(cfg)?;
    match cfg.kind {
        Kind::Couplings => run_couplings(cfg, phys),
        Kind::Covariance => run_covariance(cfg, phys),
        Kind::Ensemble => run_ensemble_kind(cfg, phys),
        Kind::Regions => run_regions(cfg, phys),
    }
}

fn run_couplings(cfg: &ExperimentConfig, phys: &Physics) -> Result<RunResult> {
    let p = build_probed(cfg, phys, probe_config(cfg))?;
    Ok(RunResult {
        outcome: Outcome::Couplings(CouplingsRun {
            interaction: phys.trap.interaction(),
            mu: phys.mf.mu,
            n0: phys.mf.n0,
            omega0: phys.basis.zero.omega0,
            labels: phys.basis.labels.clone(),
            frequencies: phys.basis.frequencies.clone(),
            kappa2: p.probe.kappa2,
            kappa2_bar: p.couplings.kappa2_bar.clone(),
            k2: p.couplings.k2.clone(),
            max_rate: p.gen.max_rate()?,
        }),
        warnings: p.warnings,
    })
}

fn block_eigen(a: &Mat<f64>, i: usize) -> (f64, f64) {
    let (xx, xp, pp) = (a[(2 * i, 2 * i)], a[(2 * i, 2 * i + 1)], a[(2 * i + 1, 2 * i + 1)]);
    let m = 0.5 * (xx + pp);
    let r = (0.25 * (xx - pp).powi(2) + xp * xp).sqrt();
    (m - r, m + r)
}

/// Riccati run with the observables requested in `[observe]`.
pub fn run_covariance_with(cfg: &ExperimentConfig, phys: &Physics, p: &Probed) -> Result<CovarianceRun> {
    let basis = &phys.basis;
    let obs = &cfg.observe;
    let mode_idx = indices(basis, &obs.modes)?;
    let mut subsets = Vec::new();
    for &m in &obs.purity_m {
        subsets.push((m, labels_up_to(basis, m)?));
    }
    let mut neg = Vec::new();
    for &[j, k] in &obs.negativity {
        if j == k {
            return Err(Error::invalid("observe.negativity", format!("pair ({j}, {k}) repeats a mode")));
        }
        let (a, b) = (basis.require(j)?, basis.require(k)?);
        let beta = distinguishability(&p.couplings.kappa2_bar, a, b)?;
        neg.push((
            (a, b),
            NegativitySeries {
                pair: [j, k],
                beta,
                e_qnd: e_qnd(beta),
                values: Vec::new(),
            },
        ));
    }
    let extrema_idx = obs.density_extrema_of.map(|j| basis.require(j)).transpose()?;
    let times = output_times(cfg, &p.schedule, p.t_end);
    let purity_times = obs.purity_times.clone();
    let snapshot_times = obs.snapshots.clone();

    let mut modes: Vec<ModeSeries> = obs
        .modes
        .iter()
        .map(|&label| ModeSeries {
            label,
            var_x: Vec::new(),
            var_p: Vec::new(),
            covar_xp: Vec::new(),
            block_min: Vec::new(),
            block_max: Vec::new(),
        })
        .collect();
    let mut out_times = Vec::new();
    let mut strength = Vec::new();
    let mut nu_min = Vec::new();
    let mut purity_total = Vec::new();
    let mut purity_points = Vec::new();
    let mut snapshots = Vec::new();
    let mut lo: Option<(f64, f64, Mat<f64>)> = None;
    let mut hi: Option<(f64, f64, Mat<f64>)> = None;

    let a0 = GaussianState::vacuum(basis.n_modes()).a;
    let final_state = evolve_covariance_with(&a0, &p.gen, &p.schedule, p.t_end, cfg.time.dt, &times, |t, a| {
        out_times.push(t);
        strength.push(p.schedule.strength_at(t));
        for (s, &i) in modes.iter_mut().zip(&mode_idx) {
            s.var_x.push(a[(2 * i, 2 * i)]);
            s.var_p.push(a[(2 * i + 1, 2 * i + 1)]);
            s.covar_xp.push(a[(2 * i, 2 * i + 1)]);
            let (l, h) = block_eigen(a, i);
            s.block_min.push(l);
            s.block_max.push(h);
        }
        nu_min.push(min_symplectic(a)?);
        purity_total.push(purity_of(a)?);
        if purity_times.iter().any(|&tp| nearest(&[t], tp).is_some()) {
            for (m, idx) in &subsets {
                purity_points.push(PurityPoint {
                    t,
                    m: *m,
                    value: purity(a, idx)?,
                });
            }
        }
        for ((a_i, b_i), series) in neg.iter_mut() {
            series.values.push(log_negativity(a, *a_i, *b_i)?);
        }
        if snapshot_times.iter().any(|&ts| nearest(&[t], ts).is_some()) {
            snapshots.push((t, a.clone()));
        }
        if let Some(i) = extrema_idx {
            if t >= obs.extrema_after {
                let v = a[(2 * i, 2 * i)];
                if lo.as_ref().map_or(true, |(_, w, _)| v < *w) {
                    lo = Some((t, v, a.clone()));
                }
                if hi.as_ref().map_or(true, |(_, w, _)| v > *w) {
                    hi = Some((t, v, a.clone()));
                }
            }
        }
        Ok(())
    })?;

    for &tp in &purity_times {
        if nearest(&out_times, tp).is_none() {
            return Err(Error::invalid("observe.purity_times", format!("t = {tp} is outside [0, t_end]")));
        }
    }
    let extrema = match (obs.density_extrema_of, lo, hi) {
        (Some(mode), Some(lo), Some(hi)) => {
            let channel = poisson_channel(basis);
            let momentum = match obs.momentum {
                Some(m) => {
                    let n = m.points.max(2);
                    let k: Vec<f64> = (0..n).map(|i| -m.k_max + 2.0 * m.k_max * i as f64 / (n - 1) as f64).collect();
                    Some(momentum_correlation(basis, &lo.2, &k)?)
                }
                None => None,
            };
            Some(DensityExtrema {
                mode,
                min: Extremum {
                    t: lo.0,
                    var_x: lo.1,
                    field: density_correlation(basis, &lo.2, channel)?,
                },
                max: Extremum {
                    t: hi.0,
                    var_x: hi.1,
                    field: density_correlation(basis, &hi.2, channel)?,
                },
                momentum,
            })
        }
        (Some(_), _, _) => {
            return Err(Error::invalid(
                "observe.extrema_after",
                "no samples after extrema_after",
            ))
        }
        _ => None,
    };
    Ok(CovarianceRun {
        labels: basis.labels.clone(),
        times: out_times,
        strength,
        modes,
        nu_min,
        purity_total,
        purity: purity_points,
        negativity: neg.into_iter().map(|(_, s)| s).collect(),
        extrema,
        snapshots,
        final_state,
        kappa2: p.probe.kappa2,
        kappa2_bar: p.couplings.kappa2_bar.clone(),
        t_end: p.t_end,
    })
}

fn run_covariance(cfg: &ExperimentConfig, phys: &Physics) -> Result<RunResult> {
    let p = build_probed(cfg, phys, probe_config(cfg))?;
    let mut run = run_covariance_with(cfg, phys, &p)?;
    let mut warnings = p.warnings.clone();
    if let Some(e) = &mut run.extrema {
        warnings.extend(e.min.field.warnings.iter().cloned());
        warnings.extend(e.max.field.warnings.iter().cloned());
    }
    Ok(RunResult {
        outcome: Outcome::Covariance(run),
        warnings,
    })
}

fn run_ensemble_kind(cfg: &ExperimentConfig, phys: &Physics) -> Result<RunResult> {
    let ens = cfg
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::invalid("ensemble", "kind = \"ensemble\" needs an [ensemble] section"))?;
    let basis = &phys.basis;
    let p = build_probed(cfg, phys, probe_config(cfg))?;
    let observed = indices(basis, &cfg.observe.modes)?;
    let times = output_times(cfg, &p.schedule, p.t_end);
    let opts = EnsembleOptions {
        n_traj: ens.trajectories,
        seed: cfg.seed,
        t_end: p.t_end,
        dt: cfg.time.dt,
        samples: times.clone(),
        keep: ens.keep,
        modes: Some(observed.clone()),
    };
    let state = GaussianState::vacuum(basis.n_modes());
    let damped = run_ensemble(&state, &p.gen, &p.schedule, &opts)?;
    let undamped = if ens.compare_undamped && p.gen.gains.iter().any(|&g| g > 0.0) {
        let mut bare = p.gen.clone();
        bare.feedback_drift = bare.drift.clone();
        bare.gains = vec![0.0; bare.gains.len()];
        Some(run_ensemble(&state, &bare, &p.schedule, &opts)?)
    } else {
        None
    };
    let record = if ens.record {
        Some(evolve_trajectory(&state, &p.gen, &p.schedule, p.t_end, cfg.time.dt, &times, cfg.seed)?)
    } else {
        None
    };
    let sample_t = damped.times();
    Ok(RunResult {
        outcome: Outcome::Ensemble(EnsembleRun {
            labels: basis.labels.clone(),
            kappa2_diag: observed.iter().map(|&i| p.couplings.kappa2_bar[(i, i)]).collect(),
            observed,
            strength: sample_t.iter().map(|&t| p.schedule.strength_at(t)).collect(),
            integrated: sample_t.iter().map(|&t| integrated_strength(&p.schedule, t)).collect(),
            times: sample_t,
            gains: p.gen.gains.clone(),
            damped,
            undamped,
            record,
        }),
        warnings: p.warnings,
    })
}

fn run_regions(cfg: &ExperimentConfig, phys: &Physics) -> Result<RunResult> {
    let reg = cfg
        .regions
        .as_ref()
        .ok_or_else(|| Error::invalid("regions", "kind = \"regions\" needs a [regions] section"))?;
    if reg.widths.is_empty() {
        return Err(Error::invalid("regions.widths", "need at least one width"));
    }
    let basis = &phys.basis;
    let channel = poisson_channel(basis);
    let vacuum = GaussianState::vacuum(basis.n_modes()).a;
    let unprobed = density_correlation(basis, &vacuum, channel)?;
    let mut warnings = unprobed.warnings.clone();
    let mut widths = reg.widths.clone();
    for &w in &reg.trace_widths {
        if !widths.iter().any(|&v| (v - w).abs() <= 1e-12 * w.abs().max(1.0)) {
            widths.push(w);
        }
    }
    let mut points = Vec::new();
    let mut traces = Vec::new();
    let mut nu_min = f64::INFINITY;
    for &w in &widths {
        let spec = RegionSpec::centred(w, &basis.grid)?;
        let mut probe = probe_config(cfg);
        if !reg.fixed_beam {
            probe.profile = BeamProfile::Gaussian { width: w };
        }
        let p = build_probed(cfg, phys, probe)?;
        warnings.extend(p.warnings.iter().cloned());
        let traced = reg.trace_widths.iter().any(|&v| (v - w).abs() <= 1e-12 * w.abs().max(1.0));
        let times = if traced {
            output_times(cfg, &p.schedule, p.t_end)
        } else {
            vec![p.t_end]
        };
        let mut trace = RegionTrace {
            width: w,
            times: Vec::new(),
            stats: Vec::new(),
        };
        let a0 = vacuum.clone();
        let a_end = evolve_covariance_with(&a0, &p.gen, &p.schedule, p.t_end, cfg.time.dt, &times, |t, a| {
            nu_min = nu_min.min(min_symplectic(a)?);
            if traced {
                let f = density_correlation(basis, a, channel)?;
                trace.times.push(t);
                trace.stats.push(region_number_statistics(&f, &spec)?);
            }
            Ok(())
        })?;
        if reg.widths.iter().any(|&v| v == w) {
            let field = density_correlation(basis, &a_end, channel)?;
            warnings.extend(field.warnings.iter().cloned());
            points.push(RegionPoint {
                width: w,
                kappa2: p.probe.kappa2,
                unprobed: region_number_statistics(&unprobed, &spec)?,
                probed: region_number_statistics(&field, &spec)?,
            });
        }
        if traced {
            traces.push(trace);
        }
    }
    warnings.sort();
    warnings.dedup();
    Ok(RunResult {
        outcome: Outcome::Regions(RegionsRun {
            t_end: resolve_t_end(cfg, basis)?,
            points,
            traces,
            nu_min,
        }),
        warnings,
    })
}
