use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Probe strength multiplier varying linearly from `from` to `to` over [start, end).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    pub fn at(&self, t: f64) -> f64 {
        if self.from == self.to {
            return self.from;
        }
        let s = ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0);
        self.from + s * (self.to - self.from)
    }

    pub fn integral(&self) -> f64 {
        0.5 * (self.from + self.to) * (self.end - self.start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleMode {
    Continuous,
    Stroboscopic {
        centers: Vec<f64>,
        pulse_duration: f64,
        repetition_frequency: f64,
    },
    Ramp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    pub segments: Vec<Segment>,
    pub mode: ScheduleMode,
}

/// Requested schedule shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Continuous {
        t_end: f64,
        #[serde(default = "one")]
        strength: f64,
    },
    /// Pulses at t_l = lπ/ω, measuring the same quadrature every half period.
    SingleModeSqueezing {
        omega: f64,
        pulses: usize,
        pulse_duration: f64,
        #[serde(default = "one")]
        strength: f64,
    },
    /// Pulses at ϖt_l = 2πl with ϖ = ω_j + ω_k.
    TwoModeEntangling {
        omega_sum: f64,
        pulses: usize,
        pulse_duration: f64,
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

fn one() -> f64 {
    1.0
}

fn pulse_train(period: f64, pulses: usize, width: f64, strength: f64) -> Result<ProbeSchedule> {
    ensure(pulses >= 1, "schedule.pulses", || "need at least one pulse".into())?;
    ensure(width > 0.0, "schedule.pulse_duration", || format!("must be positive, got {width}"))?;
    if width >= period {
        return Err(Error::invalid(
            "schedule.pulse_duration",
            format!("pulses overlap: duration {width} exceeds the repetition period {period}"),
        ));
    }
    let centers: Vec<f64> = (0..pulses).map(|l| l as f64 * period).collect();
    // the first pulse is centred on t = 0 and starts with the run
    let segments = centers
        .iter()
        .map(|&c| Segment {
            start: (c - 0.5 * width).max(0.0),
            end: c + 0.5 * width,
            from: strength,
            to: strength,
        })
        .collect();
    Ok(ProbeSchedule {
        segments,
        mode: ScheduleMode::Stroboscopic {
            centers,
            pulse_duration: width,
            repetition_frequency: 2.0 * PI / period,
        },
    })
}

pub fn make_schedule(spec: &ScheduleSpec) -> Result<ProbeSchedule> {
    let strength = match spec {
        ScheduleSpec::Continuous { strength, .. }
        | ScheduleSpec::SingleModeSqueezing { strength, .. }
        | ScheduleSpec::TwoModeEntangling { strength, .. }
        | ScheduleSpec::Ramp { strength, .. } => *strength,
    };
    ensure(strength >= 0.0, "schedule.strength", || format!("must be non-negative, got {strength}"))?;
    match *spec {
        ScheduleSpec::Continuous { t_end, strength } => {
            ensure(t_end > 0.0, "schedule.t_end", || format!("must be positive, got {t_end}"))?;
            Ok(ProbeSchedule {
                segments: vec![Segment {
                    start: 0.0,
                    end: t_end,
                    from: strength,
                    to: strength,
                }],
                mode: ScheduleMode::Continuous,
            })
        }
        ScheduleSpec::SingleModeSqueezing {
            omega,
            pulses,
            pulse_duration,
            strength,
        } => {
            ensure(omega > 0.0, "schedule.omega", || format!("must be positive, got {omega}"))?;
            pulse_train(PI / omega, pulses, pulse_duration, strength)
        }
        ScheduleSpec::TwoModeEntangling {
            omega_sum,
            pulses,
            pulse_duration,
            strength,
        } => {
            ensure(omega_sum > 0.0, "schedule.omega_sum", || {
                format!("must be positive, got {omega_sum}")
            })?;
            pulse_train(2.0 * PI / omega_sum, pulses, pulse_duration, strength)
        }
        ScheduleSpec::Ramp {
            ramp_start,
            ramp_end,
            strength,
        } => {
            ensure(ramp_start > 0.0 && ramp_end > ramp_start, "schedule.ramp_end", || {
                format!("need 0 < ramp_start < ramp_end, got {ramp_start}, {ramp_end}")
            })?;
            Ok(ProbeSchedule {
                segments: vec![
                    Segment {
                        start: 0.0,
                        end: ramp_start,
                        from: strength,
                        to: strength,
                    },
                    Segment {
                        start: ramp_start,
                        end: ramp_end,
                        from: strength,
                        to: 0.0,
                    },
                ],
                mode: ScheduleMode::Ramp,
            })
        }
    }
}

impl ProbeSchedule {
    pub fn constant(t_end: f64) -> Self {
        make_schedule(&ScheduleSpec::Continuous { t_end, strength: 1.0 }).expect("valid schedule")
    }

    pub fn strength_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .map_or(0.0, |s| s.at(t))
    }

    pub fn integrated(&self) -> f64 {
        self.segments.iter().map(Segment::integral).sum()
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            ensure(s.end > s.start, "schedule.segments", || format!("segment {i} is empty or reversed"))?;
            ensure(s.from >= 0.0 && s.to >= 0.0, "schedule.segments", || {
                format!("segment {i} has a negative multiplier")
            })?;
            if i > 0 {
                ensure(s.start >= self.segments[i - 1].end, "schedule.segments", || {
                    format!("segment {i} overlaps its predecessor")
                })?;
            }
        }
        Ok(())
    }

    /// Splits [0, t_end] into maximal intervals of constant on/off status.
    pub fn intervals(&self, t_end: f64) -> Vec<(f64, f64, Option<Segment>)> {
        let mut out = Vec::new();
        let mut t = 0.0;
        for s in &self.segments {
            if s.start >= t_end {
                break;
            }
            if s.start > t {
                out.push((t, s.start, None));
            }
            let end = s.end.min(t_end);
            if end > s.start.max(t) {
                out.push((s.start.max(t), end, Some(*s)));
            }
            t = end;
        }
        if t < t_end {
            out.push((t, t_end, None));
        }
        out
    }
}
