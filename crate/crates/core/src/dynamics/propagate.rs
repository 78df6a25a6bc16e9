//! Time stepping shared by the covariance and trajectory integrators.

use faer::Mat;

use crate::error::{ensure, Error, Result};
use crate::probe::{Block, Generators, ProbeSchedule, Segment};

/// Smallest number of RK4 steps across one pulse.
pub const MIN_STEPS_PER_PULSE: usize = 20;
/// dt · max rate must stay below this.
pub const STEP_BOUND: f64 = 0.01;

#[derive(Clone, Copy, Debug)]
pub enum Piece {
    /// Probe off: exact rotation from t0 to t1.
    Free { t0: f64, t1: f64 },
    /// Probe on: `steps` RK4 steps of equal size.
    Active {
        t0: f64,
        t1: f64,
        steps: usize,
        segment: Segment,
    },
    /// Output sample at t.
    Sample { t: f64 },
}

pub fn max_step(gen: &Generators) -> Result<f64> {
    let rate = gen.max_rate()?;
    Ok(if rate > 0.0 { STEP_BOUND / rate } else { f64::INFINITY })
}

/// Breaks [0, t_end] into free and active pieces with samples interleaved.
pub fn plan(
    gen: &Generators,
    schedule: &ProbeSchedule,
    t_end: f64,
    dt: Option<f64>,
    samples: &[f64],
) -> Result<Vec<Piece>> {
    ensure(t_end > 0.0, "time.t_end", || format!("must be positive, got {t_end}"))?;
    schedule.validate()?;
    let bound = max_step(gen)?;
    let dt = match dt {
        Some(dt) if dt > bound * (1.0 + 1e-12) => {
            return Err(Error::invalid(
                "time.dt",
                format!("dt = {dt} exceeds the stability bound {bound:.3e} = 0.01 / max rate"),
            ))
        }
        Some(dt) if dt <= 0.0 => return Err(Error::invalid("time.dt", "must be positive")),
        Some(dt) => dt,
        None => bound,
    };
    let mut times: Vec<f64> = samples.iter().cloned().filter(|&t| t >= 0.0 && t <= t_end).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut out = Vec::new();
    let mut next = 0;
    let emit_until = |out: &mut Vec<Piece>, t: f64, next: &mut usize| {
        while *next < times.len() && times[*next] <= t {
            out.push(Piece::Sample { t: times[*next] });
            *next += 1;
        }
    };
    emit_until(&mut out, 0.0, &mut next);
    for (t0, t1, seg) in schedule.intervals(t_end) {
        let mut cuts: Vec<f64> = times[next..].iter().cloned().filter(|&t| t > t0 && t < t1).collect();
        cuts.push(t1);
        let mut a = t0;
        for b in cuts {
            match seg {
                Some(s) if s.from > 0.0 || s.to > 0.0 => {
                    let by_bound = ((b - a) / dt).ceil() as usize;
                    let by_pulse = (MIN_STEPS_PER_PULSE as f64 * (b - a) / (s.end - s.start)).ceil() as usize;
                    out.push(Piece::Active {
                        t0: a,
                        t1: b,
                        steps: by_bound.max(by_pulse).max(1),
                        segment: s,
                    });
                }
                _ => out.push(Piece::Free { t0: a, t1: b }),
            }
            emit_until(&mut out, b, &mut next);
            a = b;
        }
    }
    Ok(out)
}

/// exp(M t) for a 2×2 matrix.
pub fn expm2(m: Block, t: f64) -> Block {
    let (a, b, c, d) = (m[0][0] * t, m[0][1] * t, m[1][0] * t, m[1][1] * t);
    let h = 0.5 * (a + d);
    let det = (a - h) * (d - h) - b * c;
    let e = h.exp();
    let (ch, sh) = if det < 0.0 {
        let q = (-det).sqrt();
        (q.cosh(), if q > 1e-8 { q.sinh() / q } else { 1.0 + q * q / 6.0 })
    } else {
        let q = det.sqrt();
        (q.cos(), if q > 1e-8 { q.sin() / q } else { 1.0 - q * q / 6.0 })
    };
    [
        [e * (ch + sh * (a - h)), e * sh * b],
        [e * sh * c, e * (ch + sh * (d - h))],
    ]
}

/// Propagators exp(−D_i t) for each block.
pub fn propagators(blocks: &[Block], t: f64) -> Vec<Block> {
    blocks
        .iter()
        .map(|b| expm2([[-b[0][0], -b[0][1]], [-b[1][0], -b[1][1]]], t))
        .collect()
}

/// A ← S A Sᵀ for block-diagonal S.
pub fn congruence(a: &mut Mat<f64>, s: &[Block]) {
    let n = a.nrows();
    // rows
    for (i, b) in s.iter().enumerate() {
        for c in 0..n {
            let (u, v) = (a[(2 * i, c)], a[(2 * i + 1, c)]);
            a[(2 * i, c)] = b[0][0] * u + b[0][1] * v;
            a[(2 * i + 1, c)] = b[1][0] * u + b[1][1] * v;
        }
    }
    // columns
    for (j, b) in s.iter().enumerate() {
        for r in 0..n {
            let (u, v) = (a[(r, 2 * j)], a[(r, 2 * j + 1)]);
            a[(r, 2 * j)] = b[0][0] * u + b[0][1] * v;
            a[(r, 2 * j + 1)] = b[1][0] * u + b[1][1] * v;
        }
    }
}

/// r ← S r for block-diagonal S.
pub fn apply_blocks(r: &mut [f64], s: &[Block]) {
    for (i, b) in s.iter().enumerate() {
        let (u, v) = (r[2 * i], r[2 * i + 1]);
        r[2 * i] = b[0][0] * u + b[0][1] * v;
        r[2 * i + 1] = b[1][0] * u + b[1][1] * v;
    }
}

/// Columns x_0, x_1, … of A as an n × m matrix.
pub fn x_columns(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols() / 2, |r, j| a[(r, 2 * j)])
}

/// Ȧ = s E − D A − A Dᵀ − s A MMᵀ A.
pub fn riccati_rhs(a: &Mat<f64>, gen: &Generators, s: f64) -> Mat<f64> {
    let n = a.nrows();
    let mut da = Mat::<f64>::zeros(n, n);
    for (i, b) in gen.drift.iter().enumerate() {
        for c in 0..n {
            let (u, v) = (a[(2 * i, c)], a[(2 * i + 1, c)]);
            da[(2 * i, c)] = b[0][0] * u + b[0][1] * v;
            da[(2 * i + 1, c)] = b[1][0] * u + b[1][1] * v;
        }
    }
    let mut out = Mat::from_fn(n, n, |i, j| -(da[(i, j)] + da[(j, i)]));
    if s > 0.0 {
        let ax = x_columns(a);
        let aka = &ax * &gen.k2 * ax.transpose();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] -= s * aka[(i, j)];
            }
        }
        for i in 0..n / 2 {
            for j in 0..n / 2 {
                out[(2 * i + 1, 2 * j + 1)] += s * gen.env[(i, j)];
            }
        }
    }
    out
}

fn axpy(a: &Mat<f64>, h: f64, k: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + h * k[(i, j)])
}

/// One RK4 step of the Riccati equation over [t, t + h] within `seg`.
pub fn rk4_step(a: &mut Mat<f64>, gen: &Generators, seg: &Segment, t: f64, h: f64) {
    let (s0, s1, s2) = (seg.at(t), seg.at(t + 0.5 * h), seg.at(t + h));
    let k1 = riccati_rhs(a, gen, s0);
    let k2 = riccati_rhs(&axpy(a, 0.5 * h, &k1), gen, s1);
    let k3 = riccati_rhs(&axpy(a, 0.5 * h, &k2), gen, s1);
    let k4 = riccati_rhs(&axpy(a, h, &k3), gen, s2);
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] += h / 6.0 * (k1[(i, j)] + 2.0 * k2[(i, j)] + 2.0 * k3[(i, j)] + k4[(i, j)]);
        }
    }
    crate::linalg::symmetrize(a);
}
