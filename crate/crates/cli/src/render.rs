//! Turns run results into named tables.

use becprobe::dynamics::EnsembleSummary;
use becprobe::observables::CorrelationField;
use serde_json::{json, Value};

use crate::experiment::{CouplingsRun, CovarianceRun, EnsembleRun, Outcome, RegionsRun};
use crate::output::Table;

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl Outcome {
    pub fn tables(&self) -> Vec<Table> {
        match self {
            Outcome::Couplings(r) => couplings_tables(r),
            Outcome::Covariance(r) => covariance_tables(r),
            Outcome::Ensemble(r) => ensemble_tables(r),
            Outcome::Regions(r) => regions_tables(r),
        }
    }

    /// Headline scalars for the manifest.
    pub fn summary(&self) -> Value {
        match self {
            Outcome::Couplings(r) => json!({
                "interaction": r.interaction,
                "chemical_potential": r.mu,
                "omega_0": r.omega0,
                "kappa2": r.kappa2,
                "max_rate": r.max_rate,
            }),
            Outcome::Covariance(r) => {
                let mut v = json!({
                    "t_end": r.t_end,
                    "kappa2": r.kappa2,
                    "min_symplectic_eigenvalue": r.nu_min.iter().cloned().fold(f64::INFINITY, f64::min),
                    "max_purity": r.purity_total.iter().cloned().fold(0.0, f64::max),
                });
                let neg: Vec<Value> = r
                    .negativity
                    .iter()
                    .map(|n| json!({"pair": n.pair, "beta": n.beta, "e_qnd": n.e_qnd, "final": n.values.last()}))
                    .collect();
                v["negativity"] = Value::from(neg);
                if let Some(e) = &r.extrema {
                    v["extrema"] = json!({
                        "mode": e.mode,
                        "t_min": e.min.t, "var_x_min": e.min.var_x,
                        "t_max": e.max.t, "var_x_max": e.max.var_x,
                    });
                }
                v
            }
            Outcome::Ensemble(r) => json!({
                "trajectories": r.damped.n_traj,
                "gains": r.gains,
                "compared_undamped": r.undamped.is_some(),
            }),
            Outcome::Regions(r) => json!({
                "t_end": r.t_end,
                "min_symplectic_eigenvalue": r.nu_min,
            }),
        }
    }
}

fn couplings_tables(r: &CouplingsRun) -> Vec<Table> {
    let m = r.labels.len();
    let mut spectrum = Table::new(
        "spectrum",
        cols(&["j", "omega", "kappa2_bar_jj", "kappa2_bar_j_j2", "k2_jj"]),
    )
    .meta("interaction", r.interaction)
    .meta("chemical_potential", r.mu)
    .meta("kappa2", r.kappa2);
    for i in 0..m {
        // κ̄²_{j,j+2} when j + 2 is in the basis
        let off = r
            .labels
            .iter()
            .position(|&l| l == r.labels[i] + 2)
            .map_or(f64::NAN, |k| r.kappa2_bar[(i, k)]);
        spectrum.push(vec![
            r.labels[i] as f64,
            r.frequencies[i],
            r.kappa2_bar[(i, i)],
            off,
            r.k2[(i, i)],
        ]);
    }
    let mut pairs = Table::new("couplings", cols(&["j", "k", "kappa2_bar", "k2"]));
    for i in 0..m {
        for k in 0..m {
            pairs.push(vec![r.labels[i] as f64, r.labels[k] as f64, r.kappa2_bar[(i, k)], r.k2[(i, k)]]);
        }
    }
    vec![spectrum, pairs]
}

/// The smooth part of 𝒩; the δ channel is named in the metadata, not added.
fn field_table(name: &str, f: &CorrelationField, t: f64) -> Table {
    Table::matrix(name, f.grid.points(), &f.values)
        .meta("t", t)
        .meta("delta_channel", format!("{:?}", f.channel).to_lowercase())
}

fn covariance_tables(r: &CovarianceRun) -> Vec<Table> {
    let mut names = vec!["t".to_string(), "strength".to_string()];
    for s in &r.modes {
        for q in ["var_x", "var_p", "covar_xp", "var_min", "var_max"] {
            names.push(format!("{q}_{}", s.label));
        }
    }
    let mut moments = Table::new("moments", names).meta("kappa2", r.kappa2);
    for (k, &t) in r.times.iter().enumerate() {
        let mut row = vec![t, r.strength[k]];
        for s in &r.modes {
            row.extend([s.var_x[k], s.var_p[k], s.covar_xp[k], s.block_min[k], s.block_max[k]]);
        }
        moments.push(row);
    }
    let mut phys = Table::new("physicality", cols(&["t", "min_symplectic_eigenvalue", "purity"]));
    for (k, &t) in r.times.iter().enumerate() {
        phys.push(vec![t, r.nu_min[k], r.purity_total[k]]);
    }
    let mut out = vec![moments, phys];
    if !r.purity.is_empty() {
        let mut p = Table::new("purity", cols(&["t", "m", "purity"]));
        for pt in &r.purity {
            p.push(vec![pt.t, pt.m as f64, pt.value]);
        }
        out.push(p);
    }
    if !r.negativity.is_empty() {
        let mut names = vec!["t".to_string()];
        for n in &r.negativity {
            names.push(format!("e_{}_{}", n.pair[0], n.pair[1]));
        }
        let mut t = Table::new("negativity", names);
        for n in &r.negativity {
            t = t
                .meta(&format!("beta_{}_{}", n.pair[0], n.pair[1]), n.beta)
                .meta(&format!("e_qnd_{}_{}", n.pair[0], n.pair[1]), n.e_qnd);
        }
        for (k, &time) in r.times.iter().enumerate() {
            let mut row = vec![time];
            row.extend(r.negativity.iter().map(|n| n.values[k]));
            t.push(row);
        }
        out.push(t);
    }
    if let Some(e) = &r.extrema {
        for (name, x) in [("density_min", &e.min), ("density_max", &e.max)] {
            out.push(field_table(name, &x.field, x.t).meta("var_x", x.var_x));
            let n = x.field.grid.len();
            out.push(
                Table::triplets(format!("{name}_triplets"), x.field.grid.points(), &x.field.values, n.div_ceil(256))
                    .meta("t", x.t),
            );
        }
        if let Some(mf) = &e.momentum {
            out.push(Table::matrix("momentum_min", &mf.k, &mf.values).meta("t", e.min.t));
        }
    }
    for (t, a) in &r.snapshots {
        let axis: Vec<f64> = (0..a.nrows()).map(|i| i as f64).collect();
        out.push(Table::matrix(format!("covariance_t{t:.6}"), &axis, a).meta("t", t));
    }
    let axis: Vec<f64> = (0..r.final_state.nrows()).map(|i| i as f64).collect();
    out.push(
        Table::matrix("covariance_final", &axis, &r.final_state)
            .meta("t", r.t_end)
            .meta("labels", format!("{:?}", r.labels)),
    );
    let axis: Vec<f64> = r.labels.iter().map(|&l| l as f64).collect();
    out.push(Table::matrix("kappa2_bar", &axis, &r.kappa2_bar));
    out
}

fn sigma_columns(prefix: &str, r: &EnsembleRun, names: &mut Vec<String>) {
    for &i in &r.observed {
        let j = r.labels[i];
        for q in ["sigma2_x", "sigma2_x_se", "sigma2_p", "energy", "cond_var_x"] {
            names.push(format!("{prefix}{q}_{j}"));
        }
    }
}

fn sigma_values(s: &EnsembleSummary, r: &EnsembleRun, k: usize, row: &mut Vec<f64>) {
    let sample = &s.samples[k];
    // the ensemble tracks the observed modes in order
    for (q, &i) in r.observed.iter().enumerate() {
        row.extend([
            sample.a_ens[(2 * q, 2 * q)],
            sample.a_ens_se[(2 * q, 2 * q)],
            sample.a_ens[(2 * q + 1, 2 * q + 1)],
            sample.mean_energy[q],
            sample.a_cond[(2 * i, 2 * i)],
        ]);
    }
}

fn ensemble_tables(r: &EnsembleRun) -> Vec<Table> {
    let mut names = cols(&["t", "strength"]);
    for &i in &r.observed {
        names.push(format!("diffusion_{}", r.labels[i]));
    }
    sigma_columns("", r, &mut names);
    if r.undamped.is_some() {
        sigma_columns("undamped_", r, &mut names);
    }
    let mut sigma = Table::new("sigma2", names).meta("trajectories", r.damped.n_traj);
    for (k, &t) in r.times.iter().enumerate() {
        let mut row = vec![t, r.strength[k]];
        row.extend(r.kappa2_diag.iter().map(|kb| 0.5 * kb * r.integrated[k]));
        sigma_values(&r.damped, r, k, &mut row);
        if let Some(u) = &r.undamped {
            sigma_values(u, r, k, &mut row);
        }
        sigma.push(row);
    }
    let mut names = cols(&["damped", "trajectory", "t"]);
    for &i in &r.observed {
        names.push(format!("x_{}", r.labels[i]));
        names.push(format!("p_{}", r.labels[i]));
    }
    let mut ex = Table::new("examples", names);
    let runs: Vec<(f64, &EnsembleSummary)> = std::iter::once((1.0, &r.damped))
        .chain(r.undamped.as_ref().map(|u| (0.0, u)))
        .collect();
    for (flag, s) in runs {
        for (n, traj) in s.examples.iter().enumerate() {
            for (k, moments) in traj.iter().enumerate() {
                let mut row = vec![flag, n as f64, r.times[k]];
                row.extend(moments);
                ex.push(row);
            }
        }
    }
    let mut out = vec![sigma, ex];
    if let Some(tr) = &r.record {
        let mut rec = Table::new("record", cols(&["t", "channel", "increment"]));
        for inc in &tr.records {
            rec.push(vec![inc.t, inc.channel as f64, inc.increment]);
        }
        out.push(rec);
    }
    out
}

fn regions_tables(r: &RegionsRun) -> Vec<Table> {
    let mut t = Table::new(
        "regions",
        cols(&[
            "l_g",
            "kappa2",
            "n2_0",
            "var_n2_unprobed",
            "covar_n1_n3_unprobed",
            "var_n2",
            "covar_n1_n3",
        ]),
    )
    .meta("t", r.t_end)
    .meta("normalization", "var by N2_0, covar by N0");
    for p in &r.points {
        t.push(vec![
            p.width,
            p.kappa2,
            p.probed.mean_n2,
            p.unprobed.var_n2_normalized,
            p.unprobed.covar_n1_n3_normalized,
            p.probed.var_n2_normalized,
            p.probed.covar_n1_n3_normalized,
        ]);
    }
    let mut out = vec![t];
    if !r.traces.is_empty() {
        let mut tr = Table::new("region_trace", cols(&["l_g", "t", "var_n2", "covar_n1_n3"]));
        for trace in &r.traces {
            for (k, &time) in trace.times.iter().enumerate() {
                let s = &trace.stats[k];
                tr.push(vec![trace.width, time, s.var_n2_normalized, s.covar_n1_n3_normalized]);
            }
        }
        out.push(tr);
    }
    out
}
