//! Convergence of the N-BMP towards the killed-process law as N grows.

use anyhow::Result;
use nbmp_core::boundary::{conditional_law_oracle, Boundary, OracleCdf};
use nbmp_core::coupling::{gamma_event_holds, Side};
use nbmp_core::gbmp::GbmpSim;
use nbmp_core::nbmp::{empirical_cdf, run_nbmp};
use nbmp_core::stats::{median, ols_slope, quantile, sup_norm_distance};
use nbmp_core::RngStream;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::io::{fmt_real, Table};
use crate::streams;

/// Minimum number of oracle survivors accepted at each probe time.
pub const ORACLE_MIN_SURVIVORS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub t: f64,
    pub n: usize,
    pub median_d: f64,
    pub iqr_d: f64,
    /// Median over replicas of `sup_{t0 ≤ s ≤ T} |m^N_s − γ_s|` on the observation grid.
    pub median_min_dev: f64,
    pub gamma_fail_upper: f64,
    pub gamma_fail_lower: f64,
    pub replicas: usize,
    pub d_values: Vec<f64>,
    pub min_devs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Study {
    pub rows: Vec<StudyRow>,
    /// `(t, slope of ln median D_N against ln N)`.
    pub slopes: Vec<(f64, f64)>,
    pub oracle_survivors: Vec<(f64, usize)>,
}

impl Study {
    pub fn rows_at(&self, t: f64) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.t == t).collect()
    }

    pub fn table(&self) -> Table {
        let mut tab = Table::new(&[
            "t",
            "N",
            "median_d",
            "iqr_d",
            "median_min_dev",
            "gamma_fail_upper",
            "gamma_fail_lower",
            "replicas",
        ]);
        for r in &self.rows {
            tab.push(vec![
                fmt_real(r.t),
                r.n.to_string(),
                fmt_real(r.median_d),
                fmt_real(r.iqr_d),
                fmt_real(r.median_min_dev),
                fmt_real(r.gamma_fail_upper),
                fmt_real(r.gamma_fail_lower),
                r.replicas.to_string(),
            ]);
        }
        tab
    }

    pub fn slope_table(&self) -> Table {
        let mut tab = Table::new(&["t", "slope"]);
        for (t, s) in &self.slopes {
            tab.push(vec![fmt_real(*t), fmt_real(*s)]);
        }
        tab
    }
}

/// Observation grid merged with the probe times; returns the grid and the
/// index of each probe time in it.
fn merged_times(cfg: &ExperimentConfig) -> (Vec<f64>, Vec<usize>) {
    let mut times = cfg.obs_grid();
    for &p in &cfg.probe_times {
        if !times.iter().any(|t| (t - p).abs() < 1e-12) {
            times.push(p);
        }
    }
    times.sort_by(f64::total_cmp);
    let idx = cfg
        .probe_times
        .iter()
        .map(|p| times.iter().position(|t| (t - p).abs() < 1e-12).expect("probe merged"))
        .collect();
    (times, idx)
}

/// Frequency over `replicas` barrier γ-BMPs with `⌈N(1+δ)⌉` / `⌊N(1−δ)⌋`
/// ancestors of a violation of Γ on `[0, horizon]`.
pub fn gamma_failure_frequency(
    cfg: &ExperimentConfig,
    boundary: &Boundary<f64>,
    n: usize,
    delta: f64,
    side: Side,
    replicas: usize,
    stream: &RngStream,
) -> Result<f64> {
    let sim = GbmpSim::new(&cfg.driver, &cfg.initial, Some(boundary)).with_policy(cfg.policy());
    let start = side.barrier_size(n, delta);
    let fails = (0..replicas)
        .map(|r| {
            let run = sim.run(start, cfg.horizon, &[], true, &stream.child(r as u64))?;
            Ok(!gamma_event_holds(&run.size_trajectory(), n, side, cfg.horizon))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(fails.iter().filter(|f| **f).count() as f64 / replicas as f64)
}

pub fn convergence_study(cfg: &ExperimentConfig, boundary: &Boundary<f64>, root: &RngStream) -> Result<Study> {
    let policy = cfg.policy();
    let oracle: Vec<OracleCdf<f64>> = conditional_law_oracle(
        &cfg.driver,
        &cfg.initial,
        boundary,
        &cfg.probe_times,
        cfg.oracle_paths,
        ORACLE_MIN_SURVIVORS,
        policy,
        &root.child(streams::ORACLE),
    )?;
    let (times, probe_idx) = merged_times(cfg);
    let window: Vec<(usize, f64)> = times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= cfg.t0 - 1e-12)
        .filter_map(|(i, t)| boundary.eval(*t).ok().flatten().map(|g| (i, g)))
        .collect();

    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let rep_stream = root.child(streams::REPLICAS).child(n as u64);
        let per_rep: Vec<(Vec<f64>, f64)> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let run = run_nbmp(n, &cfg.driver, &cfg.initial, cfg.horizon, &times, false, &rep_stream.child(r as u64))?;
                let ds = probe_idx
                    .iter()
                    .zip(&oracle)
                    .map(|(&j, o)| Ok(sup_norm_distance(&empirical_cdf(&run.snapshots[j])?, &o.cdf)))
                    .collect::<Result<Vec<f64>>>()?;
                let dev = window
                    .iter()
                    .map(|&(j, g)| (run.snapshots[j].min() - g).abs())
                    .fold(0.0, f64::max);
                Ok((ds, dev))
            })
            .collect::<Result<_>>()?;
        let delta = cfg.delta_for(n);
        let bar = root.child(streams::BARRIERS).child(n as u64);
        let fail_up = gamma_failure_frequency(cfg, boundary, n, delta, Side::Upper, cfg.replicas, &bar.child(0))?;
        let fail_lo = gamma_failure_frequency(cfg, boundary, n, delta, Side::Lower, cfg.replicas, &bar.child(1))?;
        let min_devs: Vec<f64> = per_rep.iter().map(|p| p.1).collect();
        let median_min_dev = median(&min_devs);
        for (k, &t) in cfg.probe_times.iter().enumerate() {
            let d: Vec<f64> = per_rep.iter().map(|p| p.0[k]).collect();
            rows.push(StudyRow {
                t,
                n,
                median_d: median(&d),
                iqr_d: quantile(&d, 0.75) - quantile(&d, 0.25),
                median_min_dev,
                gamma_fail_upper: fail_up,
                gamma_fail_lower: fail_lo,
                replicas: cfg.replicas,
                d_values: d,
                min_devs: min_devs.clone(),
            });
        }
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.n.cmp(&b.n)));
    let slopes = cfg
        .probe_times
        .iter()
        .map(|&t| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.t == t)
                .map(|r| ((r.n as f64).ln(), r.median_d.ln()))
                .unzip();
            (t, if xs.len() >= 2 { ols_slope(&xs, &ys) } else { f64::NAN })
        })
        .collect();
    let oracle_survivors = oracle.iter().map(|o| (o.time, o.survivors)).collect();
    Ok(Study { rows, slopes, oracle_survivors })
}
