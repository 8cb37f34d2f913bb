//! `run_experiment`: one configuration in, one output directory out.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use nbmp_core::boundary::{solve_boundary_mc, Boundary, SolverOptions};
use nbmp_core::coupling::{run_coupled, CoupledSim};
use nbmp_core::gbmp::GbmpSim;
use nbmp_core::nbmp::{min_trajectory, run_nbmp};
use nbmp_core::stats::{bound_formulas, BoundInputs};
use nbmp_core::RngStream;
use serde::Serialize;

use crate::config::{BoundarySource, ExperimentConfig, Kind};
use crate::criteria::{self, Criterion};
use crate::io::{boundary_table, fmt_real, Manifest, Outputs, Table};
use crate::streams;
use crate::study::convergence_study;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "NBMP_LAB_OUT";

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub passed: bool,
    /// Payload files, relative to `dir`.
    pub files: Vec<String>,
    /// Verification lines (verify runs only).
    pub criteria: Vec<Criterion>,
}

/// `output` from the config, else `$NBMP_LAB_OUT/<kind>-<hash prefix>`,
/// else `nbmp-lab-out/<kind>-<hash prefix>`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = &cfg.output {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| "nbmp-lab-out".into());
    root.join(format!("{}-{}", cfg.kind.as_str(), &cfg.hash()[..12]))
}

/// Builds γ from the configured source.
pub fn resolve_boundary(cfg: &ExperimentConfig, root: &RngStream) -> Result<Boundary<f64>> {
    Ok(match &cfg.boundary {
        BoundarySource::Constant { level } => Boundary::constant(*level, cfg.horizon, cfg.solver_step)?,
        BoundarySource::Solve => {
            solve_boundary_mc(
                &cfg.driver,
                &cfg.initial,
                &cfg.solver_grid(),
                cfg.solver_paths,
                SolverOptions { bridge: cfg.bridge },
                &root.child(streams::BOUNDARY),
            )?
            .boundary
        }
        BoundarySource::File { path } => crate::io::read_boundary(path)?,
    })
}

fn replica_dir(r: usize) -> String {
    format!("replica-{r:04}")
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Outputs::create(output_dir(cfg))?;
    let root = RngStream::new(cfg.seed, 0);
    let mut passed = true;
    let mut crits = Vec::new();

    match cfg.kind {
        Kind::SolveBoundary => {
            let s = solve_boundary_mc(
                &cfg.driver,
                &cfg.initial,
                &cfg.solver_grid(),
                cfg.solver_paths,
                SolverOptions { bridge: cfg.bridge },
                &root.child(streams::BOUNDARY),
            )?;
            out.table("boundary.csv", &boundary_table(&s.boundary))?;
            let mut t = Table::new(&["t", "survivors", "paths"]);
            for (ti, n) in s.boundary.times().iter().zip(&s.survivors) {
                t.push(vec![fmt_real(*ti), n.to_string(), s.paths.to_string()]);
            }
            out.table("survivors.csv", &t)?;
        }
        Kind::RunNbmp => {
            let obs = cfg.obs_grid();
            for r in 0..cfg.replicas {
                let st = root.child(streams::REPLICAS).child(r as u64);
                let run = run_nbmp(cfg.n, &cfg.driver, &cfg.initial, cfg.horizon, &obs, cfg.events, &st)?;
                let dir = replica_dir(r);
                let mut snaps = Table::new(&["t", "index", "position"]);
                for s in &run.snapshots {
                    for (i, x) in s.positions.iter().enumerate() {
                        snaps.push(vec![fmt_real(s.time), i.to_string(), fmt_real(*x)]);
                    }
                }
                out.table(&format!("{dir}/snapshots.csv"), &snaps)?;
                let mut mins = Table::new(&["t", "min"]);
                for (t, m) in min_trajectory(&run.snapshots) {
                    mins.push(vec![fmt_real(t), fmt_real(m)]);
                }
                out.table(&format!("{dir}/minima.csv"), &mins)?;
                if cfg.events {
                    let mut ev = Table::new(&["event_time", "branched_index", "removed_index"]);
                    for e in &run.events {
                        ev.push(vec![fmt_real(e.time), e.branched.to_string(), e.removed.to_string()]);
                    }
                    out.table(&format!("{dir}/events.csv"), &ev)?;
                }
            }
        }
        Kind::RunGbmp => {
            let b = resolve_boundary(cfg, &root)?;
            let sim = GbmpSim::new(&cfg.driver, &cfg.initial, Some(&b)).with_policy(cfg.policy());
            let obs = cfg.obs_grid();
            for r in 0..cfg.replicas {
                let st = root.child(streams::REPLICAS).child(r as u64);
                let run = sim.run(cfg.n, cfg.horizon, &obs, false, &st)?;
                let dir = replica_dir(r);
                let mut snaps = Table::new(&["t", "family", "position"]);
                let mut sizes = Table::new(&["t", "family", "count"]);
                for s in &run.snapshots {
                    for p in &s.particles {
                        snaps.push(vec![fmt_real(s.time), p.family.to_string(), fmt_real(p.position)]);
                    }
                    for (f, c) in s.chi_all(cfg.n, f64::NEG_INFINITY).iter().enumerate() {
                        sizes.push(vec![fmt_real(s.time), f.to_string(), c.to_string()]);
                    }
                }
                out.table(&format!("{dir}/snapshots.csv"), &snaps)?;
                out.table(&format!("{dir}/sizes.csv"), &sizes)?;
            }
        }
        Kind::RunCoupled => {
            let b = resolve_boundary(cfg, &root)?;
            let sim = CoupledSim { driver: &cfg.driver, mu0: &cfg.initial, boundary: &b, policy: cfg.policy() };
            let obs = cfg.obs_grid();
            let delta = cfg.delta_for(cfg.n);
            for r in 0..cfg.replicas {
                let dir = replica_dir(r);
                let mut certs = Table::new(&["t", "side", "dominance_ok", "gamma_ok", "decoupled"]);
                for (si, side) in cfg.side.sides().into_iter().enumerate() {
                    let st = root.child(streams::REPLICAS).child(r as u64).child(si as u64);
                    let run = run_coupled(sim, cfg.n, delta, side, cfg.horizon, &obs, &st)?;
                    passed &= run.violations() == 0;
                    for c in &run.certificates {
                        certs.push(vec![
                            fmt_real(c.time),
                            side.as_str().into(),
                            c.dominance_ok.to_string(),
                            c.gamma_ok.to_string(),
                            c.decoupled.to_string(),
                        ]);
                    }
                    let mut sizes = Table::new(&["t", "size"]);
                    for (t, s) in &run.barrier_sizes {
                        sizes.push(vec![fmt_real(*t), s.to_string()]);
                    }
                    out.table(&format!("{dir}/barrier_sizes_{}.csv", side.as_str()), &sizes)?;
                    let mut xs = Table::new(&["t", "index", "position"]);
                    let mut bs = Table::new(&["t", "index", "position"]);
                    for s in &run.snapshots {
                        for (i, x) in s.nbmp.iter().enumerate() {
                            xs.push(vec![fmt_real(s.time), i.to_string(), fmt_real(*x)]);
                        }
                        for (i, x) in s.barrier.iter().enumerate() {
                            bs.push(vec![fmt_real(s.time), i.to_string(), fmt_real(*x)]);
                        }
                    }
                    out.table(&format!("{dir}/nbmp_{}.csv", side.as_str()), &xs)?;
                    out.table(&format!("{dir}/barrier_{}.csv", side.as_str()), &bs)?;
                }
                out.table(&format!("{dir}/certificates.csv"), &certs)?;
            }
        }
        Kind::ConvergenceStudy => {
            let b = resolve_boundary(cfg, &root)?;
            let study = convergence_study(cfg, &b, &root)?;
            out.table("convergence.csv", &study.table())?;
            out.table("slopes.csv", &study.slope_table())?;
        }
        Kind::Bounds => {
            let inputs = BoundInputs {
                n: cfg.n as u64,
                big_n: cfg.n as u64,
                eta: cfg.eta,
                delta: cfg.delta_for(cfg.n),
                alpha: cfg.alpha,
                beta: cfg.beta,
                t: cfg.t,
                horizon: cfg.horizon,
            };
            #[derive(Serialize)]
            struct Dump<'a> {
                inputs: &'a BoundInputs<f64>,
                report: nbmp_core::stats::BoundReport<f64>,
            }
            let report = bound_formulas(&inputs)?;
            out.json("bounds.json", &Dump { inputs: &inputs, report })?;
        }
        Kind::Verify => {
            let scratch = out.root().join("scratch");
            crits = criteria::verify(cfg.level, &scratch)?;
            passed = crits.iter().all(|c| c.pass);
            out.table("verify.csv", &criteria::report_table(&crits))?;
        }
    }

    let (dir, files) = out.into_files();
    let manifest = Manifest {
        kind: cfg.kind.as_str().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        package_version: env!("CARGO_PKG_VERSION").into(),
        threads: rayon::current_num_threads(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        passed,
        files: files.clone(),
        config: cfg.clone(),
    };
    crate::io::write_json(&manifest, &dir.join("manifest.json"))
        .with_context(|| format!("writing manifest in {}", dir.display()))?;
    Ok(RunOutcome { dir, passed, files, criteria: crits })
}
