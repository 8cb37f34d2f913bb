//! Experiment configuration: defaults, file loading, `key=value` overrides
//! and the content hash recorded in every manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nbmp_core::boundary::{uniform_grid, StepPolicy};
use nbmp_core::coupling::Side;
use nbmp_core::drivers::{DriverSpec, InitialLaw};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SolveBoundary,
    RunNbmp,
    RunGbmp,
    RunCoupled,
    Verify,
    ConvergenceStudy,
    Bounds,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::SolveBoundary => "solve-boundary",
            Kind::RunNbmp => "run-nbmp",
            Kind::RunGbmp => "run-gbmp",
            Kind::RunCoupled => "run-coupled",
            Kind::Verify => "verify",
            Kind::ConvergenceStudy => "convergence-study",
            Kind::Bounds => "bounds",
        }
    }
}

/// Where the boundary γ comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySource {
    /// `γ ≡ level` on the solver grid.
    Constant { level: f64 },
    /// Monte Carlo inverse first-passage solve on the solver grid.
    Solve,
    /// A `t,gamma` CSV written by `solve-boundary`.
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideChoice {
    Upper,
    Lower,
    Both,
}

impl SideChoice {
    pub fn sides(self) -> Vec<Side> {
        match self {
            SideChoice::Upper => vec![Side::Upper],
            SideChoice::Lower => vec![Side::Lower],
            SideChoice::Both => vec![Side::Upper, Side::Lower],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub driver: DriverSpec<f64>,
    pub initial: InitialLaw<f64>,
    pub boundary: BoundarySource,
    /// N for the N-BMP and couplings, n for the γ-BMP.
    pub n: usize,
    /// Population sizes of a convergence study.
    pub n_list: Vec<usize>,
    /// Barrier margin; `None` uses `N^{−β}/2`.
    pub delta: Option<f64>,
    pub beta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub side: SideChoice,
    pub horizon: f64,
    /// Start of the window on which minima are compared with γ.
    pub t0: f64,
    /// Evaluation time of the bound formulas.
    pub t: f64,
    /// Times at which empirical c.d.f.s are compared with the oracle.
    pub probe_times: Vec<f64>,
    pub solver_step: f64,
    pub obs_step: f64,
    pub dt_max: f64,
    pub bridge: bool,
    pub ou_substeps: u32,
    pub replicas: usize,
    pub seed: u64,
    pub oracle_paths: usize,
    pub solver_paths: usize,
    /// Record per-event logs in `run-nbmp`.
    pub events: bool,
    pub level: Level,
    /// Output directory; not part of the config hash.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mu = std::f64::consts::SQRT_2;
        Self {
            kind: Kind::RunNbmp,
            driver: DriverSpec::BrownianWithDrift { drift: -mu, sigma: 1.0 },
            initial: InitialLaw::QsdDriftedBm { mu },
            boundary: BoundarySource::Constant { level: 0.0 },
            n: 1000,
            n_list: vec![250, 1000, 4000],
            delta: None,
            beta: 0.25,
            alpha: 0.25,
            eta: 0.1,
            side: SideChoice::Both,
            horizon: 1.0,
            t0: 0.2,
            t: 1.0,
            probe_times: vec![0.5, 1.0],
            solver_step: 0.01,
            obs_step: 0.02,
            dt_max: 0.01,
            bridge: true,
            ou_substeps: 1,
            replicas: 1,
            seed: 1,
            oracle_paths: 1_000_000,
            solver_paths: 100_000,
            events: true,
            level: Level::Fast,
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a `.json` or `.toml` file; missing fields take their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .with_context(|| format!("invalid TOML config {}", path.display()))?,
            _ => serde_json::from_str(&text)
                .with_context(|| format!("invalid JSON config {}", path.display()))?,
        };
        Ok(cfg)
    }

    /// Applies `key=value` overrides. Keys are dotted paths
    /// (`driver.drift`); values are parsed as JSON, falling back to a string.
    pub fn with_overrides<S: AsRef<str>>(self, sets: &[S]) -> Result<Self> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut v = serde_json::to_value(&self)?;
        for s in sets {
            let s = s.as_ref();
            let Some((key, raw)) = s.split_once('=') else {
                bail!("override `{s}` is not of the form key=value");
            };
            let val: Value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, key.trim(), val)?;
        }
        serde_json::from_value(v).context("override produced an invalid configuration")
    }

    pub fn validate(&self) -> Result<()> {
        self.driver.validate()?;
        self.initial.validate()?;
        self.policy().validate()?;
        let positive = [
            ("horizon", self.horizon),
            ("solver_step", self.solver_step),
            ("obs_step", self.obs_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("`{name}` must be a positive number, got {v}");
            }
        }
        if !(self.t0 >= 0.0 && self.t0 <= self.horizon) {
            bail!("`t0` must lie in [0, horizon]");
        }
        let probes_bad = self.probe_times.iter().any(|t| !(*t > 0.0 && *t <= self.horizon))
            || self.probe_times.windows(2).any(|w| w[0] >= w[1]);
        if self.kind == Kind::ConvergenceStudy && probes_bad {
            bail!("`probe_times` must be increasing within (0, horizon]");
        }
        if self.replicas == 0 {
            bail!("`replicas` must be at least 1");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 0.5) {
                bail!("`delta` must lie in (0, 1/2)");
            }
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            bail!("`n_list` must be strictly increasing");
        }
        match self.kind {
            Kind::RunNbmp if self.n == 0 => bail!("`n` must be at least 1"),
            Kind::RunCoupled if self.n < 2 => bail!("couplings need `n` >= 2"),
            Kind::ConvergenceStudy if self.n_list.is_empty() => bail!("`n_list` is empty"),
            _ => Ok(()),
        }
    }

    pub fn policy(&self) -> StepPolicy<f64> {
        StepPolicy { dt_max: self.dt_max, bridge: self.bridge, ou_substeps: self.ou_substeps }
    }

    /// `δ` for population size `n`.
    pub fn delta_for(&self, n: usize) -> f64 {
        self.delta.unwrap_or_else(|| nbmp_core::stats::delta_schedule(n as u64, self.beta))
    }

    /// `0, obs_step, 2·obs_step, …, horizon`.
    pub fn obs_grid(&self) -> Vec<f64> {
        let mut g = vec![0.0];
        g.extend(uniform_grid(self.obs_step, self.horizon));
        g
    }

    pub fn solver_grid(&self) -> Vec<f64> {
        uniform_grid(self.solver_step, self.horizon)
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn set_path(root: &mut Value, key: &str, val: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            bail!("override key `{key}`: `{part}` is not inside an object");
        };
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), val);
            return Ok(());
        }
        cur = map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), ExperimentConfig::default().hash());
        assert_eq!(c.hash().len(), 64);
        let mut d = c.clone();
        d.output = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 2;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn overrides() {
        let c = ExperimentConfig::default()
            .with_overrides(&["n=7", "kind=bounds", "driver.drift=-1.5", "delta=0.1"])
            .unwrap();
        assert_eq!(c.n, 7);
        assert_eq!(c.kind, Kind::Bounds);
        assert_eq!(c.delta, Some(0.1));
        assert_eq!(c.driver, DriverSpec::BrownianWithDrift { drift: -1.5, sigma: 1.0 });
        let c = ExperimentConfig::default()
            .with_overrides(&[r#"boundary={"source":"solve"}"#])
            .unwrap();
        assert_eq!(c.boundary, BoundarySource::Solve);
        assert!(ExperimentConfig::default().with_overrides(&["nonsense=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(&["n"]).is_err());
    }

    #[test]
    fn toml_and_json_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "kind = \"run-gbmp\"\nn = 12\n[driver]\nkind = \"ornstein-uhlenbeck\"\ntheta = 1.0\nsigma = 0.5\nmean = 0.0\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(&p).unwrap();
        assert_eq!(c.kind, Kind::RunGbmp);
        assert_eq!(c.n, 12);
        let j = dir.path().join("c.json");
        std::fs::write(&j, serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&j).unwrap(), c);
    }

    #[test]
    fn validation_messages() {
        let c = ExperimentConfig { horizon: -1.0, ..ExperimentConfig::default() };
        assert!(c.validate().unwrap_err().to_string().contains("horizon"));
        let c = ExperimentConfig { delta: Some(0.7), ..ExperimentConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn grids() {
        let c = ExperimentConfig::default();
        let g = c.obs_grid();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(g.len(), 51);
        assert!((c.delta_for(10_000) - 0.05).abs() < 1e-15);
    }
}
