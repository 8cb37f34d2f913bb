//! CSV and JSON persistence. Reals are written with 17 significant digits so
//! that every value reads back to the same `f64`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nbmp_core::boundary::{Boundary, Gamma0};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Lossless decimal form of a real: `d.dddddddddddddddde±x`, `inf`, `-inf` or `NaN`.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("`{s}` is not a real number"))
}

/// In-memory CSV table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    /// Column `name` parsed as reals.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column `{name}`"))?;
        self.rows.iter().map(|r| parse_real(&r[i])).collect()
    }
}

/// `t,gamma` table. A leading `0,-inf` row encodes γ₀ = −∞; a leading `0,v`
/// row a finite γ₀ different from γ(t₁); without it γ₀ = γ(t₁).
pub fn boundary_table(b: &Boundary<f64>) -> Table {
    let mut t = Table::new(&["t", "gamma"]);
    match b.gamma0() {
        Gamma0::NoConstraint => t.push(vec![fmt_real(0.0), "-inf".into()]),
        Gamma0::Level(v) if v != b.values()[0] => t.push(vec![fmt_real(0.0), fmt_real(v)]),
        Gamma0::Level(_) => {}
    }
    for (ti, g) in b.times().iter().zip(b.values()) {
        t.push(vec![fmt_real(*ti), fmt_real(*g)]);
    }
    t
}

pub fn write_boundary(b: &Boundary<f64>, path: &Path) -> Result<()> {
    boundary_table(b).write(path)
}

pub fn read_boundary(path: &Path) -> Result<Boundary<f64>> {
    let t = Table::read(path)?;
    if t.header != ["t", "gamma"] {
        bail!("{}: expected header `t,gamma`", path.display());
    }
    let ts = t.column("t")?;
    let gs = t.column("gamma")?;
    if ts.is_empty() {
        bail!("{}: empty boundary file", path.display());
    }
    let (gamma0, start) = if ts[0] == 0.0 {
        let g0 = if gs[0] == f64::NEG_INFINITY { Gamma0::NoConstraint } else { Gamma0::Level(gs[0]) };
        (g0, 1)
    } else {
        (Gamma0::Level(gs[0]), 0)
    };
    Boundary::new(ts[start..].to_vec(), gs[start..].to_vec(), gamma0)
        .with_context(|| format!("{}: invalid boundary", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub package_version: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub passed: bool,
    /// Payload files relative to the output directory.
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("invalid JSON in {}", path.display()))
}

/// Collects written payload files under `root` for the manifest.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn table(&mut self, rel: &str, t: &Table) -> Result<()> {
        let p = self.path(rel)?;
        t.write(&p)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, v: &T) -> Result<()> {
        let p = self.path(rel)?;
        write_json(v, &p)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(p)
    }

    pub fn into_files(mut self) -> (PathBuf, Vec<String>) {
        self.files.sort();
        (self.root, self.files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, 1e-300, 5e-324, f64::MAX, -2.5, f64::INFINITY, f64::NEG_INFINITY] {
            let s = fmt_real(x);
            let y = parse_real(&s).unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
            assert_eq!(fmt_real(y), s);
        }
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn boundary_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            Boundary::new(vec![0.1, 0.2], vec![0.3, 1.0 / 3.0], Gamma0::NoConstraint).unwrap(),
            Boundary::new(vec![0.1, 0.2], vec![0.3, 0.4], Gamma0::Level(0.3)).unwrap(),
            Boundary::new(vec![0.1, 0.2], vec![0.3, 0.4], Gamma0::Level(-1.0)).unwrap(),
        ];
        for (i, b) in cases.iter().enumerate() {
            let p = dir.path().join(format!("b{i}.csv"));
            write_boundary(b, &p).unwrap();
            let back = read_boundary(&p).unwrap();
            assert_eq!(&back, b);
            let p2 = dir.path().join(format!("c{i}.csv"));
            write_boundary(&back, &p2).unwrap();
            assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
        }
        let text = std::fs::read_to_string(dir.path().join("b0.csv")).unwrap();
        assert!(text.starts_with("t,gamma\n0.0000000000000000e0,-inf\n"));
    }

    #[test]
    fn bad_boundary_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "x,y\n1,2\n").unwrap();
        assert!(read_boundary(&p).is_err());
        std::fs::write(&p, "t,gamma\n0.2,0\n0.1,0\n").unwrap();
        assert!(read_boundary(&p).is_err());
    }
}
