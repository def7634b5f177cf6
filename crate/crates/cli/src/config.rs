//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Flag overrides use the same
//! syntax and are applied after the file, so they win.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use entropic::dynamics::Updater;
use entropic::jarzynski::{TrajectoryOptions, DEFAULT_THERM_SWEEPS};
use entropic::lattice::LatticeSpec;
use entropic::scan::StepConfig;
use entropic::schedule::{Direction, Protocol};
use entropic::special::ModelId;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub extent: usize,
    pub time_extent: usize,
    pub ltau_ratio: usize,
    pub replicas: usize,
    pub beta: f64,
    pub l_min: usize,
    pub l_max: usize,
    pub steps: usize,
    pub n_traj: usize,
    pub protocol: Protocol,
    pub directions: Vec<Direction>,
    pub seed: u64,
    pub therm_sweeps: usize,
    pub sweeps_per_step: usize,
    pub updater: Updater,
    /// Model whose entropy form sets the discretisation error; `None` skips it.
    pub systematics: Option<ModelId>,
    pub models: Vec<ModelId>,
    pub exclude_ends: usize,
    pub betas: Vec<f64>,
    pub scan_l: Option<usize>,
    pub dual: bool,
    /// Per-step overrides of `steps`, keyed by `l`.
    pub steps_at: BTreeMap<usize, usize>,
    /// Per-step overrides of `n_traj`, keyed by `l`.
    pub n_traj_at: BTreeMap<usize, usize>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub workers: Option<usize>,
}

/// Raw settings before defaults that depend on other keys are filled in.
#[derive(Debug, Default)]
struct Raw {
    values: BTreeMap<String, (String, String)>,
}

const KEYS: &[&str] = &[
    "dim",
    "extent",
    "time_extent",
    "ltau_ratio",
    "replicas",
    "beta",
    "l_min",
    "l_max",
    "steps",
    "n_traj",
    "protocol",
    "directions",
    "seed",
    "therm_sweeps",
    "sweeps_per_step",
    "updater",
    "systematics",
    "models",
    "exclude_ends",
    "betas",
    "scan_l",
    "dual",
    "out",
    "workers",
];

fn canonical_key(key: &str) -> Option<String> {
    let key = key.trim();
    let alias = match key {
        "D" => "dim",
        "L" => "extent",
        "Ltau" | "ltau" => "time_extent",
        "n" | "n_replicas" => "replicas",
        "N" | "n_steps" => "steps",
        "therm" => "therm_sweeps",
        other => other,
    };
    if KEYS.contains(&alias) {
        return Some(alias.to_string());
    }
    // per-step overrides: steps@3, n_traj@3
    let (base, l) = alias.split_once('@')?;
    let base = match base {
        "N" | "n_steps" => "steps",
        b => b,
    };
    if (base == "steps" || base == "n_traj") && l.parse::<usize>().is_ok() {
        Some(format!("{base}@{l}"))
    } else {
        None
    }
}

impl Raw {
    fn set(&mut self, line: &str, origin: String) -> Result<(), CliError> {
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{origin}: expected 'key = value', got '{line}'")));
        };
        let Some(key) = canonical_key(key) else {
            return Err(CliError::Config(format!("{origin}: unknown key '{}'", key.trim())));
        };
        self.values.insert(key, (value.trim().to_string(), origin));
        Ok(())
    }

    fn take<T, F>(&mut self, key: &str, parse: F) -> Result<Option<T>, CliError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some((v, origin)) => parse(&v)
                .map(Some)
                .map_err(|e| CliError::Config(format!("{origin}: invalid value for '{key}': {e}"))),
        }
    }
}

fn number<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("'{s}' ({e})"))
}

fn list<T, F: Fn(&str) -> Result<T, String>>(s: &str, item: F) -> Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

fn protocol(s: &str) -> Result<Protocol, String> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "p1" => Ok(Protocol::P1),
        "2" | "p2" => Ok(Protocol::P2),
        _ => Err(format!("'{s}' is not a protocol (p1 or p2)")),
    }
}

fn directions(s: &str) -> Result<Vec<Direction>, String> {
    if s.trim().eq_ignore_ascii_case("both") {
        return Ok(vec![Direction::Direct, Direction::Reverse]);
    }
    let mut out: Vec<Direction> = list(s, |d| d.parse::<Direction>().map_err(|e| e.to_string()))?;
    out.dedup();
    if out.is_empty() {
        return Err("no direction given".into());
    }
    Ok(out)
}

fn updater(s: &str) -> Result<Updater, String> {
    match s.to_ascii_lowercase().as_str() {
        "sw" | "swendsen-wang" => Ok(Updater::SwendsenWang),
        "metropolis" => Ok(Updater::Metropolis),
        _ => Err(format!("'{s}' is not an updater (swendsen-wang or metropolis)")),
    }
}

fn model(s: &str) -> Result<ModelId, String> {
    s.parse::<ModelId>().map_err(|e| e.to_string())
}

fn boolean(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{s}' is not a boolean")),
    }
}

impl RunConfig {
    /// Reads an optional config file and applies `overrides` on top.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut raw = Raw::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                raw.set(line, format!("{}:{}", path.display(), i + 1))?;
            }
        }
        for (i, o) in overrides.iter().enumerate() {
            raw.set(o, format!("override {}", i + 1))?;
        }
        Self::resolve(raw)
    }

    fn resolve(mut raw: Raw) -> Result<Self, CliError> {
        let dim = raw.take("dim", number)?.unwrap_or(2);
        let extent = raw
            .take("extent", number)?
            .ok_or_else(|| CliError::Config("missing required key 'extent' (L)".into()))?;
        let ltau_ratio = raw.take("ltau_ratio", number)?.unwrap_or(if dim == 3 { 4 } else { 8 });
        let time_extent = raw.take("time_extent", number)?.unwrap_or(ltau_ratio * extent);
        let beta = raw
            .take("beta", number)?
            .ok_or_else(|| CliError::Config("missing required key 'beta'".into()))?;
        let mut steps_at = BTreeMap::new();
        let mut n_traj_at = BTreeMap::new();
        let keys: Vec<String> = raw.values.keys().filter(|k| k.contains('@')).cloned().collect();
        for key in keys {
            let (base, l) = key.split_once('@').unwrap();
            let l: usize = l.parse().unwrap();
            let v: usize = raw.take(&key, number)?.unwrap();
            if base == "steps" {
                steps_at.insert(l, v);
            } else {
                n_traj_at.insert(l, v);
            }
        }
        let cfg = RunConfig {
            dim,
            extent,
            time_extent,
            ltau_ratio,
            replicas: raw.take("replicas", number)?.unwrap_or(2),
            beta,
            l_min: raw.take("l_min", number)?.unwrap_or(1),
            l_max: raw.take("l_max", number)?.unwrap_or(extent),
            steps: raw.take("steps", number)?.unwrap_or(1000),
            n_traj: raw.take("n_traj", number)?.unwrap_or(100),
            protocol: raw.take("protocol", protocol)?.unwrap_or(Protocol::P1),
            directions: raw
                .take("directions", directions)?
                .unwrap_or_else(|| vec![Direction::Direct, Direction::Reverse]),
            seed: raw.take("seed", number)?.unwrap_or(1),
            therm_sweeps: raw.take("therm_sweeps", number)?.unwrap_or(DEFAULT_THERM_SWEEPS),
            sweeps_per_step: raw.take("sweeps_per_step", number)?.unwrap_or(1),
            updater: raw.take("updater", updater)?.unwrap_or_default(),
            systematics: match raw.take("systematics", |s| {
                if s.eq_ignore_ascii_case("none") {
                    Ok(None)
                } else {
                    model(s).map(Some)
                }
            })? {
                Some(m) => m,
                None => Some(if dim == 3 { ModelId::FRvb } else { ModelId::Fit2dCorrected }),
            },
            models: raw.take("models", |s| list(s, model))?.unwrap_or_default(),
            exclude_ends: raw.take("exclude_ends", number)?.unwrap_or(0),
            betas: raw.take("betas", |s| list(s, number))?.unwrap_or_default(),
            scan_l: raw.take("scan_l", number)?,
            dual: raw.take("dual", boolean)?.unwrap_or(false),
            steps_at,
            n_traj_at,
            out: raw.take("out", |s| Ok(PathBuf::from(s)))?.unwrap_or_else(|| PathBuf::from("out")),
            workers: raw.take("workers", number)?,
        };
        debug_assert!(raw.values.is_empty());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec::new(self.dim, self.extent, self.time_extent, self.replicas, self.beta)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.spec().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.beta <= 0.0 && self.dual {
            return bad("dual pairs need beta > 0".into());
        }
        if self.l_min < 1 || self.l_min > self.l_max || self.l_max > self.extent {
            return bad(format!(
                "l range {}..={} must lie within 1..={}",
                self.l_min, self.l_max, self.extent
            ));
        }
        if self.n_traj < 2 || self.n_traj_at.values().any(|&n| n < 2) {
            return bad("n_traj must be at least 2".into());
        }
        if self.steps == 0 || self.steps_at.values().any(|&n| n == 0) {
            return bad("steps must be at least 1".into());
        }
        if self.sweeps_per_step == 0 {
            return bad("sweeps_per_step must be at least 1".into());
        }
        if self.protocol == Protocol::P2 {
            let subsets = self.spec().column_sites();
            let all = std::iter::once(self.steps).chain(self.steps_at.values().copied());
            if let Some(n) = all.into_iter().find(|n| n % subsets != 0) {
                return bad(format!("protocol p2 needs steps divisible by {subsets}, got {n}"));
            }
        }
        if let Some(l) = self.scan_l {
            if l < 1 || l > self.extent {
                return bad(format!("scan_l = {l} outside 1..={}", self.extent));
            }
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("betas must be finite and non-negative".into());
        }
        for &l in self.steps_at.keys().chain(self.n_traj_at.keys()) {
            if l < 1 || l > self.extent {
                return bad(format!("override for l = {l} outside 1..={}", self.extent));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn step_config(&self, beta: f64, l: usize) -> StepConfig {
        StepConfig {
            spec: LatticeSpec { beta, ..self.spec() },
            steps: *self.steps_at.get(&l).unwrap_or(&self.steps),
            n_traj: *self.n_traj_at.get(&l).unwrap_or(&self.n_traj),
            protocol: self.protocol,
            directions: self.directions.clone(),
            seed: self.seed,
            options: TrajectoryOptions {
                therm_sweeps: self.therm_sweeps,
                sweeps_per_step: self.sweeps_per_step,
                updater: self.updater,
                keep_trace: false,
            },
        }
    }

    /// Canonical text of every setting that affects results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let json = serde_json::to_value(self).expect("config serialises");
        if let serde_json::Value::Object(map) = json {
            let sorted: BTreeMap<_, _> = map.into_iter().collect();
            for (k, v) in sorted {
                let _ = writeln!(s, "{k}={v}");
            }
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(over: &[&str]) -> Result<RunConfig, CliError> {
        let o: Vec<String> = over.iter().map(|s| s.to_string()).collect();
        RunConfig::load(None, &o)
    }

    #[test]
    fn defaults_follow_dimension() {
        let c = load(&["L = 16", "beta = 0.44"]).unwrap();
        assert_eq!((c.dim, c.time_extent, c.therm_sweeps), (2, 128, 1000));
        assert_eq!(c.systematics, Some(ModelId::Fit2dCorrected));
        assert_eq!(c.directions.len(), 2);
        let c = load(&["D=3", "L=8", "beta=0.22"]).unwrap();
        assert_eq!(c.time_extent, 32);
        assert_eq!(c.systematics, Some(ModelId::FRvb));
    }

    #[test]
    fn overrides_and_lists() {
        let c = load(&[
            "L=8",
            "beta=0.3",
            "directions=reverse",
            "models=F2D, FADS",
            "betas=0.1,0.2",
            "steps@2=400",
            "n_traj@3=10",
            "systematics=none",
            "ltau_ratio=6",
        ])
        .unwrap();
        assert_eq!(c.directions, vec![Direction::Reverse]);
        assert_eq!(c.models, vec![ModelId::F2d, ModelId::FAds]);
        assert_eq!(c.betas, vec![0.1, 0.2]);
        assert_eq!(c.step_config(0.3, 2).steps, 400);
        assert_eq!(c.step_config(0.3, 3).n_traj, 10);
        assert_eq!(c.systematics, None);
        assert_eq!(c.time_extent, 48);
    }

    #[test]
    fn errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nL = 8\nbeta = 0.3\nsteps = many\n").unwrap();
        let err = RunConfig::load(Some(&path), &[]).unwrap_err().to_string();
        assert!(err.contains("run.cfg:4") && err.contains("steps"), "{err}");
        std::fs::write(&path, "L = 8\nbeta = 0.3\ncolour = red\n").unwrap();
        let err = RunConfig::load(Some(&path), &[]).unwrap_err().to_string();
        assert!(err.contains("run.cfg:3") && err.contains("colour"), "{err}");
    }

    #[test]
    fn invalid_combinations() {
        assert!(load(&["beta=0.3"]).is_err());
        assert!(load(&["L=8", "beta=0.3", "l_max=9"]).is_err());
        assert!(load(&["L=8", "beta=0.3", "n=1"]).is_err());
        assert!(load(&["D=3", "L=8", "beta=0.3", "protocol=p2", "steps=100"]).is_err());
        assert!(load(&["D=3", "L=8", "beta=0.3", "protocol=p2", "steps=800"]).is_ok());
        assert!(load(&["L=8", "beta=0.3", "n_traj=1"]).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = load(&["L=8", "beta=0.3", "out=a"]).unwrap();
        let b = load(&["L=8", "beta=0.3", "out=b", "workers=3"]).unwrap();
        let c = load(&["L=8", "beta=0.3", "seed=2"]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
