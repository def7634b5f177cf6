//! The measuring commands, `cfun` and `beta-scan`.

use std::path::Path;
use std::time::Instant;

use entropic::jarzynski::{DirectReverseReport, JarzynskiEstimate};
use entropic::lattice::dual_beta;
use entropic::observables::{
    delta_renyi, entropic_cfunction, iterate_systematics, reconstruct_entropy, systematic_error_model,
    zero_temperature_check, CFunctionPoint, PointSource, ZeroTemperatureReport,
};
use entropic::scan::{run_step, step_seed, StepResult};
use entropic::special::{ModelContext, ModelId};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, Meta, PointRow};
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Seeds {
    pub direction: String,
    pub seed: u64,
}

/// Everything needed to reproduce one measured point.
#[derive(Debug, Serialize)]
pub struct PointRecord {
    pub l: usize,
    pub beta: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub seeds: Vec<Seeds>,
    pub estimates: Vec<JarzynskiEstimate>,
    pub check: Option<DirectReverseReport>,
    pub point: Option<CFunctionPoint>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SystematicsRecord {
    pub model: ModelId,
    pub params: Vec<f64>,
    pub iterations: usize,
    pub chi2_reduced: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub elapsed_seconds: f64,
    pub points: Vec<PointRecord>,
    pub systematics: Option<SystematicsRecord>,
    pub systematics_error: Option<String>,
    pub zero_temperature: Option<ZeroTemperatureReport>,
    pub failed_points: usize,
}

impl Manifest {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            elapsed_seconds: 0.0,
            points: Vec::new(),
            systematics: None,
            systematics_error: None,
            zero_temperature: None,
            failed_points: 0,
        }
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}

fn meta(cfg: &RunConfig) -> Meta {
    Meta {
        config_hash: cfg.hash(),
        dim: cfg.dim,
        extent: cfg.extent,
        replicas: cfg.replicas,
    }
}

/// Runs one step; module errors are kept in the record instead of aborting.
fn measure(cfg: &RunConfig, beta: f64, l: usize) -> (PointRecord, Option<StepResult>) {
    let step = cfg.step_config(beta, l);
    let seeds = step
        .directions
        .iter()
        .map(|&d| Seeds {
            direction: d.to_string(),
            seed: step_seed(step.seed, l, d),
        })
        .collect();
    let mut record = PointRecord {
        l,
        beta,
        steps: step.steps,
        n_traj: step.n_traj,
        seeds,
        estimates: Vec::new(),
        check: None,
        point: None,
        error: None,
    };
    match run_step(&step, l) {
        Ok(r) => {
            record.estimates = r.estimates.clone();
            record.check = r.check;
            record.point = Some(r.point);
            (record, Some(r))
        }
        Err(e) => {
            eprintln!("entropic: point l={l} beta={beta} failed: {e}");
            record.error = Some(e.to_string());
            (record, None)
        }
    }
}

/// Per-direction points of a step followed by the reported point when it is a combination.
fn step_points(r: &StepResult, cfg: &RunConfig, beta: f64) -> Result<Vec<CFunctionPoint>, CliError> {
    let spec = cfg.step_config(beta, r.l).spec;
    let mut out = Vec::new();
    if r.estimates.len() > 1 {
        for est in &r.estimates {
            let delta = delta_renyi(est, r.l, cfg.replicas)?;
            out.push(entropic_cfunction(&delta, &spec, PointSource::from(est.direction))?);
        }
    }
    out.push(r.point);
    Ok(out)
}

pub fn cmd_cfun(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.out)?;
    let mut manifest = Manifest::new("cfun", cfg);
    let mut results = Vec::new();
    for l in cfg.l_min..=cfg.l_max {
        let (record, result) = measure(cfg, cfg.beta, l);
        manifest.points.push(record);
        results.extend(result);
    }
    manifest.failed_points = manifest.points.iter().filter(|p| p.error.is_some()).count();

    let reported: Vec<CFunctionPoint> = results.iter().map(|r| r.point).collect();
    let mut all: Vec<CFunctionPoint> = Vec::new();
    for r in &results {
        all.extend(step_points(r, cfg, cfg.beta)?);
    }
    if let Some(model) = cfg.systematics {
        let ctx = ModelContext::new(cfg.extent, cfg.replicas);
        match iterate_systematics(&reported, model, &ctx, None) {
            Ok(fit) => {
                all = systematic_error_model(&all, model, &fit.fit.params, &ctx)?;
                manifest.systematics = Some(SystematicsRecord {
                    model,
                    params: fit.fit.params.clone(),
                    iterations: fit.iterations,
                    chi2_reduced: fit.fit.chi2_reduced,
                });
            }
            Err(e) => manifest.systematics_error = Some(e.to_string()),
        }
    }
    if !reported.is_empty() {
        manifest.zero_temperature = Some(zero_temperature_check(&reported));
    }
    let rows: Vec<PointRow> = all.iter().map(PointRow::from).collect();
    output::write_points(&cfg.out.join("points.csv"), &meta(cfg), &rows)?;
    if cfg.l_min == 1 && manifest.failed_points == 0 {
        let deltas: Vec<_> = results.iter().map(|r| r.delta).collect();
        let curve = reconstruct_entropy(&deltas)?;
        output::write_entropy(&cfg.out.join("entropy.csv"), &meta(cfg), &curve)?;
    }
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out)?;
    finish(&manifest)
}

pub fn cmd_beta_scan(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.betas.is_empty() {
        return Err(CliError::Config("beta-scan needs a list of couplings (betas)".into()));
    }
    if cfg.dual && cfg.dim != 2 {
        return Err(CliError::Config("dual pairs exist only in two dimensions".into()));
    }
    let l = cfg.scan_l.unwrap_or(cfg.extent.div_ceil(2));
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.out)?;
    let mut manifest = Manifest::new("beta-scan", cfg);
    let mut rows = Vec::new();
    let mut dual_rows = Vec::new();
    for &beta in &cfg.betas {
        let (record, result) = measure(cfg, beta, l);
        manifest.points.push(record);
        if let Some(r) = &result {
            rows.extend(step_points(r, cfg, beta)?.iter().map(PointRow::from));
        }
        if cfg.dual && beta > 0.0 {
            let bd = dual_beta(beta)?;
            let (record, dual) = measure(cfg, bd, l);
            manifest.points.push(record);
            if let (Some(a), Some(b)) = (&result, &dual) {
                dual_rows.push(vec![
                    beta.to_string(),
                    bd.to_string(),
                    a.point.c_value.to_string(),
                    a.point.stat_err.to_string(),
                    b.point.c_value.to_string(),
                    b.point.stat_err.to_string(),
                ]);
            }
        }
    }
    manifest.failed_points = manifest.points.iter().filter(|p| p.error.is_some()).count();
    output::write_points(&cfg.out.join("points.csv"), &meta(cfg), &rows)?;
    if cfg.dual {
        output::write_table(
            &cfg.out.join("duality.csv"),
            &meta(cfg),
            &["beta", "beta_dual", "c_value", "stat_err", "c_value_dual", "stat_err_dual"],
            dual_rows,
        )?;
    }
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out)?;
    finish(&manifest)
}

fn finish(manifest: &Manifest) -> Result<(), CliError> {
    if manifest.failed_points > 0 {
        Err(CliError::Failed(format!(
            "{} of {} points failed; see manifest.json",
            manifest.failed_points,
            manifest.points.len()
        )))
    } else {
        Ok(())
    }
}
