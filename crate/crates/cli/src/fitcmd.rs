//! `fit`: weighted fits of the model curves to measured points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use entropic::fit::{exclude_ends, weighted_fit_masked, FitPoint, FitResult};
use entropic::special::{ModelContext, ModelId};
use serde::Serialize;

use crate::output::{read_table, Meta, Table};
use crate::CliError;

#[derive(Args)]
pub struct FitArgs {
    /// points.csv or entropy.csv files written by `cfun`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Comma-separated model names; defaults to every model matching the data.
    #[arg(long)]
    models: Option<String>,
    /// Leave out the first and last `k` points of each curve.
    #[arg(long, default_value_t = 0)]
    exclude_ends: usize,
    /// Comma-separated cut lengths to leave out.
    #[arg(long)]
    exclude_l: Option<String>,
    /// Accept inputs written with different configurations.
    #[arg(long)]
    allow_mixed_config: bool,
    /// Directory for fit.json and fit.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Cfunction,
    Entropy,
}

#[derive(Debug, Serialize)]
struct ModelFit {
    extent: usize,
    kind: Kind,
    model: ModelId,
    /// Fit to every point.
    all: FitResult,
    /// Fit with the exclusions applied, when any were requested.
    masked: Option<FitResult>,
}

#[derive(Debug, Serialize)]
struct FitFailure {
    extent: usize,
    model: ModelId,
    message: String,
}

#[derive(Debug, Serialize)]
struct FitReport {
    inputs: Vec<String>,
    config_hashes: Vec<String>,
    exclude_ends: usize,
    exclude_l: Vec<usize>,
    results: Vec<ModelFit>,
    failures: Vec<FitFailure>,
}

/// Points of one curve, sorted by `l`.
struct Curve {
    replicas: usize,
    points: Vec<(usize, FitPoint)>,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| CliError::Config(format!("invalid {what} '{p}'"))))
        .collect()
}

/// Picks one row per `l`: combined when present, else direct, else reverse.
fn cfunction_curve(meta: &Meta, rows: &[crate::output::PointRow], origin: &str) -> Result<Curve, CliError> {
    let rank = |d: &str| match d {
        "combined" => 0,
        "direct" => 1,
        _ => 2,
    };
    let betas: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    if betas.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Config(format!(
            "{origin}: rows span several couplings; fit a c-function scan, not a beta scan"
        )));
    }
    let mut best: BTreeMap<usize, &crate::output::PointRow> = BTreeMap::new();
    for r in rows {
        match best.get(&r.l) {
            Some(b) if rank(&b.direction) <= rank(&r.direction) => {}
            _ => {
                best.insert(r.l, r);
            }
        }
    }
    Ok(Curve {
        replicas: meta.replicas,
        points: best
            .into_values()
            .map(|r| (r.l, FitPoint::new(r.x, r.c_value, r.stat_err.hypot(r.sys_err))))
            .collect(),
    })
}

/// Entropy at `x = l / L`; the endpoints carry no information and are dropped.
fn entropy_curve(meta: &Meta, rows: &[(usize, f64, f64)]) -> Curve {
    let mut points: Vec<(usize, FitPoint)> = rows
        .iter()
        .filter(|(l, _, _)| *l > 0 && *l < meta.extent)
        .map(|&(l, s, e)| (l, FitPoint::new(l as f64 / meta.extent as f64, s, e)))
        .collect();
    points.sort_by_key(|p| p.0);
    Curve {
        replicas: meta.replicas,
        points,
    }
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let exclude_l: Vec<usize> = match &args.exclude_l {
        Some(s) => parse_list(s, "cut length")?,
        None => Vec::new(),
    };
    let requested: Option<Vec<ModelId>> = match &args.models {
        Some(s) => Some(parse_list(s, "model")?),
        None => None,
    };

    let mut hashes: Vec<String> = Vec::new();
    let mut curves: BTreeMap<(usize, Kind), Curve> = BTreeMap::new();
    for path in &args.inputs {
        let origin = path.display().to_string();
        let (meta, table) = read_table(path)?;
        if !hashes.contains(&meta.config_hash) {
            hashes.push(meta.config_hash.clone());
        }
        let (kind, curve) = match &table {
            Table::Points(rows) => (Kind::Cfunction, cfunction_curve(&meta, rows, &origin)?),
            Table::Entropy(rows) => (Kind::Entropy, entropy_curve(&meta, rows)),
        };
        if curves.insert((meta.extent, kind), curve).is_some() {
            return Err(CliError::Config(format!(
                "{origin}: a second input of the same kind for L = {}",
                meta.extent
            )));
        }
    }
    if hashes.len() > 1 && !args.allow_mixed_config {
        return Err(CliError::Config(format!(
            "inputs come from {} different configurations; pass --allow-mixed-config to fit them together",
            hashes.len()
        )));
    }

    let mut report = FitReport {
        inputs: args.inputs.iter().map(|p| p.display().to_string()).collect(),
        config_hashes: hashes,
        exclude_ends: args.exclude_ends,
        exclude_l: exclude_l.clone(),
        results: Vec::new(),
        failures: Vec::new(),
    };
    let masking = args.exclude_ends > 0 || !exclude_l.is_empty();
    for (&(extent, kind), curve) in &curves {
        let models: Vec<ModelId> = match &requested {
            Some(list) => list
                .iter()
                .copied()
                .filter(|m| m.is_entropy() == (kind == Kind::Entropy))
                .collect(),
            None => ModelId::ALL
                .into_iter()
                .filter(|m| m.is_entropy() == (kind == Kind::Entropy))
                .collect(),
        };
        let ctx = ModelContext::new(extent, curve.replicas);
        let pts: Vec<FitPoint> = curve.points.iter().map(|p| p.1).collect();
        let mut mask = exclude_ends(pts.len(), args.exclude_ends);
        for (m, (l, _)) in mask.iter_mut().zip(&curve.points) {
            if exclude_l.contains(l) {
                *m = false;
            }
        }
        for model in models {
            let all = weighted_fit_masked(&pts, model, &ctx, None);
            let masked = masking.then(|| weighted_fit_masked(&pts, model, &ctx, Some(&mask)));
            match (all, masked.transpose()) {
                (Ok(all), Ok(masked)) => report.results.push(ModelFit {
                    extent,
                    kind,
                    model,
                    all,
                    masked,
                }),
                (Err(e), _) | (_, Err(e)) => report.failures.push(FitFailure {
                    extent,
                    model,
                    message: e.to_string(),
                }),
            }
        }
    }
    if let Some(list) = &requested {
        for m in list {
            if !report.results.iter().any(|r| r.model == *m)
                && !report.failures.iter().any(|f| f.model == *m)
            {
                return Err(CliError::Config(format!(
                    "model {m} needs {} data, which no input provides",
                    if m.is_entropy() { "entropy" } else { "c-function" }
                )));
            }
        }
    }

    std::fs::create_dir_all(&args.out)?;
    let json = serde_json::to_string_pretty(&report).expect("fit report serialises");
    std::fs::write(args.out.join("fit.json"), json + "\n")?;
    let table = text_table(&report, masking);
    std::fs::write(args.out.join("fit.txt"), &table)?;
    print!("{table}");
    if report.results.is_empty() {
        return Err(CliError::Failed("no model could be fitted".into()));
    }
    Ok(())
}

fn text_table(report: &FitReport, masking: bool) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:>5}  {:<16} {:<36} {:>10}", "L", "model", "parameters", "chi2/ndof");
    if masking {
        let _ = write!(s, " {:>12}", "masked");
    }
    s.push('\n');
    for r in &report.results {
        let params: Vec<String> = r
            .model
            .param_names()
            .iter()
            .zip(r.all.params.iter().zip(&r.all.errors))
            .map(|(n, (v, e))| format!("{n}={v:.5}({e:.5})"))
            .collect();
        let _ = write!(
            s,
            "{:>5}  {:<16} {:<36} {:>10.3}",
            r.extent,
            r.model.name(),
            params.join(" "),
            r.all.chi2_reduced
        );
        if let Some(m) = &r.masked {
            let _ = write!(s, " {:>12.3}", m.chi2_reduced);
        }
        s.push('\n');
    }
    for f in &report.failures {
        let _ = writeln!(s, "{:>5}  {:<16} failed: {}", f.extent, f.model.name(), f.message);
    }
    s
}
