//! `validate` and `golden`: exact-enumeration checks of the simulator.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use entropic::jarzynski::{direct_reverse_check, TrajectoryOptions};
use entropic::lattice::LatticeSpec;
use entropic::oracle::{exact_log_ratio, exact_log_z, exact_log_z_single, GoldenFile, OracleBudget};
use entropic::scan::{run_step, StepConfig};
use entropic::schedule::{Direction, Protocol};
use entropic::special::{
    ads_chi_of_x, ads_entropy, ads_entropy_derivative, ads_x_of_chi, dedekind_eta, jacobi_theta3, rvb_entropy,
    rvb_entropy_derivative,
};
use serde::Serialize;

use crate::CliError;

const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;
/// Soft runtime budget; exceeding it prints a warning.
const BUDGET_SECONDS: f64 = 600.0;

#[derive(Args)]
pub struct ValidateArgs {
    /// Golden file to check against fresh enumeration; a default lattice is generated otherwise.
    #[arg(long)]
    golden: Option<PathBuf>,
    /// Where to write the JSON report (printed to stdout as well).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args)]
pub struct GoldenArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    extent: usize,
    #[arg(long, default_value_t = 4)]
    time_extent: usize,
    #[arg(long, default_value_t = 2)]
    replicas: usize,
    #[arg(long, default_value_t = 0.44)]
    beta: f64,
    /// Largest lattice the enumeration may visit.
    #[arg(long, default_value_t = 24)]
    max_spins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct Report {
    passed: bool,
    elapsed_seconds: f64,
    checks: Vec<Check>,
}

fn benchmark() -> LatticeSpec {
    LatticeSpec::new(2, 3, 4, 2, 0.44)
}

fn close(name: String, got: f64, want: f64, tol: f64) -> Check {
    let diff = (got - want).abs();
    Check {
        name,
        passed: diff <= tol * want.abs().max(1.0),
        detail: format!("got {got}, expected {want}, |diff| {diff:.3e}, tolerance {tol:.0e}"),
    }
}

fn failed(name: String, e: impl std::fmt::Display) -> Check {
    Check {
        name,
        passed: false,
        detail: e.to_string(),
    }
}

/// Each stored value against a fresh enumeration of the same lattice.
fn golden_checks(golden: &GoldenFile) -> Vec<Check> {
    let budget = OracleBudget {
        max_spins: golden.max_spins,
    };
    let spec = golden.spec;
    let mut checks = vec![match exact_log_z_single(&spec, budget) {
        Ok(v) => close("golden.log_z_single".into(), golden.log_z_single, v, 1e-12),
        Err(e) => failed("golden.log_z_single".into(), e),
    }];
    let n = spec.replicas as f64;
    for entry in &golden.entries {
        let name = format!("golden.l{}", entry.l);
        let lat = entropic::lattice::build_replica_lattice(spec, entropic::lattice::CutSpec::new(entry.l));
        let check = match lat.and_then(|lat| exact_log_z(&lat, budget)) {
            Ok(log_z) => {
                let a = close(name.clone(), entry.log_z_replica, log_z, 1e-12);
                let renyi = (entry.log_z_replica - n * golden.log_z_single) / (1.0 - n);
                let b = close(name.clone(), entry.renyi, renyi, 1e-12);
                if a.passed && !b.passed {
                    b
                } else {
                    a
                }
            }
            Err(e) => failed(name, e),
        };
        checks.push(check);
    }
    checks
}

/// Ramps on the benchmark lattice against fresh exact ratios.
fn estimator_checks(seed: u64) -> Vec<Check> {
    let spec = benchmark();
    let budget = OracleBudget::default();
    let mut checks = Vec::new();
    for l in 1..=spec.extent {
        let cfg = StepConfig {
            spec,
            steps: 200,
            n_traj: 200,
            protocol: Protocol::P1,
            directions: vec![Direction::Direct, Direction::Reverse],
            seed,
            options: TrajectoryOptions {
                therm_sweeps: 200,
                ..Default::default()
            },
        };
        let exact = match exact_log_ratio(&spec, l - 1, l, budget) {
            Ok(v) => v,
            Err(e) => {
                checks.push(failed(format!("estimator.l{l}"), e));
                continue;
            }
        };
        match run_step(&cfg, l) {
            Ok(r) => {
                for est in &r.estimates {
                    let pull = (est.grow_log_ratio() - exact).abs() / est.stat_err;
                    checks.push(Check {
                        name: format!("estimator.l{l}.{}", est.direction),
                        passed: est.stat_err > 0.0 && pull <= 4.0,
                        detail: format!(
                            "estimate {} +- {}, exact {exact}, pull {pull:.2}",
                            est.grow_log_ratio(),
                            est.stat_err
                        ),
                    });
                }
                if let (Some(d), Some(rv)) = (r.estimate(Direction::Direct), r.estimate(Direction::Reverse)) {
                    let rep = direct_reverse_check(d, rv);
                    checks.push(Check {
                        name: format!("direct_reverse.l{l}"),
                        passed: !rep.flagged,
                        detail: format!("difference {} +- {}, pull {:.2}", rep.difference, rep.error, rep.pull),
                    });
                }
            }
            Err(e) => checks.push(failed(format!("estimator.l{l}"), e)),
        }
    }
    checks
}

fn derivative_check(name: &str, g: fn(f64) -> entropic::Result<f64>, dg: fn(f64) -> entropic::Result<f64>) -> Check {
    let mut worst: f64 = 0.0;
    for i in 1..10 {
        let x = 0.05 * i as f64 + 0.02;
        let h = 1e-5;
        let r = (|| -> entropic::Result<f64> {
            let fd = (g(x + h)? - g(x - h)?) / (2.0 * h);
            Ok((fd - dg(x)?).abs() / dg(x)?.abs().max(1.0))
        })();
        match r {
            Ok(d) => worst = worst.max(d),
            Err(e) => return failed(name.into(), e),
        }
    }
    Check {
        name: name.into(),
        passed: worst <= 1e-6,
        detail: format!("largest relative deviation {worst:.3e}"),
    }
}

fn special_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let eta_i = GAMMA_QUARTER / (2.0 * PI.powf(0.75));
    checks.push(match dedekind_eta(1.0) {
        Ok(v) => close("special.eta_i".into(), v, eta_i, 1e-10),
        Err(e) => failed("special.eta_i".into(), e),
    });
    let theta_i = PI.powf(0.25) / GAMMA_THREE_QUARTERS;
    checks.push(match jacobi_theta3(1.0) {
        Ok(v) => close("special.theta3_i".into(), v, theta_i, 1e-10),
        Err(e) => failed("special.theta3_i".into(), e),
    });
    checks.push(derivative_check("special.rvb_derivative", rvb_entropy, rvb_entropy_derivative));
    checks.push(derivative_check("special.ads_derivative", ads_entropy, ads_entropy_derivative));
    let mut worst: f64 = 0.0;
    let mut err = None;
    for x in [0.01, 0.1, 0.25, 0.4, 0.49] {
        match ads_chi_of_x(x).and_then(ads_x_of_chi) {
            Ok(back) => worst = worst.max((back - x).abs()),
            Err(e) => err = Some(e),
        }
    }
    checks.push(match err {
        Some(e) => failed("special.ads_round_trip".into(), e),
        None => Check {
            name: "special.ads_round_trip".into(),
            passed: worst <= 1e-8,
            detail: format!("largest |x - x(chi(x))| {worst:.3e}"),
        },
    });
    checks
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let golden = match &args.golden {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            GoldenFile::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => GoldenFile::generate(benchmark(), OracleBudget::default())?,
    };
    let mut checks = golden_checks(&golden);
    checks.extend(estimator_checks(args.seed));
    checks.extend(special_checks());
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > BUDGET_SECONDS {
        eprintln!("entropic: warning: validation took {elapsed:.0} s, over the {BUDGET_SECONDS:.0} s budget");
    }
    let report = Report {
        passed: checks.iter().all(|c| c.passed),
        elapsed_seconds: elapsed,
        checks,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
    if let Some(out) = &args.out {
        std::fs::write(out, &json)?;
    }
    print!("{json}");
    if report.passed {
        Ok(())
    } else {
        let n = report.checks.iter().filter(|c| !c.passed).count();
        Err(CliError::Failed(format!("{n} validation check(s) failed")))
    }
}

pub fn cmd_golden(args: &GoldenArgs) -> Result<(), CliError> {
    let spec = LatticeSpec::new(args.dim, args.extent, args.time_extent, args.replicas, args.beta);
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let golden = GoldenFile::generate(
        spec,
        OracleBudget {
            max_spins: args.max_spins,
        },
    )
    .map_err(|e| match e {
        entropic::Error::BudgetExceeded { .. } => CliError::Config(e.to_string()),
        other => CliError::Core(other),
    })?;
    std::fs::write(&args.out, golden.to_json() + "\n")?;
    Ok(())
}
