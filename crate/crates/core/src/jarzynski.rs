//! Non-equilibrium trajectories and free-energy estimates from their work.
//!
//! `<exp(-W)> = Z_f / Z_i` for an ensemble of trajectories that start in
//! equilibrium at `lambda_0` and alternate a work increment with an update at
//! the new couplings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{metropolis_sweep, SpinConfiguration, SwendsenWang, Updater};
use crate::error::{Error, Result};
use crate::schedule::{step_work_unchecked, Direction, DrivenLattice, Schedule, WorkRecord};

/// Default number of thermalization updates before a trajectory starts.
pub const DEFAULT_THERM_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub therm_sweeps: usize,
    /// Equilibrium updates applied after every coupling increment.
    pub sweeps_per_step: usize,
    pub updater: Updater,
    pub keep_trace: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            therm_sweeps: DEFAULT_THERM_SWEEPS,
            sweeps_per_step: 1,
            updater: Updater::SwendsenWang,
            keep_trace: false,
        }
    }
}

/// The generator for trajectory `stream` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Worker {
    sw: SwendsenWang,
    updater: Updater,
}

impl Worker {
    fn update(
        &mut self,
        driven: &DrivenLattice,
        config: &mut SpinConfiguration,
        couplings: &crate::dynamics::CouplingAssignment,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        match self.updater {
            Updater::SwendsenWang => self.sw.update(driven.graph(), config, couplings, rng).map(|_| ()),
            Updater::Metropolis => metropolis_sweep(driven.graph(), config, couplings, rng).map(|_| ()),
        }
    }
}

/// Runs one trajectory on its own generator stream.
pub fn run_trajectory(
    driven: &DrivenLattice,
    schedule: &Schedule,
    seed: u64,
    stream: u64,
    options: &TrajectoryOptions,
) -> Result<WorkRecord> {
    driven.check(schedule, 0, false)?;
    if options.sweeps_per_step == 0 {
        return Err(Error::Invalid("sweeps per step must be at least 1".into()));
    }
    let mut rng = trajectory_rng(seed, stream);
    let n = driven.graph().n_sites();
    let mut config = SpinConfiguration::random(n, &mut rng);
    let mut couplings = driven.couplings_at(schedule, 0)?;
    let mut worker = Worker {
        sw: SwendsenWang::new(n),
        updater: options.updater,
    };
    for _ in 0..options.therm_sweeps {
        worker.update(driven, &mut config, &couplings, &mut rng)?;
    }

    let mut trace = options.keep_trace.then(|| Vec::with_capacity(schedule.steps));
    let mut work = 0.0;
    for m in 0..schedule.steps {
        let dw = step_work_unchecked(&config, driven, schedule, m);
        work += dw;
        if let Some(t) = trace.as_mut() {
            t.push(dw);
        }
        driven.apply(&mut couplings, schedule, m + 1);
        // The last update cannot change W; skip it.
        if m + 1 < schedule.steps {
            for _ in 0..options.sweeps_per_step {
                worker.update(driven, &mut config, &couplings, &mut rng)?;
            }
        }
    }
    Ok(WorkRecord {
        work,
        trace,
        seed,
        stream,
        direction: schedule.direction,
    })
}

/// Runs `n_traj` trajectories in parallel; stream `i` belongs to trajectory `i`
/// and the result is ordered by `i`.
pub fn run_ensemble(
    driven: &DrivenLattice,
    schedule: &Schedule,
    seed: u64,
    n_traj: usize,
    options: &TrajectoryOptions,
) -> Result<Vec<WorkRecord>> {
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| run_trajectory(driven, schedule, seed, i, options))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiEstimate {
    /// Estimate of `log(Z_f / Z_i)` in the orientation of `direction`.
    pub log_ratio: f64,
    /// Delete-1 jackknife standard error of `log_ratio`.
    pub stat_err: f64,
    pub n_traj: usize,
    pub steps: usize,
    pub direction: Direction,
    /// Sample mean of the work.
    pub mean_work: f64,
    /// Unbiased sample variance of the work.
    pub work_variance: f64,
}

impl JarzynskiEstimate {
    /// `log(Z(lambda = 1) / Z(lambda = 0))`, whichever way the ramp ran.
    pub fn grow_log_ratio(&self) -> f64 {
        match self.direction {
            Direction::Direct => self.log_ratio,
            Direction::Reverse => -self.log_ratio,
        }
    }
}

/// `log(mean(exp(-w)))` with a max shift.
pub fn log_mean_exp_neg(works: &[f64]) -> f64 {
    let shift = works.iter().map(|w| -w).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = works.iter().map(|w| (-w - shift).exp()).sum();
    shift + (sum / works.len() as f64).ln()
}

/// Jarzynski estimate with a delete-1 jackknife error.
pub fn estimate_from_work(works: &[f64], steps: usize, direction: Direction) -> Result<JarzynskiEstimate> {
    let n = works.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if let Some(w) = works.iter().find(|w| !w.is_finite()) {
        return Err(Error::Invalid(format!("non-finite work sample {w}")));
    }
    let log_ratio = log_mean_exp_neg(works);

    let (imax, shift) = works
        .iter()
        .map(|w| -w)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let terms: Vec<f64> = works.iter().map(|w| (-w - shift).exp()).collect();
    let total: f64 = terms.iter().sum();
    // The leave-one-out sum without the largest term is summed directly to
    // avoid cancellation; every other one keeps the largest term (= 1).
    let without_max: f64 = terms
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != imax)
        .map(|(_, t)| t)
        .sum();
    let denom = (n - 1) as f64;
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i == imax { without_max } else { total - terms[i] };
            shift + (s / denom).ln()
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / n as f64;
    let var = denom / n as f64 * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();

    let mean_work = works.iter().sum::<f64>() / n as f64;
    let work_variance = works.iter().map(|w| (w - mean_work).powi(2)).sum::<f64>() / denom;
    // Jensen: log <exp(-W)> >= -<W>
    debug_assert!(log_ratio >= -mean_work - 1e-12 * (1.0 + mean_work.abs()));

    Ok(JarzynskiEstimate {
        log_ratio,
        stat_err: var.max(0.0).sqrt(),
        n_traj: n,
        steps,
        direction,
        mean_work,
        work_variance,
    })
}

/// Estimate from trajectories that share one schedule.
pub fn estimate_log_ratio(records: &[WorkRecord], steps: usize) -> Result<JarzynskiEstimate> {
    let Some(first) = records.first() else {
        return Err(Error::InsufficientSamples { needed: 2, got: 0 });
    };
    if records.iter().any(|r| r.direction != first.direction) {
        return Err(Error::Invalid("work records mix directions".into()));
    }
    let works: Vec<f64> = records.iter().map(|r| r.work).collect();
    estimate_from_work(&works, steps, first.direction)
}

/// Consistency of a direct and a reverse estimate of inverse ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectReverseReport {
    /// `direct.log_ratio + reverse.log_ratio`; zero for exact estimates.
    pub difference: f64,
    pub error: f64,
    pub pull: f64,
    pub flagged: bool,
}

pub fn direct_reverse_check(direct: &JarzynskiEstimate, reverse: &JarzynskiEstimate) -> DirectReverseReport {
    let difference = direct.log_ratio + reverse.log_ratio;
    let error = direct.stat_err.hypot(reverse.stat_err);
    let pull = if error > 0.0 {
        difference / error
    } else if difference == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(difference)
    };
    DirectReverseReport {
        difference,
        error,
        pull,
        flagged: pull.abs() > 3.0,
    }
}

/// Inverse-variance weighted mean of the grow-oriented log ratios.
///
/// Returns `(value, error)`. Estimates with zero error dominate; if all
/// errors vanish the plain mean is returned with zero error.
pub fn combine_estimates(estimates: &[JarzynskiEstimate]) -> Result<(f64, f64)> {
    if estimates.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let exact: Vec<f64> = estimates
        .iter()
        .filter(|e| e.stat_err == 0.0)
        .map(|e| e.grow_log_ratio())
        .collect();
    if !exact.is_empty() {
        return Ok((exact.iter().sum::<f64>() / exact.len() as f64, 0.0));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for e in estimates {
        let w = 1.0 / (e.stat_err * e.stat_err);
        num += w * e.grow_log_ratio();
        den += w;
    }
    Ok((num / den, den.sqrt().recip()))
}
