//! Cut-step measurements: run the ramps for one or more values of `l` and
//! turn them into entropy increments and c-function points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jarzynski::{
    combine_estimates, direct_reverse_check, estimate_log_ratio, run_ensemble, DirectReverseReport,
    JarzynskiEstimate, TrajectoryOptions,
};
use crate::lattice::LatticeSpec;
use crate::observables::{delta_renyi_from_log_ratio, entropic_cfunction, CFunctionPoint, DeltaRenyi, PointSource};
use crate::schedule::{Direction, DrivenLattice, Protocol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub spec: LatticeSpec,
    /// Coupling increments per ramp.
    pub steps: usize,
    pub n_traj: usize,
    pub protocol: Protocol,
    pub directions: Vec<Direction>,
    pub seed: u64,
    pub options: TrajectoryOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    /// The step grows the cut from `l - 1` to `l`.
    pub l: usize,
    pub estimates: Vec<JarzynskiEstimate>,
    /// Present when both directions ran.
    pub check: Option<DirectReverseReport>,
    pub delta: DeltaRenyi,
    pub point: CFunctionPoint,
}

impl StepResult {
    pub fn estimate(&self, direction: Direction) -> Option<&JarzynskiEstimate> {
        self.estimates.iter().find(|e| e.direction == direction)
    }
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the ensemble for step `l` in `direction`; trajectories then use
/// their index as the generator stream.
pub fn step_seed(seed: u64, l: usize, direction: Direction) -> u64 {
    let d = match direction {
        Direction::Direct => 0,
        Direction::Reverse => 1,
    };
    mix(mix(seed ^ mix(l as u64)) ^ d)
}

/// Runs the requested ramps for the step `l - 1 -> l`.
pub fn run_step(cfg: &StepConfig, l: usize) -> Result<StepResult> {
    if l == 0 || l > cfg.spec.extent {
        return Err(Error::Geometry(format!(
            "cut step l = {l} outside 1..={}",
            cfg.spec.extent
        )));
    }
    if cfg.directions.is_empty() {
        return Err(Error::Invalid("no ramp direction requested".into()));
    }
    let driven = DrivenLattice::new(cfg.spec, l - 1)?;
    let mut estimates = Vec::with_capacity(cfg.directions.len());
    for &direction in &cfg.directions {
        let schedule = driven.schedule(cfg.protocol, cfg.steps, direction)?;
        let records = run_ensemble(&driven, &schedule, step_seed(cfg.seed, l, direction), cfg.n_traj, &cfg.options)?;
        estimates.push(estimate_log_ratio(&records, cfg.steps)?);
    }
    let direct = estimates.iter().find(|e| e.direction == Direction::Direct);
    let reverse = estimates.iter().find(|e| e.direction == Direction::Reverse);
    let check = match (direct, reverse) {
        (Some(d), Some(r)) => Some(direct_reverse_check(d, r)),
        _ => None,
    };
    let source = if estimates.len() == 1 {
        PointSource::from(estimates[0].direction)
    } else {
        PointSource::Combined
    };
    let (log_ratio, error) = combine_estimates(&estimates)?;
    let delta = delta_renyi_from_log_ratio(l, log_ratio, error, cfg.spec.replicas)?;
    let point = entropic_cfunction(&delta, &cfg.spec, source)?;
    Ok(StepResult {
        l,
        estimates,
        check,
        delta,
        point,
    })
}

pub fn run_scan(cfg: &StepConfig, steps: &[usize]) -> Result<Vec<StepResult>> {
    steps.iter().map(|&l| run_step(cfg, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_step_and_direction() {
        let a = step_seed(1, 1, Direction::Direct);
        assert_ne!(a, step_seed(1, 2, Direction::Direct));
        assert_ne!(a, step_seed(1, 1, Direction::Reverse));
        assert_ne!(a, step_seed(2, 1, Direction::Direct));
        assert_eq!(a, step_seed(1, 1, Direction::Direct));
    }

    #[test]
    fn step_runs_and_rejects_bad_input() {
        let cfg = StepConfig {
            spec: LatticeSpec::new(2, 3, 4, 2, 0.3),
            steps: 10,
            n_traj: 8,
            protocol: Protocol::P1,
            directions: vec![Direction::Direct, Direction::Reverse],
            seed: 3,
            options: TrajectoryOptions {
                therm_sweeps: 20,
                ..Default::default()
            },
        };
        let r = run_step(&cfg, 2).unwrap();
        assert_eq!(r.estimates.len(), 2);
        assert!(r.check.is_some());
        assert_eq!(r.point.source, PointSource::Combined);
        assert_eq!(r.point.l, 2);
        assert_eq!(run_step(&cfg, 2).unwrap(), r);
        assert!(run_step(&cfg, 0).is_err());
        assert!(run_step(&cfg, 4).is_err());
        let one = StepConfig {
            directions: vec![Direction::Reverse],
            ..cfg
        };
        let r = run_step(&one, 1).unwrap();
        assert!(r.check.is_none());
        assert_eq!(r.point.source, PointSource::Reverse);
    }
}
