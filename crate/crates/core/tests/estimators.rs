//! Jarzynski estimates and reconstructed entropies against exact enumeration.

use entropic::jarzynski::*;
use entropic::lattice::LatticeSpec;
use entropic::observables::{delta_renyi, reconstruct_entropy, DeltaRenyi};
use entropic::oracle::{exact_log_ratio, exact_renyi, OracleBudget};
use entropic::schedule::{Direction, DrivenLattice, Protocol};

fn spec() -> LatticeSpec {
    LatticeSpec::new(2, 3, 4, 2, 0.44)
}

fn opts() -> TrajectoryOptions {
    TrajectoryOptions {
        therm_sweeps: 200,
        ..Default::default()
    }
}

#[test]
fn grow_step_matches_exact_ratio() {
    let exact = exact_log_ratio(&spec(), 1, 2, OracleBudget::default()).unwrap();
    let driven = DrivenLattice::new(spec(), 1).unwrap();
    for direction in [Direction::Direct, Direction::Reverse] {
        let sched = driven.schedule(Protocol::P1, 200, direction).unwrap();
        let recs = run_ensemble(&driven, &sched, 17, 400, &opts()).unwrap();
        let est = estimate_log_ratio(&recs, 200).unwrap();
        assert!(est.stat_err > 0.0);
        let pull = (est.grow_log_ratio() - exact) / est.stat_err;
        assert!(pull.abs() < 3.0, "{direction:?}: {} +- {} vs {exact}", est.grow_log_ratio(), est.stat_err);
    }
}

#[test]
fn staged_protocol_in_three_dimensions_matches_exact_ratio() {
    // 2 x 2 x 3 sites per replica, 24 spins
    let spec = LatticeSpec::new(3, 2, 3, 2, 0.3);
    let exact = exact_log_ratio(&spec, 0, 1, OracleBudget::default()).unwrap();
    let driven = DrivenLattice::new(spec, 0).unwrap();
    let sched = driven.schedule(Protocol::P2, 200, Direction::Direct).unwrap();
    assert_eq!(sched.subsets, 2);
    let recs = run_ensemble(&driven, &sched, 5, 400, &opts()).unwrap();
    let est = estimate_log_ratio(&recs, 200).unwrap();
    assert!((est.log_ratio - exact).abs() < 3.0 * est.stat_err, "{} +- {} vs {exact}", est.log_ratio, est.stat_err);
}

#[test]
fn reconstructed_entropy_matches_exact_curve() {
    let spec = spec();
    let budget = OracleBudget::default();
    let s0 = exact_renyi(&spec, 0, budget).unwrap();
    let mut deltas: Vec<DeltaRenyi> = Vec::new();
    for l in 1..=3 {
        let driven = DrivenLattice::new(spec, l - 1).unwrap();
        let sched = driven.schedule(Protocol::P1, 100, Direction::Direct).unwrap();
        let recs = run_ensemble(&driven, &sched, 100 + l as u64, 300, &opts()).unwrap();
        deltas.push(delta_renyi(&estimate_log_ratio(&recs, 100).unwrap(), l, 2).unwrap());
    }
    let curve = reconstruct_entropy(&deltas).unwrap();
    for p in &curve.points[1..] {
        let exact = exact_renyi(&spec, p.l, budget).unwrap() - s0;
        assert!((p.s - exact).abs() < 3.0 * p.err, "l = {}: {} +- {} vs {exact}", p.l, p.s, p.err);
    }
}

#[test]
fn single_increment_is_reweighting() {
    // With N = 1 the work is the energy difference on equilibrium samples.
    let spec = spec();
    let exact = exact_log_ratio(&spec, 0, 1, OracleBudget::default()).unwrap();
    let driven = DrivenLattice::new(spec, 0).unwrap();
    let sched = driven.schedule(Protocol::P1, 1, Direction::Direct).unwrap();
    let recs = run_ensemble(&driven, &sched, 9, 4000, &opts()).unwrap();
    let est = estimate_log_ratio(&recs, 1).unwrap();
    assert!((est.log_ratio - exact).abs() < 3.0 * est.stat_err);
}
