//! Exact partition functions by brute-force enumeration of small lattices.
//!
//! The configuration space is split into shards on the highest spins; each
//! shard is walked in Gray-code order with incremental energy updates and the
//! shards are reduced in index order, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BondGraph, CouplingAssignment};
use crate::error::{Error, Result};
use crate::lattice::{build_replica_lattice, CutSpec, LatticeSpec, ReplicaLattice};
use crate::schedule::DrivenLattice;

pub const DEFAULT_MAX_SPINS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_spins: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_spins: DEFAULT_MAX_SPINS,
        }
    }
}

impl OracleBudget {
    fn check(&self, spins: usize) -> Result<()> {
        // 2^spins must stay addressable regardless of the configured cap
        if spins > self.max_spins || spins > 40 {
            return Err(Error::BudgetExceeded {
                spins,
                max: self.max_spins,
            });
        }
        Ok(())
    }
}

/// Boltzmann averages over the full configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSummary {
    pub log_z: f64,
    pub mean_energy: f64,
    pub mean_energy_sq: f64,
    pub mean_abs_magnetization: f64,
}

#[derive(Default, Clone, Copy)]
struct Partial {
    z: f64,
    e: f64,
    e2: f64,
    m: f64,
}

/// Enumerates every configuration of `graph` under `couplings`.
///
/// With `flip_labels` the walk starts from the globally flipped labelling;
/// the result must not change.
pub fn exact_summary_with(
    graph: &BondGraph,
    couplings: &CouplingAssignment,
    budget: OracleBudget,
    flip_labels: bool,
) -> Result<ExactSummary> {
    let n = graph.n_sites();
    budget.check(n)?;
    if couplings.len() != graph.n_links() {
        return Err(Error::SizeMismatch {
            expected: graph.n_links(),
            found: couplings.len(),
        });
    }
    // -H <= sum |beta|, so every shifted weight is at most 1
    let shift: f64 = couplings.values().iter().map(|b| b.abs()).sum();
    let top = n.min(8).min(n.saturating_sub(4));
    let low = n - top;
    let base: i8 = if flip_labels { -1 } else { 1 };

    let partials: Vec<Partial> = (0..1u64 << top)
        .into_par_iter()
        .map(|shard| {
            let mut spins = vec![base; n];
            for bit in 0..top {
                if shard >> bit & 1 == 1 {
                    spins[low + bit] = -base;
                }
            }
            let mut energy: f64 = -graph
                .ends()
                .iter()
                .zip(couplings.values())
                .map(|(&[a, b], &beta)| beta * (spins[a as usize] * spins[b as usize]) as f64)
                .sum::<f64>();
            let mut mag: i64 = spins.iter().map(|&s| s as i64).sum();
            let mut acc = Partial::default();
            let mut add = |energy: f64, mag: i64| {
                let w = (-energy - shift).exp();
                acc.z += w;
                acc.e += w * energy;
                acc.e2 += w * energy * energy;
                acc.m += w * mag.abs() as f64;
            };
            add(energy, mag);
            for i in 1u64..1 << low {
                let site = i.trailing_zeros() as usize;
                let field: f64 = graph
                    .incident(site)
                    .iter()
                    .map(|&(nb, link)| couplings.get(link as usize) * spins[nb as usize] as f64)
                    .sum();
                let s = spins[site];
                energy += 2.0 * s as f64 * field;
                mag -= 2 * s as i64;
                spins[site] = -s;
                add(energy, mag);
            }
            acc
        })
        .collect();

    let total = partials.iter().fold(Partial::default(), |a, p| Partial {
        z: a.z + p.z,
        e: a.e + p.e,
        e2: a.e2 + p.e2,
        m: a.m + p.m,
    });
    Ok(ExactSummary {
        log_z: shift + total.z.ln(),
        mean_energy: total.e / total.z,
        mean_energy_sq: total.e2 / total.z,
        mean_abs_magnetization: total.m / total.z,
    })
}

pub fn exact_summary(graph: &BondGraph, couplings: &CouplingAssignment, budget: OracleBudget) -> Result<ExactSummary> {
    exact_summary_with(graph, couplings, budget, false)
}

pub fn exact_log_z_graph(graph: &BondGraph, couplings: &CouplingAssignment, budget: OracleBudget) -> Result<f64> {
    Ok(exact_summary(graph, couplings, budget)?.log_z)
}

/// `log Z` of the replica lattice with every link at coupling `beta`.
pub fn exact_log_z(lat: &ReplicaLattice, budget: OracleBudget) -> Result<f64> {
    budget.check(lat.n_sites())?;
    let graph = BondGraph::from_lattice(lat);
    let couplings = CouplingAssignment::uniform(graph.n_links(), lat.spec().beta);
    exact_log_z_graph(&graph, &couplings, budget)
}

/// `log Z` of a driven step with every varied pair at `lambda`.
pub fn exact_log_z_driven(driven: &DrivenLattice, lambda: f64, budget: OracleBudget) -> Result<f64> {
    exact_log_z_graph(driven.graph(), &driven.couplings_at_lambda(lambda), budget)
}

/// `log Z` of one periodic lattice without replicas.
pub fn exact_log_z_single(spec: &LatticeSpec, budget: OracleBudget) -> Result<f64> {
    budget.check(spec.replica_sites())?;
    let lat = build_replica_lattice(*spec, CutSpec::new(0))?;
    let per_replica = spec.replica_sites() as u32;
    // with no cut, replica 0 only links to itself
    let ends: Vec<[u32; 2]> = lat
        .links()
        .iter()
        .filter(|l| l.a < per_replica)
        .map(|l| [l.a, l.b])
        .collect();
    let graph = BondGraph::new(spec.replica_sites(), ends)?;
    let couplings = CouplingAssignment::uniform(graph.n_links(), spec.beta);
    exact_log_z_graph(&graph, &couplings, budget)
}

/// `S_n(l) = (log Z_n(l) - n log Z) / (1 - n)`.
pub fn exact_renyi(spec: &LatticeSpec, l: usize, budget: OracleBudget) -> Result<f64> {
    let n = spec.replicas;
    let log_zn = exact_log_z(&build_replica_lattice(*spec, CutSpec::new(l))?, budget)?;
    let log_z1 = exact_log_z_single(spec, budget)?;
    Ok((log_zn - n as f64 * log_z1) / (1.0 - n as f64))
}

/// `log(Z_n(l_to) / Z_n(l_from))`.
pub fn exact_log_ratio(spec: &LatticeSpec, l_from: usize, l_to: usize, budget: OracleBudget) -> Result<f64> {
    if l_from == l_to {
        build_replica_lattice(*spec, CutSpec::new(l_from))?;
        return Ok(0.0);
    }
    let from = exact_log_z(&build_replica_lattice(*spec, CutSpec::new(l_from))?, budget)?;
    let to = exact_log_z(&build_replica_lattice(*spec, CutSpec::new(l_to))?, budget)?;
    Ok(to - from)
}

/// Exact reference values for one lattice, stored as JSON with the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub spec: LatticeSpec,
    pub max_spins: usize,
    pub log_z_single: f64,
    pub entries: Vec<GoldenEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub l: usize,
    pub log_z_replica: f64,
    pub renyi: f64,
}

impl GoldenFile {
    pub fn generate(spec: LatticeSpec, budget: OracleBudget) -> Result<Self> {
        let log_z_single = exact_log_z_single(&spec, budget)?;
        let n = spec.replicas as f64;
        let entries = (0..=spec.extent)
            .map(|l| {
                let log_z_replica = exact_log_z(&build_replica_lattice(spec, CutSpec::new(l))?, budget)?;
                Ok(GoldenEntry {
                    l,
                    log_z_replica,
                    renyi: (log_z_replica - n * log_z_single) / (1.0 - n),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            max_spins: budget.max_spins,
            log_z_single,
            entries,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("golden file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("golden file: {e}")))
    }

    /// `log(Z_n(l + 1) / Z_n(l))` from the stored values.
    pub fn log_ratio(&self, l: usize) -> Option<f64> {
        let a = self.entries.iter().find(|e| e.l == l)?;
        let b = self.entries.iter().find(|e| e.l == l + 1)?;
        Some(b.log_z_replica - a.log_z_replica)
    }
}
