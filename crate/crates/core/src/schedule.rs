//! Coupling protocols that move the cut by one column, and the work they do.
//!
//! A step between cuts `l` and `l + 1` is parametrised by `lambda` in `[0, 1]`
//! per boundary-column site: the intra-replica time link carries
//! `beta (1 - lambda)` and the inter-replica link `beta lambda`. `lambda = 0`
//! is the lattice with cut `l`, `lambda = 1` the lattice with cut `l + 1`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BondGraph, CouplingAssignment, SpinConfiguration};
use crate::error::{Error, Result};
use crate::lattice::{build_replica_lattice, edge_links_at_column, CutSpec, LatticeSpec, LinkClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Protocol {
    /// All edge couplings ramp together.
    #[default]
    P1,
    /// Boundary-column sites ramp one after the other, `N / subsets` steps each.
    P2,
}

/// Orientation of the ramp.
///
/// `Direct` drives `lambda` from 0 to 1 (the cut grows by one column);
/// `Reverse` drives it from 1 to 0 (the cut shrinks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Direct,
    Reverse,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Direct => "direct",
            Direction::Reverse => "reverse",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Direction::Direct),
            "reverse" => Ok(Direction::Reverse),
            other => Err(Error::Invalid(format!("unknown direction {other:?}"))),
        }
    }
}

/// A time-ordered discrete coupling ramp of `steps` increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub beta: f64,
    pub steps: usize,
    pub protocol: Protocol,
    pub direction: Direction,
    /// Number of independently ramped subsets (boundary-column sites).
    pub subsets: usize,
}

/// Linear ramp of every edge coupling at once.
pub fn protocol1_schedule(beta: f64, steps: usize, direction: Direction) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::Invalid("a schedule needs at least one step".into()));
    }
    Ok(Schedule {
        beta,
        steps,
        protocol: Protocol::P1,
        direction,
        subsets: 1,
    })
}

/// Staged ramp: subset `j` moves during steps `[j m, (j + 1) m)`, `m = N / subsets`.
pub fn protocol2_schedule(
    beta: f64,
    steps: usize,
    subsets: usize,
    direction: Direction,
) -> Result<Schedule> {
    if steps == 0 || subsets == 0 {
        return Err(Error::Invalid(
            "a staged schedule needs at least one step and one subset".into(),
        ));
    }
    if steps % subsets != 0 {
        return Err(Error::Divisibility { steps, subsets });
    }
    Ok(Schedule {
        beta,
        steps,
        protocol: Protocol::P2,
        direction,
        subsets,
    })
}

impl Schedule {
    /// Steps spent ramping one subset.
    pub fn stage_length(&self) -> usize {
        match self.protocol {
            Protocol::P1 => self.steps,
            Protocol::P2 => self.steps / self.subsets,
        }
    }

    fn grow_lambda(&self, subset: usize, t: usize) -> f64 {
        match self.protocol {
            Protocol::P1 => t as f64 / self.steps as f64,
            Protocol::P2 => {
                let m = self.stage_length();
                let start = subset * m;
                if t <= start {
                    0.0
                } else if t >= start + m {
                    1.0
                } else {
                    (t - start) as f64 / m as f64
                }
            }
        }
    }

    /// `lambda` of `subset` after `m` increments, `0 <= m <= N`.
    pub fn lambda(&self, subset: usize, m: usize) -> f64 {
        let subset = match self.protocol {
            Protocol::P1 => 0,
            Protocol::P2 => subset,
        };
        match self.direction {
            Direction::Direct => self.grow_lambda(subset, m),
            Direction::Reverse => self.grow_lambda(subset, self.steps - m),
        }
    }

    pub fn initial_lambda(&self, subset: usize) -> f64 {
        self.lambda(subset, 0)
    }

    /// The same ramp run backwards in time.
    pub fn reversed(&self) -> Schedule {
        let direction = match self.direction {
            Direction::Direct => Direction::Reverse,
            Direction::Reverse => Direction::Direct,
        };
        Schedule { direction, ..*self }
    }
}

/// An intra/inter link pair that is toggled during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariedPair {
    pub intra: usize,
    pub inter: usize,
    pub subset: usize,
}

/// The lattice of one cut step with both candidate links of the toggled column.
///
/// Links are those of the lattice with the smaller cut, followed by the
/// inter-replica links of the toggled column.
#[derive(Debug, Clone)]
pub struct DrivenLattice {
    spec: LatticeSpec,
    lower_cut: usize,
    graph: BondGraph,
    pairs: Vec<VariedPair>,
}

impl DrivenLattice {
    /// Step between cut lengths `lower_cut` and `lower_cut + 1`.
    pub fn new(spec: LatticeSpec, lower_cut: usize) -> Result<Self> {
        spec.validate()?;
        if lower_cut >= spec.extent {
            return Err(Error::Geometry(format!(
                "cannot grow a cut of length {lower_cut} on a lattice of extent {}",
                spec.extent
            )));
        }
        let cut = CutSpec::new(lower_cut);
        let lat = build_replica_lattice(spec, cut)?;
        let mut ends: Vec<[u32; 2]> = lat.links().iter().map(|l| [l.a, l.b]).collect();
        let index: std::collections::HashMap<[u32; 2], usize> =
            ends.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let edge = edge_links_at_column(&spec, cut.slice, lower_cut);
        let mut pairs = Vec::with_capacity(edge.len() / 2);
        for chunk in edge.chunks_exact(2) {
            let (intra, inter) = (chunk[0], chunk[1]);
            debug_assert_eq!(intra.class, LinkClass::IntraCut);
            debug_assert_eq!(inter.class, LinkClass::InterCut);
            let intra_idx = *index
                .get(&[intra.a, intra.b])
                .expect("intra-replica edge link belongs to the smaller cut");
            ends.push([inter.a, inter.b]);
            pairs.push(VariedPair {
                intra: intra_idx,
                inter: ends.len() - 1,
                subset: intra.subset,
            });
        }
        let graph = BondGraph::new(spec.total_sites(), ends)?;
        Ok(Self {
            spec,
            lower_cut,
            graph,
            pairs,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn lower_cut(&self) -> usize {
        self.lower_cut
    }

    pub fn graph(&self) -> &BondGraph {
        &self.graph
    }

    pub fn pairs(&self) -> &[VariedPair] {
        &self.pairs
    }

    pub fn subsets(&self) -> usize {
        self.spec.column_sites()
    }

    /// Couplings with every varied pair at the given `lambda`.
    pub fn couplings_at_lambda(&self, lambda: f64) -> CouplingAssignment {
        let mut c = CouplingAssignment::uniform(self.graph.n_links(), self.spec.beta);
        for p in &self.pairs {
            c.set(p.intra, self.spec.beta * (1.0 - lambda));
            c.set(p.inter, self.spec.beta * lambda);
        }
        c
    }

    /// Couplings after `m` increments of `schedule`.
    pub fn couplings_at(&self, schedule: &Schedule, m: usize) -> Result<CouplingAssignment> {
        self.check(schedule, m, true)?;
        let mut c = CouplingAssignment::uniform(self.graph.n_links(), self.spec.beta);
        self.apply(&mut c, schedule, m);
        Ok(c)
    }

    /// Moves the varied couplings in `c` to their values at step `m`.
    pub fn apply(&self, c: &mut CouplingAssignment, schedule: &Schedule, m: usize) {
        for p in &self.pairs {
            let lambda = schedule.lambda(p.subset, m);
            c.set(p.intra, schedule.beta * (1.0 - lambda));
            c.set(p.inter, schedule.beta * lambda);
        }
    }

    /// Checks that `schedule` fits this step; `inclusive` allows `m == N`.
    pub fn check(&self, schedule: &Schedule, m: usize, inclusive: bool) -> Result<()> {
        if schedule.protocol == Protocol::P2 && schedule.subsets != self.subsets() {
            return Err(Error::Invalid(format!(
                "staged schedule has {} subsets, the boundary column has {}",
                schedule.subsets,
                self.subsets()
            )));
        }
        let limit = if inclusive { schedule.steps + 1 } else { schedule.steps };
        if m >= limit {
            return Err(Error::StepIndex {
                index: m,
                steps: schedule.steps,
            });
        }
        Ok(())
    }

    /// Builds the schedule of the requested protocol for this step.
    pub fn schedule(&self, protocol: Protocol, steps: usize, direction: Direction) -> Result<Schedule> {
        match protocol {
            Protocol::P1 => protocol1_schedule(self.spec.beta, steps, direction),
            Protocol::P2 => protocol2_schedule(self.spec.beta, steps, self.subsets(), direction),
        }
    }
}

/// Work of increment `m`: `H_{lambda_{m+1}}[config]/T - H_{lambda_m}[config]/T`.
///
/// Only the varied links contribute; per pair this is
/// `beta (lambda_{m+1} - lambda_m) (s s_intra - s s_inter)`.
pub fn step_work(
    config: &SpinConfiguration,
    driven: &DrivenLattice,
    schedule: &Schedule,
    m: usize,
) -> Result<f64> {
    driven.check(schedule, m, false)?;
    if config.len() != driven.graph().n_sites() {
        return Err(Error::SizeMismatch {
            expected: driven.graph().n_sites(),
            found: config.len(),
        });
    }
    Ok(step_work_unchecked(config, driven, schedule, m))
}

pub(crate) fn step_work_unchecked(
    config: &SpinConfiguration,
    driven: &DrivenLattice,
    schedule: &Schedule,
    m: usize,
) -> f64 {
    let ends = driven.graph().ends();
    let mut work = 0.0;
    for p in driven.pairs() {
        let dl = schedule.lambda(p.subset, m + 1) - schedule.lambda(p.subset, m);
        if dl == 0.0 {
            continue;
        }
        let [a, b] = ends[p.intra];
        let [c, d] = ends[p.inter];
        work += dl * (config.product(a, b) - config.product(c, d));
    }
    schedule.beta * work
}

/// Accumulated dimensionless work of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub work: f64,
    /// Per-step increments, kept only on request.
    pub trace: Option<Vec<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub direction: Direction,
}
