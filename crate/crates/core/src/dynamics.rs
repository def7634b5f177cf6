//! Equilibrium updates of Ising spins under a per-link coupling assignment.
//!
//! The reduced Hamiltonian is `H/T = -sum_links beta_link s_a s_b`. Swendsen–Wang
//! cluster updates are the production updater; single-site Metropolis sweeps
//! exist to cross-check it.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Link, ReplicaLattice};

/// Link endpoints plus a per-site incidence table.
#[derive(Debug, Clone)]
pub struct BondGraph {
    n_sites: usize,
    ends: Vec<[u32; 2]>,
    offsets: Vec<u32>,
    // (neighbour, link index)
    incident: Vec<(u32, u32)>,
}

impl BondGraph {
    pub fn new(n_sites: usize, ends: Vec<[u32; 2]>) -> Result<Self> {
        let mut degree = vec![0u32; n_sites + 1];
        for &[a, b] in &ends {
            if a as usize >= n_sites || b as usize >= n_sites {
                return Err(Error::Invalid(format!(
                    "link ({a}, {b}) references a site outside 0..{n_sites}"
                )));
            }
            degree[a as usize + 1] += 1;
            degree[b as usize + 1] += 1;
        }
        for i in 0..n_sites {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut incident = vec![(0u32, 0u32); 2 * ends.len()];
        for (idx, &[a, b]) in ends.iter().enumerate() {
            incident[fill[a as usize] as usize] = (b, idx as u32);
            fill[a as usize] += 1;
            incident[fill[b as usize] as usize] = (a, idx as u32);
            fill[b as usize] += 1;
        }
        Ok(Self {
            n_sites,
            ends,
            offsets,
            incident,
        })
    }

    pub fn from_links(n_sites: usize, links: &[Link]) -> Result<Self> {
        Self::new(n_sites, links.iter().map(|l| [l.a, l.b]).collect())
    }

    pub fn from_lattice(lat: &ReplicaLattice) -> Self {
        Self::from_links(lat.n_sites(), lat.links()).expect("lattice links are in range")
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_links(&self) -> usize {
        self.ends.len()
    }

    pub fn ends(&self) -> &[[u32; 2]] {
        &self.ends
    }

    /// `(neighbour, link index)` pairs incident to `site`.
    pub fn incident(&self, site: usize) -> &[(u32, u32)] {
        let lo = self.offsets[site] as usize;
        let hi = self.offsets[site + 1] as usize;
        &self.incident[lo..hi]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn all_up(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let spins = (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Invalid(format!("spin value {bad} is not +-1")));
        }
        Ok(Self { spins })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn get(&self, site: usize) -> i8 {
        self.spins[site]
    }

    #[inline]
    pub fn flip(&mut self, site: usize) {
        self.spins[site] = -self.spins[site];
    }

    /// `s_a * s_b` as a float.
    #[inline]
    pub fn product(&self, a: u32, b: u32) -> f64 {
        (self.spins[a as usize] * self.spins[b as usize]) as f64
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }
}

/// Per-link couplings together with the cached Swendsen–Wang bond thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingAssignment {
    values: Vec<f64>,
    // activation probability 1 - exp(-2 beta) scaled to the u64 range
    thresholds: Vec<u64>,
}

#[inline]
fn bond_threshold(beta: f64) -> u64 {
    if beta <= 0.0 {
        return 0;
    }
    let p = -(-2.0 * beta).exp_m1();
    if p >= 1.0 {
        u64::MAX
    } else {
        // p * 2^64, saturating
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

impl CouplingAssignment {
    pub fn uniform(n_links: usize, beta: f64) -> Self {
        Self::from_values(vec![beta; n_links])
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let thresholds = values.iter().map(|&b| bond_threshold(b)).collect();
        Self { values, thresholds }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, link: usize) -> f64 {
        self.values[link]
    }

    #[inline]
    pub fn set(&mut self, link: usize, beta: f64) {
        self.values[link] = beta;
        self.thresholds[link] = bond_threshold(beta);
    }

    pub fn is_ferromagnetic(&self) -> bool {
        self.values.iter().all(|&b| b >= 0.0)
    }
}

fn check_sizes(graph: &BondGraph, config: &SpinConfiguration, couplings: &CouplingAssignment) -> Result<()> {
    if config.len() != graph.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            found: config.len(),
        });
    }
    if couplings.len() != graph.n_links() {
        return Err(Error::SizeMismatch {
            expected: graph.n_links(),
            found: couplings.len(),
        });
    }
    Ok(())
}

/// `H/T = -sum beta_link s_a s_b`.
pub fn reduced_energy(
    graph: &BondGraph,
    config: &SpinConfiguration,
    couplings: &CouplingAssignment,
) -> Result<f64> {
    check_sizes(graph, config, couplings)?;
    Ok(-graph
        .ends()
        .iter()
        .zip(couplings.values())
        .map(|(&[a, b], &beta)| beta * config.product(a, b))
        .sum::<f64>())
}

/// Change of `H/T` if `site` were flipped.
pub fn flip_energy_change(
    graph: &BondGraph,
    config: &SpinConfiguration,
    couplings: &CouplingAssignment,
    site: usize,
) -> f64 {
    let field: f64 = graph
        .incident(site)
        .iter()
        .map(|&(nb, link)| couplings.get(link as usize) * config.get(nb as usize) as f64)
        .sum();
    2.0 * config.get(site) as f64 * field
}

/// Reusable scratch space for Swendsen–Wang updates.
#[derive(Debug, Clone, Default)]
pub struct SwendsenWang {
    parent: Vec<u32>,
    // 0 = undecided, 1 = keep, 2 = flip
    decision: Vec<u8>,
}

impl SwendsenWang {
    pub fn new(n_sites: usize) -> Self {
        Self {
            parent: vec![0; n_sites],
            decision: vec![0; n_sites],
        }
    }

    #[inline]
    fn find(&mut self, mut i: u32) -> u32 {
        // path halving
        while self.parent[i as usize] != i {
            let grand = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = grand;
            i = grand;
        }
        i
    }

    #[inline]
    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // smaller index becomes the root; keeps labels deterministic
            if ra < rb {
                self.parent[rb as usize] = ra;
            } else {
                self.parent[ra as usize] = rb;
            }
        }
    }

    /// One full cluster update.
    ///
    /// Links joining equal spins are activated with probability
    /// `1 - exp(-2 beta_link)`; every connected component is then flipped with
    /// probability 1/2. Returns the number of clusters.
    pub fn update<R: RngCore + ?Sized>(
        &mut self,
        graph: &BondGraph,
        config: &mut SpinConfiguration,
        couplings: &CouplingAssignment,
        rng: &mut R,
    ) -> Result<usize> {
        check_sizes(graph, config, couplings)?;
        let n = graph.n_sites();
        if self.parent.len() != n {
            *self = Self::new(n);
        }
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        for (idx, &[a, b]) in graph.ends().iter().enumerate() {
            let thr = couplings.thresholds[idx];
            if thr == 0 || config.spins[a as usize] != config.spins[b as usize] {
                continue;
            }
            if rng.next_u64() < thr {
                self.union(a, b);
            }
        }
        self.decision.iter_mut().for_each(|d| *d = 0);
        let mut clusters = 0;
        let mut bits = 0u64;
        let mut left = 0u32;
        for site in 0..n {
            let root = self.find(site as u32) as usize;
            if self.decision[root] == 0 {
                if left == 0 {
                    bits = rng.next_u64();
                    left = 64;
                }
                self.decision[root] = 1 + (bits & 1) as u8;
                bits >>= 1;
                left -= 1;
                clusters += 1;
            }
            if self.decision[root] == 2 {
                config.spins[site] = -config.spins[site];
            }
        }
        Ok(clusters)
    }
}

/// Convenience wrapper allocating fresh scratch space.
pub fn swendsen_wang_update<R: RngCore + ?Sized>(
    graph: &BondGraph,
    config: &mut SpinConfiguration,
    couplings: &CouplingAssignment,
    rng: &mut R,
) -> Result<usize> {
    SwendsenWang::new(graph.n_sites()).update(graph, config, couplings, rng)
}

/// One lexicographic single-spin Metropolis sweep. Returns accepted flips.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    graph: &BondGraph,
    config: &mut SpinConfiguration,
    couplings: &CouplingAssignment,
    rng: &mut R,
) -> Result<usize> {
    check_sizes(graph, config, couplings)?;
    let mut accepted = 0;
    for site in 0..graph.n_sites() {
        let delta = flip_energy_change(graph, config, couplings, site);
        if delta <= 0.0 || rng.random::<f64>() < (-delta).exp() {
            config.flip(site);
            accepted += 1;
        }
    }
    Ok(accepted)
}

/// Which equilibrium updater drives a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Updater {
    #[default]
    SwendsenWang,
    Metropolis,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_replica_lattice, CutSpec, LatticeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(l: usize) -> BondGraph {
        let mut ends = Vec::new();
        for x in 0..l {
            for y in 0..l {
                let s = (x * l + y) as u32;
                ends.push([s, (((x + 1) % l) * l + y) as u32]);
                ends.push([s, (x * l + (y + 1) % l) as u32]);
            }
        }
        BondGraph::new(l * l, ends).unwrap()
    }

    #[test]
    fn energy_of_aligned_and_free_configurations() {
        let g = square(4);
        let up = SpinConfiguration::all_up(16);
        let c = CouplingAssignment::uniform(g.n_links(), 0.3);
        assert!((reduced_energy(&g, &up, &c).unwrap() + 0.3 * 32.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let any = SpinConfiguration::random(16, &mut rng);
        let zero = CouplingAssignment::uniform(g.n_links(), 0.0);
        assert_eq!(reduced_energy(&g, &any, &zero).unwrap(), 0.0);
    }

    #[test]
    fn two_spin_energy() {
        let g = BondGraph::new(2, vec![[0, 1]]).unwrap();
        let cfg = SpinConfiguration::from_spins(vec![1, -1]).unwrap();
        let c = CouplingAssignment::uniform(1, 0.5);
        assert!((reduced_energy(&g, &cfg, &c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = square(3);
        let cfg = SpinConfiguration::all_up(8);
        let c = CouplingAssignment::uniform(g.n_links(), 0.3);
        assert!(matches!(
            reduced_energy(&g, &cfg, &c),
            Err(Error::SizeMismatch { expected: 9, found: 8 })
        ));
        let cfg = SpinConfiguration::all_up(9);
        let c = CouplingAssignment::uniform(3, 0.3);
        assert!(reduced_energy(&g, &cfg, &c).is_err());
    }

    #[test]
    fn local_field_matches_recomputation() {
        let spec = LatticeSpec::new(2, 3, 4, 2, 0.7);
        let lat = build_replica_lattice(spec, CutSpec::new(2)).unwrap();
        let g = BondGraph::from_lattice(&lat);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..g.n_links()).map(|_| rng.random::<f64>()).collect();
        let c = CouplingAssignment::from_values(values);
        let mut cfg = SpinConfiguration::random(g.n_sites(), &mut rng);
        for site in 0..g.n_sites() {
            let before = reduced_energy(&g, &cfg, &c).unwrap();
            let predicted = flip_energy_change(&g, &cfg, &c, site);
            cfg.flip(site);
            let after = reduced_energy(&g, &cfg, &c).unwrap();
            assert!((after - before - predicted).abs() < 1e-12);
        }
    }

    #[test]
    fn free_spins_form_singleton_clusters() {
        let g = square(4);
        let c = CouplingAssignment::uniform(g.n_links(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = SpinConfiguration::all_up(16);
        let mut sw = SwendsenWang::new(16);
        let mut ups = 0i64;
        for _ in 0..2000 {
            assert_eq!(sw.update(&g, &mut cfg, &c, &mut rng).unwrap(), 16);
            ups += cfg.spins().iter().filter(|&&s| s == 1).count() as i64;
        }
        // independent fair coins: mean 8 per update, sd 2 / sqrt(2000)
        let mean = ups as f64 / 2000.0;
        assert!((mean - 8.0).abs() < 5.0 * 2.0 / 2000f64.sqrt());
    }

    #[test]
    fn infinite_coupling_gives_one_cluster() {
        let g = square(4);
        let c = CouplingAssignment::uniform(g.n_links(), f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cfg = SpinConfiguration::all_up(16);
        let mut sw = SwendsenWang::new(16);
        let mut flips = 0;
        for _ in 0..1000 {
            let before = cfg.get(0);
            assert_eq!(sw.update(&g, &mut cfg, &c, &mut rng).unwrap(), 1);
            assert!(cfg.spins().iter().all(|&s| s == cfg.get(0)));
            if cfg.get(0) != before {
                flips += 1;
            }
        }
        assert!((flips as f64 - 500.0).abs() < 5.0 * 250f64.sqrt());
    }

    #[test]
    fn metropolis_accepts_everything_without_energy_cost() {
        let g = square(3);
        let c = CouplingAssignment::uniform(g.n_links(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cfg = SpinConfiguration::random(9, &mut rng);
        assert_eq!(metropolis_sweep(&g, &mut cfg, &c, &mut rng).unwrap(), 9);

        // isolated spin: zero total field
        let g = BondGraph::new(3, vec![[1, 2]]).unwrap();
        let c = CouplingAssignment::uniform(1, 1.0);
        let start = SpinConfiguration::from_spins(vec![1, 1, 1]).unwrap();
        let mut cfg = start.clone();
        metropolis_sweep(&g, &mut cfg, &c, &mut rng).unwrap();
        assert_eq!(cfg.get(0), -1);
    }

    #[test]
    fn opposite_spins_are_never_bonded() {
        let g = BondGraph::new(2, vec![[0, 1]]).unwrap();
        let c = CouplingAssignment::uniform(1, f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sw = SwendsenWang::new(2);
        for _ in 0..200 {
            let mut cfg = SpinConfiguration::from_spins(vec![1, -1]).unwrap();
            assert_eq!(sw.update(&g, &mut cfg, &c, &mut rng).unwrap(), 2);
            let mut cfg = SpinConfiguration::from_spins(vec![-1, -1]).unwrap();
            assert_eq!(sw.update(&g, &mut cfg, &c, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn invalid_spin_values_rejected() {
        assert!(SpinConfiguration::from_spins(vec![1, 0]).is_err());
    }
}
