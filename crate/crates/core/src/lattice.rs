//! Replica-coupled hypercubic Ising lattice with a cut.
//!
//! Sites are indexed row-major over `(replica, tau, x, y)`, where `x` is the
//! spatial direction along which the cut grows and `y` (three dimensions only)
//! is the direction in which subsystem A is fully extended. Every site owns its
//! forward links (`x`, then `y`, then `tau`), which fixes the link order.
//!
//! The time links leaving slice `tau0` are special: for columns `x < l` they
//! are rewired to the next replica (cyclically), for `x >= l` they stay inside
//! their own replica.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Self-dual coupling of the square-lattice Ising model, `log(1 + sqrt 2) / 2`.
pub const BETA_C_2D: f64 = 0.440_686_793_509_771_5;

/// Critical coupling of the simple-cubic Ising model.
pub const BETA_C_3D: f64 = 0.221_654_626;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Number of dimensions, Euclidean time included (2 or 3).
    pub dim: usize,
    /// Spatial extent in sites; both spatial directions in three dimensions.
    pub extent: usize,
    /// Euclidean-time extent in sites.
    pub time_extent: usize,
    pub replicas: usize,
    pub beta: f64,
}

impl LatticeSpec {
    pub fn new(dim: usize, extent: usize, time_extent: usize, replicas: usize, beta: f64) -> Self {
        Self {
            dim,
            extent,
            time_extent,
            replicas,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Geometry(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.extent < 2 {
            return Err(Error::Geometry(format!(
                "spatial extent must be at least 2, got {}",
                self.extent
            )));
        }
        if self.time_extent < 2 {
            return Err(Error::Geometry(format!(
                "time extent must be at least 2, got {}",
                self.time_extent
            )));
        }
        if self.replicas < 2 {
            return Err(Error::Geometry(format!(
                "need at least 2 replicas, got {}",
                self.replicas
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Geometry(format!(
                "coupling must be finite and non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Sites in one boundary column, `L^(D-2)`.
    pub fn column_sites(&self) -> usize {
        self.extent.pow(self.dim as u32 - 2)
    }

    /// Sites in one time slice of one replica, `L^(D-1)`.
    pub fn slice_sites(&self) -> usize {
        self.extent * self.column_sites()
    }

    pub fn replica_sites(&self) -> usize {
        self.slice_sites() * self.time_extent
    }

    pub fn total_sites(&self) -> usize {
        self.replica_sites() * self.replicas
    }

    pub fn total_links(&self) -> usize {
        self.dim * self.total_sites()
    }

    /// Entangling-surface area on the torus: two boundary hyperplanes.
    pub fn boundary_area(&self) -> usize {
        2 * self.column_sites()
    }

    /// Number of links whose coupling changes when the cut moves by one column.
    pub fn varied_links(&self) -> usize {
        2 * self.column_sites() * self.replicas
    }

    pub fn site(&self, replica: usize, tau: usize, x: usize, y: usize) -> u32 {
        let cols = self.column_sites();
        (((replica * self.time_extent + tau) * self.extent + x) * cols + y) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSpec {
    /// Number of columns in subsystem A (`0..=L`).
    pub length: usize,
    /// Time slice whose outgoing time links form the cut.
    pub slice: usize,
}

impl CutSpec {
    pub fn new(length: usize) -> Self {
        Self { length, slice: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkClass {
    Bulk,
    /// Time link across the cut slice inside one replica.
    IntraCut,
    /// Time link across the cut slice from replica `k` to `(k + 1) mod n`.
    InterCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub a: u32,
    pub b: u32,
    pub class: LinkClass,
}

/// Which way the cut moves by one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutStep {
    Grow,
    Shrink,
}

/// One of the time links toggled when the cut moves across a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeLink {
    pub a: u32,
    pub b: u32,
    pub class: LinkClass,
    /// Boundary-column site (`y` coordinate); the unit staged protocols ramp.
    pub subset: usize,
    pub replica: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicaLattice {
    spec: LatticeSpec,
    cut: CutSpec,
    links: Vec<Link>,
}

/// Builds the replica lattice for the given cut.
pub fn build_replica_lattice(spec: LatticeSpec, cut: CutSpec) -> Result<ReplicaLattice> {
    spec.validate()?;
    if cut.length > spec.extent {
        return Err(Error::Geometry(format!(
            "cut length {} exceeds spatial extent {}",
            cut.length, spec.extent
        )));
    }
    if cut.slice >= spec.time_extent {
        return Err(Error::Geometry(format!(
            "cut slice {} outside time extent {}",
            cut.slice, spec.time_extent
        )));
    }

    let l = spec.extent;
    let lt = spec.time_extent;
    let cols = spec.column_sites();
    let n = spec.replicas;
    let mut links = Vec::with_capacity(spec.total_links());
    for k in 0..n {
        for tau in 0..lt {
            for x in 0..l {
                for y in 0..cols {
                    let here = spec.site(k, tau, x, y);
                    links.push(Link {
                        a: here,
                        b: spec.site(k, tau, (x + 1) % l, y),
                        class: LinkClass::Bulk,
                    });
                    if spec.dim == 3 {
                        links.push(Link {
                            a: here,
                            b: spec.site(k, tau, x, (y + 1) % cols),
                            class: LinkClass::Bulk,
                        });
                    }
                    let next = (tau + 1) % lt;
                    let link = if tau != cut.slice {
                        Link {
                            a: here,
                            b: spec.site(k, next, x, y),
                            class: LinkClass::Bulk,
                        }
                    } else if x < cut.length {
                        Link {
                            a: here,
                            b: spec.site((k + 1) % n, next, x, y),
                            class: LinkClass::InterCut,
                        }
                    } else {
                        Link {
                            a: here,
                            b: spec.site(k, next, x, y),
                            class: LinkClass::IntraCut,
                        }
                    };
                    links.push(link);
                }
            }
        }
    }
    debug_assert_eq!(links.len(), spec.total_links());
    Ok(ReplicaLattice { spec, cut, links })
}

impl ReplicaLattice {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn cut(&self) -> &CutSpec {
        &self.cut
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn n_sites(&self) -> usize {
        self.spec.total_sites()
    }

    pub fn count(&self, class: LinkClass) -> usize {
        self.links.iter().filter(|l| l.class == class).count()
    }

    /// The time links of the column toggled when the cut moves by one step.
    ///
    /// Growing from `l` toggles column `l`; shrinking from `l` toggles column
    /// `l - 1`. The result lists, for every boundary site `y` and replica `k`,
    /// the intra-replica link followed by the inter-replica link.
    pub fn edge_links_for_step(&self, step: CutStep) -> Result<Vec<EdgeLink>> {
        let l = self.cut.length;
        let column = match step {
            CutStep::Grow if l < self.spec.extent => l,
            CutStep::Shrink if l >= 1 => l - 1,
            _ => {
                return Err(Error::Geometry(format!(
                    "cannot {:?} a cut of length {} on a lattice of extent {}",
                    step, l, self.spec.extent
                )))
            }
        };
        Ok(edge_links_at_column(&self.spec, self.cut.slice, column))
    }
}

pub(crate) fn edge_links_at_column(spec: &LatticeSpec, slice: usize, column: usize) -> Vec<EdgeLink> {
    let n = spec.replicas;
    let next = (slice + 1) % spec.time_extent;
    let mut out = Vec::with_capacity(spec.varied_links());
    for y in 0..spec.column_sites() {
        for k in 0..n {
            let a = spec.site(k, slice, column, y);
            out.push(EdgeLink {
                a,
                b: spec.site(k, next, column, y),
                class: LinkClass::IntraCut,
                subset: y,
                replica: k,
            });
            out.push(EdgeLink {
                a,
                b: spec.site((k + 1) % n, next, column, y),
                class: LinkClass::InterCut,
                subset: y,
                replica: k,
            });
        }
    }
    out
}

/// Kramers–Wannier dual coupling, `exp(-2 beta) = tanh(beta*)`.
pub fn dual_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "dual coupling needs a finite beta > 0, got {beta}"
        )));
    }
    // Symmetric form: exp(-2 beta*) = tanh(beta).
    let log_tanh = if beta < 1.0 {
        beta.tanh().ln()
    } else {
        (-2.0 / ((2.0 * beta).exp() + 1.0)).ln_1p()
    };
    Ok(-0.5 * log_tanh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn spec2(l: usize, lt: usize, n: usize) -> LatticeSpec {
        LatticeSpec::new(2, l, lt, n, 0.44)
    }

    #[test]
    fn decoupled_lattice_has_no_inter_links() {
        let lat = build_replica_lattice(spec2(4, 8, 2), CutSpec::new(0)).unwrap();
        assert_eq!(lat.count(LinkClass::InterCut), 0);
        assert_eq!(lat.count(LinkClass::IntraCut), 8);
        assert_eq!(lat.links().len(), 128);
    }

    #[test]
    fn half_cut_counts_by_enumeration() {
        let lat = build_replica_lattice(spec2(4, 8, 2), CutSpec::new(2)).unwrap();
        assert_eq!(lat.count(LinkClass::InterCut), 4);
        assert_eq!(lat.count(LinkClass::IntraCut), 4);
        assert_eq!(lat.links().len(), 2 * 2 * 4 * 8);
    }

    #[test]
    fn full_cut_in_three_dimensions() {
        let spec = LatticeSpec::new(3, 4, 8, 2, 0.22);
        let lat = build_replica_lattice(spec, CutSpec::new(4)).unwrap();
        assert_eq!(lat.count(LinkClass::InterCut), 32);
        assert_eq!(lat.count(LinkClass::IntraCut), 0);
        assert_eq!(lat.links().len(), 3 * 2 * 16 * 8);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(matches!(
            build_replica_lattice(spec2(4, 8, 2), CutSpec::new(5)),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            build_replica_lattice(spec2(4, 8, 1), CutSpec::new(1)),
            Err(Error::Geometry(_))
        ));
        assert!(build_replica_lattice(spec2(1, 8, 2), CutSpec::new(0)).is_err());
    }

    #[test]
    fn every_site_has_2d_links_and_no_duplicates() {
        for (spec, l) in [
            (spec2(3, 4, 2), 1),
            (spec2(5, 6, 3), 3),
            (LatticeSpec::new(3, 3, 4, 2, 0.2), 2),
        ] {
            let lat = build_replica_lattice(spec, CutSpec::new(l)).unwrap();
            let mut degree = vec![0usize; lat.n_sites()];
            let mut seen = HashSet::new();
            for link in lat.links() {
                degree[link.a as usize] += 1;
                degree[link.b as usize] += 1;
                assert!(seen.insert((link.a, link.b)), "duplicate link {link:?}");
            }
            assert!(degree.iter().all(|&d| d == 2 * spec.dim));
        }
    }

    #[test]
    fn inter_links_are_cyclic() {
        let spec = spec2(3, 4, 3);
        let lat = build_replica_lattice(spec, CutSpec::new(3)).unwrap();
        let per_replica = spec.replica_sites() as u32;
        for link in lat.links().iter().filter(|l| l.class == LinkClass::InterCut) {
            let ka = link.a / per_replica;
            let kb = link.b / per_replica;
            assert_eq!(kb, (ka + 1) % 3);
        }
    }

    #[test]
    fn edge_link_counts() {
        let lat = build_replica_lattice(spec2(5, 4, 2), CutSpec::new(2)).unwrap();
        assert_eq!(lat.edge_links_for_step(CutStep::Grow).unwrap().len(), 4);
        assert_eq!(lat.edge_links_for_step(CutStep::Shrink).unwrap().len(), 4);

        let lat = build_replica_lattice(spec2(5, 4, 3), CutSpec::new(1)).unwrap();
        assert_eq!(lat.edge_links_for_step(CutStep::Grow).unwrap().len(), 6);

        let spec = LatticeSpec::new(3, 24, 4, 2, 0.22);
        let lat = build_replica_lattice(spec, CutSpec::new(5)).unwrap();
        assert_eq!(lat.edge_links_for_step(CutStep::Grow).unwrap().len(), 96);
    }

    #[test]
    fn edge_links_reject_out_of_range_steps() {
        let lat = build_replica_lattice(spec2(4, 4, 2), CutSpec::new(4)).unwrap();
        assert!(lat.edge_links_for_step(CutStep::Grow).is_err());
        let lat = build_replica_lattice(spec2(4, 4, 2), CutSpec::new(0)).unwrap();
        assert!(lat.edge_links_for_step(CutStep::Shrink).is_err());
    }

    #[test]
    fn growing_the_cut_moves_exactly_the_edge_links() {
        for (spec, l) in [(spec2(4, 4, 2), 1), (LatticeSpec::new(3, 3, 4, 3, 0.2), 1)] {
            let before = build_replica_lattice(spec, CutSpec::new(l)).unwrap();
            let after = build_replica_lattice(spec, CutSpec::new(l + 1)).unwrap();
            let edge = before.edge_links_for_step(CutStep::Grow).unwrap();
            let set = |lat: &ReplicaLattice| -> HashSet<Link> { lat.links().iter().copied().collect() };
            let (sb, sa) = (set(&before), set(&after));
            let removed: HashSet<_> = sb.difference(&sa).copied().collect();
            let added: HashSet<_> = sa.difference(&sb).copied().collect();
            assert_eq!(removed.len() + added.len(), spec.varied_links());
            assert!(removed.iter().all(|l| l.class == LinkClass::IntraCut));
            assert!(added.iter().all(|l| l.class == LinkClass::InterCut));
            for e in &edge {
                let link = Link { a: e.a, b: e.b, class: e.class };
                match e.class {
                    LinkClass::IntraCut => assert!(removed.contains(&link)),
                    LinkClass::InterCut => assert!(added.contains(&link)),
                    LinkClass::Bulk => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn dual_beta_values() {
        let bc = 0.5 * (1.0 + 2f64.sqrt()).ln();
        assert!((dual_beta(bc).unwrap() - bc).abs() < 1e-14);
        assert!((BETA_C_2D - bc).abs() < 1e-15);
        // atanh(e^-2) evaluated directly: 0.5 * ln((1 + e^-2) / (1 - e^-2))
        let e = (-2.0f64).exp();
        let expected = 0.5 * ((1.0 + e) / (1.0 - e)).ln();
        assert!((dual_beta(1.0).unwrap() - expected).abs() < 1e-15);
        assert!((dual_beta(1.0).unwrap() - 0.136_170_734).abs() < 1e-8);
        let twice = dual_beta(dual_beta(0.3).unwrap()).unwrap();
        assert!((twice - 0.3).abs() < 1e-12);
        assert!(dual_beta(0.0).is_err());
        assert!(dual_beta(-1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn link_count_identity(dim in 2usize..=3, l in 2usize..5, lt in 2usize..5, n in 2usize..4, cut in 0usize..5) {
            let spec = LatticeSpec::new(dim, l, lt, n, 0.3);
            let cut = cut.min(l);
            let lat = build_replica_lattice(spec, CutSpec::new(cut)).unwrap();
            proptest::prop_assert_eq!(lat.links().len(), dim * n * spec.slice_sites() * lt);
            proptest::prop_assert_eq!(lat.count(LinkClass::InterCut), cut * spec.column_sites() * n);
        }

        #[test]
        fn dual_is_decreasing_involution(b in 0.01f64..3.0, d in 0.001f64..0.5) {
            let once = dual_beta(b).unwrap();
            proptest::prop_assert!((dual_beta(once).unwrap() - b).abs() < 1e-9 * (1.0 + b));
            proptest::prop_assert!(dual_beta(b + d).unwrap() < once);
        }
    }
}
