//! The random current representation.
//!
//! A current assigns a non-negative integer to every edge; its weight is
//! `prod_e (beta J_e)^{n_e} / n_e!` and its sources are the vertices of odd
//! incident flux. Every event used here depends only on supports, so the
//! infinite sum over each `n_e` collapses to three reduced states (see
//! [`ReducedEdgeState`]) and exact sums become finite enumerations.

mod cluster_law;
mod events;
mod reduced;
mod switching;

pub use cluster_law::{restricted_partition_functions, ClusterLaw, IntersectionExact, CLUSTER_LAW_VERTEX_CAP};
pub use events::{ReplicaEvent, Traces};
pub use reduced::{
    constrained_sum, grouped_expectation, grouped_probability, replica_expectation, replica_probability,
    support_distribution, SupportDistribution, PRODUCT_TERM_CAP, REDUCED_EDGE_CAP,
};
pub use switching::{in_switching_family, in_switching_family_bruteforce, switching_check, SwitchingResult};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;

/// Parity class of a single edge occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReducedEdgeState {
    Zero,
    EvenPos,
    Odd,
}

impl ReducedEdgeState {
    pub fn of(n: u64) -> Self {
        match n {
            0 => ReducedEdgeState::Zero,
            n if n % 2 == 0 => ReducedEdgeState::EvenPos,
            _ => ReducedEdgeState::Odd,
        }
    }

    /// Summed weight `sum_{n in class} x^n / n!` at `x = beta J`.
    pub fn weight(self, bj: f64) -> f64 {
        match self {
            ReducedEdgeState::Zero => 1.0,
            ReducedEdgeState::EvenPos => cosh_m1(bj),
            ReducedEdgeState::Odd => bj.sinh(),
        }
    }

    pub fn is_occupied(self) -> bool {
        self != ReducedEdgeState::Zero
    }
}

/// `cosh(x) - 1` without cancellation for small `x`.
pub fn cosh_m1(x: f64) -> f64 {
    let h = (0.5 * x).sinh();
    2.0 * h * h
}

/// A set of source vertices, stored sorted and without repetition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SourceSet(Vec<usize>);

impl SourceSet {
    pub fn empty() -> Self {
        SourceSet(Vec::new())
    }

    /// Builds the parity set of a vertex multiset: repeated vertices cancel.
    pub fn from_parity(points: &[usize]) -> Self {
        let mut v = points.to_vec();
        v.sort_unstable();
        let mut out: Vec<usize> = Vec::with_capacity(v.len());
        for x in v {
            if out.last() == Some(&x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        SourceSet(out)
    }

    pub fn pair(x: usize, y: usize) -> Self {
        Self::from_parity(&[x, y])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn symmetric_difference(&self, other: &SourceSet) -> SourceSet {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        Self::from_parity(&all)
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &x| m | 1u64 << x)
    }

    pub fn from_mask(mask: u64) -> Self {
        SourceSet((0..64).filter(|&x| mask >> x & 1 == 1).collect())
    }
}

/// Integer occupation numbers on the edges of a host graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentConfig {
    pub n: Vec<u64>,
}

impl CurrentConfig {
    pub fn zero(g: &CouplingGraph) -> Self {
        CurrentConfig { n: vec![0; g.n_edges()] }
    }

    fn check(&self, g: &CouplingGraph) -> Result<()> {
        if self.n.len() != g.n_edges() {
            return Err(Error::InvalidArgument(format!(
                "current has {} entries for {} edges",
                self.n.len(),
                g.n_edges()
            )));
        }
        Ok(())
    }

    /// Vertices with odd incident flux.
    pub fn sources(&self, g: &CouplingGraph) -> Result<SourceSet> {
        self.check(g)?;
        let mut odd = vec![false; g.n_vertices()];
        for (e, &k) in g.edges().iter().zip(&self.n) {
            if k % 2 == 1 {
                odd[e.u] ^= true;
                odd[e.v] ^= true;
            }
        }
        Ok(SourceSet(odd.iter().enumerate().filter(|(_, &o)| o).map(|(x, _)| x).collect()))
    }

    /// `prod_e (beta J_e)^{n_e} / n_e!`.
    pub fn weight(&self, g: &CouplingGraph, beta: f64) -> Result<f64> {
        self.check(g)?;
        let mut log_w = 0.0;
        for (e, &k) in g.edges().iter().zip(&self.n) {
            if k == 0 {
                continue;
            }
            let bj = beta * e.j;
            if bj == 0.0 {
                return Ok(0.0);
            }
            log_w += k as f64 * bj.ln() - ln_factorial(k);
        }
        Ok(log_w.exp())
    }

    pub fn reduced(&self) -> Vec<ReducedEdgeState> {
        self.n.iter().map(|&k| ReducedEdgeState::of(k)).collect()
    }

    /// Edge indices with non-zero occupation.
    pub fn support(&self) -> Vec<usize> {
        self.n.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, _)| i).collect()
    }
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Connected component of `x` in the subgraph spanned by the occupied edges.
/// The result is sorted.
pub fn cluster(g: &CouplingGraph, occupied: impl Fn(usize) -> bool, x: usize) -> Vec<usize> {
    let mut seen = vec![false; g.n_vertices()];
    let mut queue = VecDeque::from([x]);
    seen[x] = true;
    let mut out = vec![x];
    while let Some(v) = queue.pop_front() {
        for &(w, e) in g.neighbors(v) {
            if !seen[w] && occupied(e) {
                seen[w] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Cluster of `x` in the union of the supports of several currents.
pub fn cluster_of_sum(g: &CouplingGraph, currents: &[&CurrentConfig], x: usize) -> Vec<usize> {
    cluster(g, |e| currents.iter().any(|c| c.n[e] > 0), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn edge(j: f64) -> CouplingGraph {
        CouplingGraph::from_triples(2, &[(0, 1, j)]).unwrap()
    }

    #[test]
    fn sources_examples() {
        let g = edge(1.0);
        assert!(CurrentConfig { n: vec![0] }.sources(&g).unwrap().is_empty());
        assert_eq!(CurrentConfig { n: vec![1] }.sources(&g).unwrap().vertices(), &[0, 1]);
        assert!(CurrentConfig { n: vec![2] }.sources(&g).unwrap().is_empty());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(CurrentConfig { n: vec![0] }.weight(&edge(1.0), 1.0).unwrap(), 1.0);
        assert_relative_eq!(CurrentConfig { n: vec![2] }.weight(&edge(1.0), 1.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(
            CurrentConfig { n: vec![3] }.weight(&edge(2.0), 1.0).unwrap(),
            8.0 / 6.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn reduced_weights_partition_cosh() {
        for bj in [0.0, 1e-9, 0.3, 1.7] {
            let z = ReducedEdgeState::Zero.weight(bj) + ReducedEdgeState::EvenPos.weight(bj);
            assert_relative_eq!(z, f64::cosh(bj), max_relative = 1e-15);
            assert!(ReducedEdgeState::Odd.weight(bj) >= 0.0);
        }
    }

    #[test]
    fn cluster_examples() {
        let path = CouplingGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(cluster(&path, |_| false, 1), vec![1]);
        assert_eq!(cluster(&path, |e| e == 0, 0), vec![0, 1]);
        assert_eq!(cluster(&path, |_| true, 0), vec![0, 1, 2]);
    }

    #[test]
    fn source_set_parity() {
        let a = SourceSet::from_parity(&[3, 1, 3, 2]);
        assert_eq!(a.vertices(), &[1, 2]);
        let b = SourceSet::pair(2, 5);
        assert_eq!(a.symmetric_difference(&b).vertices(), &[1, 5]);
        assert_eq!(SourceSet::from_mask(a.mask()), a);
    }
}
