use super::events::{ReplicaEvent, Topology, Traces};
use super::reduced::{or_convolve, support_distribution_masked, REDUCED_EDGE_CAP};
use super::SourceSet;
use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::ising_exact::KahanSum;

/// Both sides of the switching identity, as unnormalized weighted sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingResult {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

impl SwitchingResult {
    pub fn relative_residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.abs_diff / scale
        }
    }
}

fn check_mask(topo: &Topology, b: &SourceSet) -> Result<u64> {
    if b.vertices().iter().any(|&x| x >= topo.n) {
        return Err(Error::InvalidArgument("source outside the graph".into()));
    }
    Ok(b.mask())
}

/// Whether some `{0,1}` current inside the edge set `support` has sources
/// exactly `B`: true iff every component of `support` holds an even number
/// of points of `B`.
pub fn in_switching_family(g: &CouplingGraph, support: u64, b: &SourceSet) -> Result<bool> {
    let topo = Topology::new(g)?;
    let bm = check_mask(&topo, b)?;
    Ok(component_parity_ok(&topo, support, bm))
}

pub(crate) fn component_parity_ok(topo: &Topology, support: u64, bm: u64) -> bool {
    let mut remaining = bm;
    while remaining != 0 {
        let x = remaining.trailing_zeros() as usize;
        let cl = topo.cluster(support, x);
        if (cl & bm).count_ones() % 2 == 1 {
            return false;
        }
        remaining &= !cl;
    }
    true
}

/// Same decision by enumerating every subset of `support`.
pub fn in_switching_family_bruteforce(g: &CouplingGraph, support: u64, b: &SourceSet) -> Result<bool> {
    let topo = Topology::new(g)?;
    let bm = check_mask(&topo, b)?;
    let mut sub = support;
    loop {
        let mut bd = 0u64;
        let mut es = sub;
        while es != 0 {
            let e = es.trailing_zeros() as usize;
            es &= es - 1;
            let (u, v) = topo.ends[e];
            bd ^= (1 << u) ^ (1 << v);
        }
        if bd == bm {
            return Ok(true);
        }
        if sub == 0 {
            return Ok(false);
        }
        sub = (sub - 1) & support;
    }
}

/// Edge mask of `g2` inside `g1`, requiring identical couplings.
fn embed(g1: &CouplingGraph, g2: &CouplingGraph) -> Result<u64> {
    if g1.n_vertices() != g2.n_vertices() {
        return Err(Error::InvalidArgument("switching graphs must share the vertex set".into()));
    }
    let mut mask = 0u64;
    for e in g2.edges() {
        let i = g1
            .edge_between(e.u, e.v)
            .ok_or_else(|| Error::InvalidArgument(format!("edge ({}, {}) of G2 is not in G1", e.u, e.v)))?;
        let j1 = g1.edge(i).j;
        if (j1 - e.j).abs() > 1e-15 * j1.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("edge ({}, {}) has different couplings in G1 and G2", e.u, e.v)));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

/// Evaluates both sides of the switching identity for a functional `F` of
/// the support of `n1 + n2` (presented to `F` as replica 0):
///
/// `sum_{dn1=A on G1, dn2=B on G2} F w w`
/// against
/// `sum_{dn1=A^B on G1, dn2=0 on G2} F w w 1[n1+n2 in F_B]`.
pub fn switching_check(
    g1: &CouplingGraph,
    g2: &CouplingGraph,
    beta: f64,
    a: &SourceSet,
    b: &SourceSet,
    f: &ReplicaEvent,
) -> Result<SwitchingResult> {
    let topo = Topology::new(g1)?;
    let e2 = embed(g1, g2)?;
    let bm = check_mask(&topo, b)?;
    let all = if g1.n_edges() >= 64 { u64::MAX } else { (1u64 << g1.n_edges()) - 1 };
    let ne = g1.n_edges();
    let raw = |src: &SourceSet, allowed: u64| -> Result<Vec<(u64, f64)>> {
        let d = support_distribution_masked(g1, beta, src, allowed, REDUCED_EDGE_CAP)?;
        Ok(d.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(m, &w)| (m as u64, w)).collect())
    };
    let eval = |m: u64| f.eval(&Traces { topo: &topo, masks: &[m] });

    let left = or_convolve(&raw(a, all)?, &raw(b, e2)?, ne);
    let lhs: KahanSum = left.iter().filter(|&&(m, _)| eval(m)).map(|&(_, w)| w).collect();

    let right = or_convolve(&raw(&a.symmetric_difference(b), all)?, &raw(&SourceSet::empty(), e2)?, ne);
    let rhs: KahanSum = right
        .iter()
        .filter(|&&(m, _)| component_parity_ok(&topo, m & e2, bm) && eval(m))
        .map(|&(_, w)| w)
        .collect();

    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(SwitchingResult { lhs, rhs, abs_diff: (lhs - rhs).abs() })
}
