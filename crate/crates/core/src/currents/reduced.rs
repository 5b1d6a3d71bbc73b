use rayon::prelude::*;

use super::events::{ReplicaEvent, Topology, Traces};
use super::{cosh_m1, SourceSet};
use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::ising_exact::KahanSum;

/// Largest edge count for single-replica reduced enumeration.
pub const REDUCED_EDGE_CAP: usize = 18;
/// Largest number of weighted terms in a multi-replica product enumeration.
pub const PRODUCT_TERM_CAP: u64 = 400_000_000;

/// Law of the support of a source-constrained current.
///
/// `weights[M]` is the total weight of currents with `supp n = M` and
/// `dn = A`, i.e. the sum over odd sets `eta subset M` with boundary `A` of
/// `prod_{eta} sinh(beta J) prod_{M \ eta} (cosh(beta J) - 1)`.
#[derive(Debug, Clone)]
pub struct SupportDistribution {
    pub n_edges: usize,
    pub weights: Vec<f64>,
    pub total: f64,
}

impl SupportDistribution {
    /// `(mask, probability)` pairs with non-zero weight.
    pub fn normalized_support(&self) -> Vec<(u64, f64)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(m, &w)| (m as u64, w / self.total))
            .collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn check_sources(g: &CouplingGraph, a: &SourceSet) -> Result<()> {
    if let Some(&x) = a.vertices().iter().find(|&&x| x >= g.n_vertices()) {
        return Err(Error::InvalidArgument(format!("source {x} is not a vertex")));
    }
    Ok(())
}

pub fn support_distribution(g: &CouplingGraph, beta: f64, a: &SourceSet) -> Result<SupportDistribution> {
    let all = if g.n_edges() >= 64 { u64::MAX } else { (1u64 << g.n_edges()) - 1 };
    support_distribution_masked(g, beta, a, all, REDUCED_EDGE_CAP)
}

/// As [`support_distribution`], with every edge outside `allowed` forced to zero.
pub(crate) fn support_distribution_masked(
    g: &CouplingGraph,
    beta: f64,
    a: &SourceSet,
    allowed: u64,
    cap: usize,
) -> Result<SupportDistribution> {
    check_beta(beta)?;
    check_sources(g, a)?;
    let ne = g.n_edges();
    if ne > cap || g.n_vertices() > 64 {
        return Err(Error::EnumerationCap { unit: "edges", size: ne, cap });
    }
    let size = 1usize << ne;
    let target = a.mask();
    let mut boundary = vec![0u64; size];
    let mut w = vec![0.0f64; size];
    let s: Vec<f64> = g.edges().iter().map(|e| (beta * e.j).sinh()).collect();
    let c: Vec<f64> = g.edges().iter().map(|e| cosh_m1(beta * e.j)).collect();
    // w starts as prod_{eta} sinh on odd sets with the right boundary.
    let mut prod = vec![0.0f64; size];
    prod[0] = 1.0;
    if target == 0 {
        w[0] = 1.0;
    }
    for m in 1..size {
        let e = m.trailing_zeros() as usize;
        let rest = m & (m - 1);
        let edge = g.edge(e);
        boundary[m] = boundary[rest] ^ (1u64 << edge.u) ^ (1u64 << edge.v);
        prod[m] = prod[rest] * s[e];
        if boundary[m] == target && (m as u64) & !allowed == 0 {
            w[m] = prod[m];
        }
    }
    drop(prod);
    drop(boundary);
    for e in 0..ne {
        if allowed >> e & 1 == 0 {
            continue;
        }
        let bit = 1usize << e;
        let ce = c[e];
        for m in 0..size {
            if m & bit != 0 {
                w[m] += w[m ^ bit] * ce;
            }
        }
    }
    let total = w.iter().copied().collect::<KahanSum>().value();
    Ok(SupportDistribution { n_edges: ne, weights: w, total })
}

/// `sum_{dn = A} w(n)`, exactly. Zero when `A` cannot be a source set.
pub fn constrained_sum(g: &CouplingGraph, beta: f64, a: &SourceSet) -> Result<f64> {
    check_beta(beta)?;
    check_sources(g, a)?;
    if a.len() % 2 == 1 {
        return Ok(0.0);
    }
    Ok(support_distribution(g, beta, a)?.total)
}

/// Law of the union of two independent supports, both given as normalized
/// `(mask, probability)` lists.
pub(crate) fn or_convolve(p: &[(u64, f64)], q: &[(u64, f64)], n_edges: usize) -> Vec<(u64, f64)> {
    if (p.len() as u64) * (q.len() as u64) <= 1 << 24 {
        or_convolve_direct(p, q, n_edges)
    } else {
        or_convolve_zeta(p, q, n_edges)
    }
}

fn sparse(out: Vec<f64>) -> Vec<(u64, f64)> {
    out.into_iter()
        .enumerate()
        .filter(|(_, w)| *w > 0.0)
        .map(|(m, w)| (m as u64, w))
        .collect()
}

fn or_convolve_direct(p: &[(u64, f64)], q: &[(u64, f64)], n_edges: usize) -> Vec<(u64, f64)> {
    let mut out = vec![0.0f64; 1usize << n_edges];
    for &(m1, w1) in p {
        for &(m2, w2) in q {
            out[(m1 | m2) as usize] += w1 * w2;
        }
    }
    sparse(out)
}

/// Subset-sum transform, pointwise product, Moebius inversion.
fn or_convolve_zeta(p: &[(u64, f64)], q: &[(u64, f64)], n_edges: usize) -> Vec<(u64, f64)> {
    let size = 1usize << n_edges;
    let zeta = |list: &[(u64, f64)]| {
        let mut f = vec![0.0f64; size];
        for &(m, w) in list {
            f[m as usize] += w;
        }
        for e in 0..n_edges {
            let bit = 1usize << e;
            for m in 0..size {
                if m & bit != 0 {
                    f[m] += f[m ^ bit];
                }
            }
        }
        f
    };
    let fq = zeta(q);
    let mut out = zeta(p);
    for (o, b) in out.iter_mut().zip(&fq) {
        *o *= b;
    }
    for e in 0..n_edges {
        let bit = 1usize << e;
        for m in 0..size {
            if m & bit != 0 {
                out[m] -= out[m ^ bit];
            }
        }
    }
    // Rounding can leave tiny negative residues on empty masks.
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    sparse(out)
}

fn normalized(g: &CouplingGraph, beta: f64, a: &SourceSet) -> Result<Vec<(u64, f64)>> {
    let d = support_distribution(g, beta, a)?;
    if a.len() % 2 == 1 || !(d.total > 0.0) {
        return Err(Error::EmptySector(a.vertices().to_vec()));
    }
    Ok(d.normalized_support())
}

/// Expectation of `f` over independent supports with the given laws.
fn product_expectation(
    topo: &Topology,
    laws: &[Vec<(u64, f64)>],
    f: &(dyn Fn(&Traces) -> f64 + Sync),
) -> Result<f64> {
    let terms = laws.iter().fold(1u64, |acc, l| acc.saturating_mul(l.len() as u64));
    if terms > PRODUCT_TERM_CAP {
        return Err(Error::EnumerationCap {
            unit: "replica terms",
            size: terms.min(usize::MAX as u64) as usize,
            cap: PRODUCT_TERM_CAP as usize,
        });
    }
    if laws.is_empty() {
        return Ok(f(&Traces { topo, masks: &[] }));
    }
    let k = laws.len();
    let partial: Vec<f64> = laws[0]
        .par_iter()
        .map(|&(m0, p0)| {
            let mut masks = vec![0u64; k];
            masks[0] = m0;
            let mut acc = KahanSum::default();
            recurse(topo, laws, 1, p0, &mut masks, f, &mut acc);
            acc.value()
        })
        .collect();
    Ok(partial.into_iter().collect::<KahanSum>().value())
}

fn recurse(
    topo: &Topology,
    laws: &[Vec<(u64, f64)>],
    depth: usize,
    weight: f64,
    masks: &mut Vec<u64>,
    f: &(dyn Fn(&Traces) -> f64 + Sync),
    acc: &mut KahanSum,
) {
    if depth == laws.len() {
        let v = f(&Traces { topo, masks });
        if v != 0.0 {
            acc.add(weight * v);
        }
        return;
    }
    for &(m, p) in &laws[depth] {
        masks[depth] = m;
        recurse(topo, laws, depth + 1, weight * p, masks, f, acc);
    }
}

/// `E^{A_1,...,A_k}[f]` over independent source-constrained currents.
pub fn replica_expectation(
    g: &CouplingGraph,
    beta: f64,
    sources: &[SourceSet],
    f: impl Fn(&Traces) -> f64 + Sync,
) -> Result<f64> {
    let topo = Topology::new(g)?;
    let laws = sources.iter().map(|a| normalized(g, beta, a)).collect::<Result<Vec<_>>>()?;
    product_expectation(&topo, &laws, &f)
}

/// `P^{A_1,...,A_k}[event]`.
pub fn replica_probability(g: &CouplingGraph, beta: f64, sources: &[SourceSet], event: &ReplicaEvent) -> Result<f64> {
    replica_expectation(g, beta, sources, |t| if event.eval(t) { 1.0 } else { 0.0 })
}

/// Expectation of `f` where replicas are merged group-wise before `f` sees
/// them: `Traces::support(i)` is the support of the sum of group `i`.
pub fn grouped_expectation(
    g: &CouplingGraph,
    beta: f64,
    groups: &[Vec<SourceSet>],
    f: impl Fn(&Traces) -> f64 + Sync,
) -> Result<f64> {
    let topo = Topology::new(g)?;
    let ne = g.n_edges();
    let mut laws = Vec::with_capacity(groups.len());
    for group in groups {
        let mut law = vec![(0u64, 1.0)];
        for a in group {
            law = or_convolve(&law, &normalized(g, beta, a)?, ne);
        }
        laws.push(law);
    }
    product_expectation(&topo, &laws, &f)
}

pub fn grouped_probability(
    g: &CouplingGraph,
    beta: f64,
    groups: &[Vec<SourceSet>],
    event: &ReplicaEvent,
) -> Result<f64> {
    grouped_expectation(g, beta, groups, |t| if event.eval(t) { 1.0 } else { 0.0 })
}
