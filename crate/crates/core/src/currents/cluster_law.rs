//! Exact law of a double-current cluster by subset recursion over vertices.
//!
//! For currents `n1, n2` with sources `A, B`, the cluster of `x` in
//! `n1 + n2` equals `S` exactly when the pair restricted to `S` spans `S`,
//! nothing crosses the boundary of `S`, and the pair is unconstrained on the
//! complement. With `z_R(a)` the source-constrained sum on the subgraph
//! induced by `R`,
//!
//! `P[C(x) = S] = Zconn(S) z_{S^c}(A cap S^c) z_{S^c}(B cap S^c) / (z_V(A) z_V(B))`
//!
//! where `Zconn` follows from `z_S(A cap S) z_S(B cap S) = sum_{T} Zconn(T) z..(S \ T)`.
//! The cost is `3^|V|`, independent of the number of edges.

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::ising_exact::KahanSum;

use super::SourceSet;

/// Vertex cap for the subset recursion.
pub const CLUSTER_LAW_VERTEX_CAP: usize = 18;

fn check(g: &CouplingGraph, beta: f64) -> Result<()> {
    if g.n_vertices() > CLUSTER_LAW_VERTEX_CAP {
        return Err(Error::EnumerationCap { unit: "vertices", size: g.n_vertices(), cap: CLUSTER_LAW_VERTEX_CAP });
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// `z_R(a cap R)` for every vertex subset `R` and every source mask `a`:
/// `2^{-|R|} sum_{sigma on R} sigma_a exp(beta sum_{e in E(R)} J_e sigma sigma)`.
pub fn restricted_partition_functions(g: &CouplingGraph, beta: f64, sources: &[u64]) -> Result<Vec<Vec<f64>>> {
    check(g, beta)?;
    let n = g.n_vertices();
    let size = 1usize << n;
    let mut out = vec![vec![0.0f64; size]; sources.len()];
    let mut spin = vec![1i8; n];
    let mut verts = Vec::with_capacity(n);
    for r in 0..size {
        verts.clear();
        verts.extend((0..n).filter(|&v| r >> v & 1 == 1));
        let inside = |w: usize| r >> w & 1 == 1;
        let top: f64 = verts
            .iter()
            .flat_map(|&v| g.neighbors(v).iter().filter(move |&&(w, _)| w > v && inside(w)))
            .map(|&(_, e)| beta * g.edge(e).j)
            .sum();
        for &v in &verts {
            spin[v] = 1;
        }
        let mut acc = vec![KahanSum::default(); sources.len()];
        let mut log_w = top;
        let mut down = 0u64;
        for a in acc.iter_mut() {
            a.add(1.0);
        }
        for k in 1..1usize << verts.len() {
            let v = verts[k.trailing_zeros() as usize];
            let local: f64 = g
                .neighbors(v)
                .iter()
                .filter(|&&(w, _)| inside(w))
                .map(|&(w, e)| g.edge(e).j * spin[w] as f64)
                .sum();
            log_w -= 2.0 * beta * spin[v] as f64 * local;
            spin[v] = -spin[v];
            down ^= 1 << v;
            let w = (log_w - top).exp();
            for (a, &src) in acc.iter_mut().zip(sources) {
                if (down & src).count_ones() % 2 == 0 {
                    a.add(w);
                } else {
                    a.add(-w);
                }
            }
        }
        let scale = (top - verts.len() as f64 * std::f64::consts::LN_2).exp();
        for (i, &src) in sources.iter().enumerate() {
            out[i][r] = if (src & r as u64).count_ones() % 2 == 1 { 0.0 } else { acc[i].value() * scale };
        }
    }
    Ok(out)
}

/// `P[C_{n1+n2}(x) = S]` for every vertex set `S`.
#[derive(Debug, Clone)]
pub struct ClusterLaw {
    n: usize,
    x: usize,
    probs: Vec<f64>,
}

impl ClusterLaw {
    pub fn new(g: &CouplingGraph, beta: f64, a: &SourceSet, b: &SourceSet, x: usize) -> Result<Self> {
        check(g, beta)?;
        let n = g.n_vertices();
        if x >= n || a.vertices().iter().chain(b.vertices()).any(|&v| v >= n) {
            return Err(Error::InvalidArgument("vertex outside the graph".into()));
        }
        let z = restricted_partition_functions(g, beta, &[a.mask(), b.mask()])?;
        let size = 1usize << n;
        let free: Vec<f64> = (0..size).map(|r| z[0][r] * z[1][r]).collect();
        let full = size - 1;
        if !(free[full] > 0.0) {
            let mut v = a.vertices().to_vec();
            v.extend_from_slice(b.vertices());
            return Err(Error::EmptySector(v));
        }
        let mut conn = vec![0.0f64; size];
        for s in 1..size {
            let anchor = s & s.wrapping_neg();
            let rest = s ^ anchor;
            let mut acc = KahanSum::default();
            acc.add(free[s]);
            // Proper subsets T of S containing the anchor.
            let mut t = rest;
            while t != 0 {
                t = (t - 1) & rest;
                let tt = t | anchor;
                acc.add(-conn[tt] * free[s ^ tt]);
            }
            conn[s] = acc.value();
        }
        let mut probs = vec![0.0f64; size];
        for s in 0..size {
            if s >> x & 1 == 1 {
                probs[s] = (conn[s] * free[full ^ s] / free[full]).max(0.0);
            }
        }
        Ok(ClusterLaw { n, x, probs })
    }

    pub fn root(&self) -> usize {
        self.x
    }

    /// `P[C(x) = S]` indexed by the vertex bitmask of `S`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<KahanSum>().value()
    }

    /// `P[y in C(x)]`.
    pub fn connection_probability(&self, y: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(s, _)| s >> y & 1 == 1)
            .map(|(_, &p)| p)
            .collect::<KahanSum>()
            .value()
    }

    /// `P[C(x) meets the vertex mask `set`]`.
    pub fn hit_probability(&self, set: u64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(s, _)| *s as u64 & set != 0)
            .map(|(_, &p)| p)
            .collect::<KahanSum>()
            .value()
    }

    /// `P[C(x) subset R]` for every `R`, by subset-sum transform.
    pub fn contained_in(&self) -> Vec<f64> {
        let mut f = self.probs.clone();
        for v in 0..self.n {
            let bit = 1usize << v;
            for m in 0..f.len() {
                if m & bit != 0 {
                    f[m] += f[m ^ bit];
                }
            }
        }
        f
    }
}

/// Exact statistics of `Q = C_{n1+n3}(x1) cap C_{n2+n4}(x3)` with sources
/// `dn1 = {x1, x2}`, `dn2 = {x3, x4}`, `dn3 = dn4 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionExact {
    pub p_nonempty: f64,
    pub mean_size: f64,
}

impl IntersectionExact {
    pub fn compute(g: &CouplingGraph, beta: f64, x: [usize; 4]) -> Result<Self> {
        let empty = SourceSet::empty();
        let l1 = ClusterLaw::new(g, beta, &SourceSet::pair(x[0], x[1]), &empty, x[0])?;
        let l2 = ClusterLaw::new(g, beta, &SourceSet::pair(x[2], x[3]), &empty, x[2])?;
        let inside2 = l2.contained_in();
        let full = (1usize << g.n_vertices()) - 1;
        let disjoint: KahanSum = l1
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| p * inside2[full ^ s])
            .collect();
        let mean: KahanSum = (0..g.n_vertices())
            .map(|v| l1.connection_probability(v) * l2.connection_probability(v))
            .collect();
        Ok(IntersectionExact { p_nonempty: (1.0 - disjoint.value()).clamp(0.0, 1.0), mean_size: mean.value() })
    }

    pub fn mean_size_given_nonempty(&self) -> f64 {
        self.mean_size / self.p_nonempty
    }
}
