use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fft::TorusCorrelator;
use super::rng::chain_rng;
use super::stats::{Binner, Estimate};
use super::{s2_name, Observable, RunConfig};
use crate::currents::{CurrentConfig, SourceSet};
use crate::error::{Error, Result};
use crate::graph::{Boundary, CouplingGraph};

/// Sweeps a chain may spend waiting for a closed configuration.
const MAX_WAIT_SWEEPS: u64 = 1_000_000;

/// Current with two movable defects. Closed when the defects coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WormState {
    n: Vec<u64>,
    heads: [usize; 2],
    parity: Vec<bool>,
    sources: Vec<bool>,
}

impl WormState {
    pub fn occupations(&self) -> &[u64] {
        &self.n
    }

    pub fn heads(&self) -> [usize; 2] {
        self.heads
    }

    pub fn is_closed(&self) -> bool {
        self.heads[0] == self.heads[1]
    }

    /// Cached parity matches `n`, and `dn = A xor {head, tail}`.
    pub fn is_consistent(&self, g: &CouplingGraph) -> bool {
        let mut odd = vec![false; g.n_vertices()];
        for (e, &k) in g.edges().iter().zip(&self.n) {
            if k % 2 == 1 {
                odd[e.u] ^= true;
                odd[e.v] ^= true;
            }
        }
        let mut expect = self.sources.clone();
        expect[self.heads[0]] ^= true;
        expect[self.heads[1]] ^= true;
        odd == self.parity && odd == expect
    }

    /// `ln prod_e (beta J_e)^{n_e} / n_e!`.
    pub fn log_weight(&self, bj: &[f64]) -> f64 {
        self.n
            .iter()
            .zip(bj)
            .filter(|(&k, _)| k > 0)
            .map(|(&k, &b)| k as f64 * b.ln() - crate::currents::ln_factorial(k))
            .sum()
    }

    pub fn current(&self) -> CurrentConfig {
        CurrentConfig { n: self.n.clone() }
    }
}

/// Metropolis worm chain on the currents with `dn = A` (closed) or
/// `dn = A xor {head, tail}` (open).
pub struct WormChain<'g> {
    g: &'g CouplingGraph,
    bj: Vec<f64>,
    state: WormState,
    rng: ChaCha8Rng,
}

impl<'g> WormChain<'g> {
    pub fn new(g: &'g CouplingGraph, beta: f64, a: &SourceSet, seed: u64, stream: u64) -> Result<Self> {
        if a.len() % 2 == 1 {
            return Err(Error::OddSources(a.len()));
        }
        let nv = g.n_vertices();
        if nv == 0 {
            return Err(Error::InvalidGraph("worm needs at least one vertex".into()));
        }
        if let Some(&x) = a.vertices().iter().find(|&&x| x >= nv) {
            return Err(Error::InvalidArgument(format!("source {x} is not a vertex")));
        }
        let bj: Vec<f64> = g.edges().iter().map(|e| beta * e.j).collect();
        let mut n = vec![0u64; g.n_edges()];
        let mut sources = vec![false; nv];
        for &x in a.vertices() {
            sources[x] = true;
        }
        // Pair the sources component by component along BFS paths.
        let mut pending = sources.clone();
        for &x in a.vertices() {
            if !pending[x] {
                continue;
            }
            let mut prev = vec![usize::MAX; nv];
            let mut seen = vec![false; nv];
            seen[x] = true;
            let mut queue = VecDeque::from([x]);
            let mut target = None;
            while let Some(v) = queue.pop_front() {
                if v != x && pending[v] {
                    target = Some(v);
                    break;
                }
                for &(w, e) in g.neighbors(v) {
                    if !seen[w] && bj[e] > 0.0 {
                        seen[w] = true;
                        prev[w] = e;
                        queue.push_back(w);
                    }
                }
            }
            let Some(mut v) = target else {
                return Err(Error::EmptySector(a.vertices().to_vec()));
            };
            pending[x] = false;
            pending[v] = false;
            while v != x {
                let e = prev[v];
                n[e] += 1;
                v = g.edge(e).other(v);
            }
        }
        let state = WormState { n, heads: [0, 0], parity: sources.clone(), sources };
        Ok(WormChain { g, bj, state, rng: chain_rng(seed, stream) })
    }

    pub fn state(&self) -> &WormState {
        &self.state
    }

    /// `pi(s') q(s' -> s) / (pi(s) q(s -> s'))` for moving defect `head` across
    /// the `k`-th edge at its position, incrementing when `up`.
    pub fn shift_ratio(&self, head: usize, k: usize, up: bool) -> f64 {
        let x = self.state.heads[head];
        let (y, e) = self.g.neighbors(x)[k];
        let w = if up {
            self.bj[e] / (self.state.n[e] + 1) as f64
        } else if self.state.n[e] == 0 {
            return 0.0;
        } else {
            self.state.n[e] as f64 / self.bj[e]
        };
        w * self.g.degree(x) as f64 / self.g.degree(y) as f64
    }

    fn apply_shift(&mut self, head: usize, k: usize, up: bool) {
        let x = self.state.heads[head];
        let (y, e) = self.g.neighbors(x)[k];
        if up {
            self.state.n[e] += 1;
        } else {
            self.state.n[e] -= 1;
        }
        self.state.parity[x] ^= true;
        self.state.parity[y] ^= true;
        self.state.heads[head] = y;
    }

    /// One shift attempt, followed by a uniform relocation of the closed
    /// defect pair when the result is closed.
    pub fn step(&mut self) {
        let head = self.rng.random_range(0..2);
        let x = self.state.heads[head];
        let deg = self.g.degree(x);
        if deg > 0 {
            let k = self.rng.random_range(0..deg);
            let up = self.rng.random::<bool>();
            let r = self.shift_ratio(head, k, up);
            if r >= 1.0 || self.rng.random::<f64>() < r {
                self.apply_shift(head, k, up);
            }
        }
        if self.state.is_closed() {
            let v = self.rng.random_range(0..self.g.n_vertices());
            self.state.heads = [v, v];
        }
    }

    /// `N` steps.
    pub fn sweep(&mut self) {
        for _ in 0..self.g.n_vertices() {
            self.step();
        }
    }

    /// Sweeps until the chain sits in the closed sector at a sweep boundary.
    pub fn sweep_to_closed(&mut self) -> Result<u64> {
        for k in 1..=MAX_WAIT_SWEEPS {
            self.sweep();
            if self.state.is_closed() {
                return Ok(k);
            }
        }
        Err(Error::NoConvergence(format!("worm did not close within {MAX_WAIT_SWEEPS} sweeps")))
    }
}

/// Estimates and retained closed-sector samples of a worm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormOutput {
    pub estimates: BTreeMap<String, Estimate>,
    pub measurements: u64,
    pub closed_samples: u64,
    #[serde(skip)]
    samples: Vec<Vec<u64>>,
}

impl WormOutput {
    /// Closed-sector occupations recorded at sweep boundaries.
    pub fn samples(&self) -> impl Iterator<Item = CurrentConfig> + '_ {
        self.samples.iter().map(|n| CurrentConfig { n: n.clone() })
    }

    pub fn get(&self, name: &str) -> Result<&Estimate> {
        self.estimates
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("run produced no estimate named {name}")))
    }
}

enum Tally {
    Pairs(Vec<(usize, usize)>),
    Distance(TorusCorrelator),
    Magnetization,
    Block(Vec<bool>),
    EdgeStates,
}

/// Samples currents with `dn = A`. Two-point ratios `Z_{A xor xy} / Z_A` come
/// from open/closed visit counts; edge marginals from closed snapshots.
pub fn worm_run(cfg: &RunConfig, a: &SourceSet) -> Result<WormOutput> {
    cfg.validate()?;
    let g = cfg.graph;
    let nv = g.n_vertices();
    let mut chain = WormChain::new(g, cfg.beta, a, cfg.seed, cfg.stream)?;

    // Channel 0: closed steps; channel 1: all steps.
    let mut tallies = Vec::new();
    let mut offsets = Vec::new();
    let mut width = 2;
    let mut pair_index: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut snapshot_width = 0;
    for o in &cfg.observables {
        offsets.push(width);
        match o {
            Observable::S2Pairs { pairs } => {
                for (k, &(x, y)) in pairs.iter().enumerate() {
                    pair_index.entry((x.min(y), x.max(y))).or_default().push(width + k);
                }
                width += pairs.len();
                tallies.push(Tally::Pairs(pairs.clone()));
            }
            Observable::S2Distance => {
                let spec = g
                    .lattice()
                    .filter(|s| s.bc == Boundary::Periodic)
                    .ok_or_else(|| Error::InvalidArgument("s2 by distance requires a periodic lattice".into()))?;
                let c = TorusCorrelator::new(*spec).unwrap();
                width += c.n_classes();
                tallies.push(Tally::Distance(c));
            }
            Observable::Magnetization => tallies.push(Tally::Magnetization),
            Observable::Block { sites } => {
                let mut inside = vec![false; nv];
                for &x in sites {
                    inside[x] = true;
                }
                width += 1;
                tallies.push(Tally::Block(inside));
            }
            Observable::EdgeStates => {
                snapshot_width = 2 * g.n_edges();
                tallies.push(Tally::EdgeStates);
            }
            other => {
                return Err(Error::InvalidArgument(format!("the worm sampler does not measure {other:?}")));
            }
        }
    }

    for _ in 0..cfg.thermalization_sweeps() {
        chain.sweep();
    }
    let total = cfg.measurement_sweeps();
    let bins = cfg.bins;
    let per_bin = total / bins as u64;
    let mut sums = vec![vec![0.0; width]; bins];
    let mut steps = vec![0u64; bins];
    let mut snap_sums = vec![vec![0.0; snapshot_width]; bins];
    let mut snap_counts = vec![0u64; bins];
    let mut samples = Vec::new();
    let mut row = vec![0.0; width];
    for s in 0..total {
        let b = ((s / per_bin) as usize).min(bins - 1);
        row.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..nv {
            chain.step();
            let [h0, h1] = chain.state.heads;
            row[1] += 1.0;
            if h0 == h1 {
                row[0] += 1.0;
            }
            if let Some(chs) = pair_index.get(&(h0.min(h1), h0.max(h1))) {
                for &c in chs {
                    row[c] += 1.0;
                }
            }
            for (t, &off) in tallies.iter().zip(&offsets) {
                match t {
                    Tally::Distance(c) => row[off + c.class_between(h0, h1)] += 1.0,
                    Tally::Block(inside) if inside[h0] && inside[h1] => row[off] += 1.0,
                    _ => {}
                }
            }
        }
        for (acc, v) in sums[b].iter_mut().zip(&row) {
            *acc += v;
        }
        steps[b] += nv as u64;
        if chain.state.is_closed() {
            snap_counts[b] += 1;
            if snapshot_width > 0 {
                let e = g.n_edges();
                for (i, &k) in chain.state.n.iter().enumerate() {
                    snap_sums[b][i] += (k > 0) as u8 as f64;
                    snap_sums[b][e + i] += (k % 2) as f64;
                }
            }
            if samples.len() < cfg.keep_samples {
                samples.push(chain.state.n.clone());
            }
        }
    }

    let binner = Binner::from_sums(sums, steps)?;
    let mut estimates = BTreeMap::new();
    let nb = binner.bins();
    let ns = total;
    let nf = nv as f64;
    let mut put = |name: String, (m, e): (f64, f64)| {
        estimates.insert(name, cfg.estimate(m, e, nb, ns));
    };
    for (t, &off) in tallies.iter().zip(&offsets) {
        match t {
            Tally::Pairs(pairs) => {
                for (k, &(x, y)) in pairs.iter().enumerate() {
                    let c = off + k;
                    let sym = if x == y { 1.0 } else { 0.5 };
                    put(s2_name(x, y), binner.jackknife(|m| sym * nf * m[c] / m[0]));
                }
            }
            Tally::Distance(corr) => {
                for (k, (&norm, &size)) in corr.class_norms2().iter().zip(corr.class_sizes()).enumerate() {
                    let c = off + k;
                    put(format!("s2_r2={norm}"), binner.jackknife(|m| m[c] / (m[0] * size as f64)));
                }
            }
            Tally::Magnetization => {
                put("chi".into(), binner.jackknife(|m| m[1] / m[0]));
                put("m2".into(), binner.jackknife(|m| m[1] / (m[0] * nf)));
            }
            Tally::Block(_) => put("block_m2".into(), binner.jackknife(|m| nf * m[off] / m[0])),
            Tally::EdgeStates => {}
        }
    }
    put("closed_fraction".into(), binner.channel(0));
    let closed_samples = snap_counts.iter().sum();
    if snapshot_width > 0 {
        let snaps = Binner::from_sums(snap_sums, snap_counts).map_err(|_| {
            Error::InvalidArgument("too few closed-sector snapshots to bin edge states".into())
        })?;
        let e = g.n_edges();
        for i in 0..e {
            put(format!("edge_occupied[{i}]"), snaps.channel(i));
            put(format!("edge_odd[{i}]"), snaps.channel(e + i));
        }
    }
    Ok(WormOutput { estimates, measurements: total, closed_samples, samples })
}

/// Monte Carlo statistics of `Q = C_{n1+n3}(x1) cap C_{n2+n4}(x3)` for four
/// independent currents with sources `{x1,x2}`, `{x3,x4}`, empty, empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionStats {
    pub p_nonempty: Estimate,
    pub mean_size: Estimate,
    pub mean_size_given_nonempty: Estimate,
}

fn cluster_mark(g: &CouplingGraph, n: &[&[u64]], x: usize, stamp: &mut [u32], tag: u32, stack: &mut Vec<usize>) {
    stack.clear();
    stack.push(x);
    stamp[x] = tag;
    while let Some(v) = stack.pop() {
        for &(w, e) in g.neighbors(v) {
            if stamp[w] != tag && n.iter().any(|c| c[e] > 0) {
                stamp[w] = tag;
                stack.push(w);
            }
        }
    }
}

pub fn intersection_stats(cfg: &RunConfig, x: [usize; 4]) -> Result<IntersectionStats> {
    cfg.validate()?;
    let g = cfg.graph;
    if let Some(&v) = x.iter().find(|&&v| v >= g.n_vertices()) {
        return Err(Error::InvalidArgument(format!("point {v} is not a vertex")));
    }
    let sources = [SourceSet::pair(x[0], x[1]), SourceSet::pair(x[2], x[3]), SourceSet::empty(), SourceSet::empty()];
    let mut chains = sources
        .iter()
        .enumerate()
        .map(|(i, a)| WormChain::new(g, cfg.beta, a, cfg.seed, 4 * cfg.stream + i as u64))
        .collect::<Result<Vec<_>>>()?;
    for c in chains.iter_mut() {
        for _ in 0..cfg.thermalization_sweeps() {
            c.sweep();
        }
    }
    let total = cfg.measurement_sweeps();
    let mut binner = Binner::new(2, cfg.bins, total)?;
    let nv = g.n_vertices();
    let (mut s1, mut s2) = (vec![0u32; nv], vec![0u32; nv]);
    let mut stack = Vec::new();
    for m in 0..total {
        for c in chains.iter_mut() {
            c.sweep_to_closed()?;
        }
        let tag = m as u32 + 1;
        let n: Vec<&[u64]> = chains.iter().map(|c| c.state.occupations()).collect();
        cluster_mark(g, &[n[0], n[2]], x[0], &mut s1, tag, &mut stack);
        cluster_mark(g, &[n[1], n[3]], x[2], &mut s2, tag, &mut stack);
        let q = s1.iter().zip(&s2).filter(|(&a, &b)| a == tag && b == tag).count() as f64;
        binner.push(&[(q > 0.0) as u8 as f64, q]);
    }
    let est = |(m, e): (f64, f64)| cfg.estimate(m, e, binner.bins(), total);
    Ok(IntersectionStats {
        p_nonempty: est(binner.channel(0)),
        mean_size: est(binner.channel(1)),
        mean_size_given_nonempty: est(binner.jackknife(|m| m[1] / m[0])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::{cosh_m1, support_distribution, IntersectionExact};
    use crate::graph::{build_lattice, LatticeSpec};
    use crate::ising_exact::{ExactGibbs, ThermoParams};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn edge() -> CouplingGraph {
        CouplingGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_edge_states() {
        let g = edge();
        let cfg = RunConfig::new(&g, 1.0, 40_000, 4).observe(Observable::EdgeStates);
        let out = worm_run(&cfg, &SourceSet::empty()).unwrap();
        assert_eq!(out.get("edge_odd[0]").unwrap().mean, 0.0);
        let p = cosh_m1(1.0) / 1f64.cosh();
        let occ = out.get("edge_occupied[0]").unwrap();
        assert!(occ.agrees_with(p, 4.0), "{occ:?} vs {p}");

        let out = worm_run(&cfg, &SourceSet::pair(0, 1)).unwrap();
        assert_eq!(out.get("edge_odd[0]").unwrap().mean, 1.0);
    }

    #[test]
    fn single_edge_two_point() {
        let g = edge();
        let cfg = RunConfig::new(&g, 0.5, 40_000, 8).observe(Observable::S2Pairs { pairs: vec![(0, 1), (1, 1)] });
        let out = worm_run(&cfg, &SourceSet::empty()).unwrap();
        assert!(out.get("s2(0,1)").unwrap().agrees_with(0.5f64.tanh(), 4.0));
        assert!(out.get("s2(1,1)").unwrap().agrees_with(1.0, 4.0));
    }

    #[test]
    fn rejects_odd_and_empty_sectors() {
        let g = edge();
        let cfg = RunConfig::new(&g, 0.5, 1000, 1);
        assert!(matches!(worm_run(&cfg, &SourceSet::from_parity(&[0])), Err(Error::OddSources(1))));
        let split = CouplingGraph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let cfg = RunConfig::new(&split, 0.5, 1000, 1);
        assert!(matches!(worm_run(&cfg, &SourceSet::pair(0, 2)), Err(Error::EmptySector(_))));
    }

    #[test]
    fn torus_matches_exact() {
        let g = build_lattice(LatticeSpec::periodic(2, 4)).unwrap();
        let exact = ExactGibbs::new(&g, ThermoParams::new(0.4)).unwrap();
        let all: Vec<usize> = (0..16).collect();
        let cfg = RunConfig::new(&g, 0.4, 40_000, 21)
            .observe(Observable::S2Pairs { pairs: vec![(0, 1), (0, 10)] })
            .observe(Observable::S2Distance)
            .observe(Observable::Magnetization)
            .observe(Observable::Block { sites: all.clone() });
        let out = worm_run(&cfg, &SourceSet::empty()).unwrap();
        assert!(out.get("s2(0,1)").unwrap().agrees_with(exact.s2(0, 1), 4.0));
        assert!(out.get("s2(0,10)").unwrap().agrees_with(exact.s2(0, 10), 4.0));
        assert!(out.get("s2_r2=8").unwrap().agrees_with(exact.s2(0, 10), 4.0));
        let m2 = exact.block_moments(&all, 2)[2];
        assert!(out.get("block_m2").unwrap().agrees_with(m2, 4.0));
        assert!(out.get("chi").unwrap().agrees_with(m2 / 16.0, 4.0));
    }

    #[test]
    fn sourced_sector_ratio_and_marginals() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let beta = 0.6;
        let a = SourceSet::pair(0, 8);
        let exact = ExactGibbs::new(&g, ThermoParams::new(beta)).unwrap();
        let cfg = RunConfig::new(&g, beta, 60_000, 5)
            .observe(Observable::S2Pairs { pairs: vec![(0, 8), (0, 4)] })
            .observe(Observable::EdgeStates);
        let out = worm_run(&cfg, &a).unwrap();
        // Z_{A xor {0,8}} / Z_A = 1 / S2(0,8).
        let inv = out.get("s2(0,8)").unwrap();
        assert!(inv.agrees_with(1.0 / exact.s2(0, 8), 4.0), "{inv:?}");
        let ratio = out.get("s2(0,4)").unwrap();
        assert!(ratio.agrees_with(exact.correlation(&[4, 8]) / exact.s2(0, 8), 4.0));
        let dist = support_distribution(&g, beta, &a).unwrap();
        let support = dist.normalized_support();
        for e in 0..g.n_edges() {
            let p: f64 = support.iter().filter(|(m, _)| m >> e & 1 == 1).map(|(_, p)| p).sum();
            let est = out.get(&format!("edge_occupied[{e}]")).unwrap();
            assert!(est.agrees_with(p, 4.0), "edge {e}: {est:?} vs {p}");
        }
    }

    #[test]
    fn detailed_balance_of_shift_moves() {
        let g = CouplingGraph::from_triples(4, &[(0, 1, 0.7), (1, 2, 1.3), (2, 0, 0.4), (2, 3, 1.1)]).unwrap();
        let beta = 0.9;
        let mut chain = WormChain::new(&g, beta, &SourceSet::pair(1, 3), 3, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        for _ in 0..400 {
            for _ in 0..rng.random_range(1..20) {
                chain.step();
            }
            assert!(chain.state().is_consistent(&g));
            let head = rng.random_range(0..2);
            let x = chain.state.heads[head];
            let k = rng.random_range(0..g.degree(x));
            let up = rng.random::<bool>();
            let (y, e) = g.neighbors(x)[k];
            let before = chain.state.clone();
            let r = chain.shift_ratio(head, k, up);
            if r == 0.0 {
                continue;
            }
            let fwd = before.log_weight(&chain.bj).exp() * (1.0 / g.degree(x) as f64) * r.min(1.0);
            chain.apply_shift(head, k, up);
            let k_back = g.neighbors(y).iter().position(|&(_, f)| f == e).unwrap();
            let r_back = chain.shift_ratio(head, k_back, !up);
            let back = chain.state.log_weight(&chain.bj).exp() * (1.0 / g.degree(y) as f64) * r_back.min(1.0);
            assert_relative_eq!(fwd, back, max_relative = 1e-12);
            assert_relative_eq!(r * r_back, 1.0, max_relative = 1e-12);
            chain.state = before;
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn retains_closed_samples_with_correct_sources() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let a = SourceSet::pair(2, 6);
        let mut cfg = RunConfig::new(&g, 0.5, 2000, 1);
        cfg.keep_samples = 50;
        let out = worm_run(&cfg, &a).unwrap();
        let samples: Vec<_> = out.samples().collect();
        assert_eq!(samples.len(), 50);
        for s in samples {
            assert_eq!(s.sources(&g).unwrap(), a);
        }
    }

    #[test]
    fn intersection_trivial_cases() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let cfg = RunConfig::new(&g, 0.4, 400, 2);
        let st = intersection_stats(&cfg, [4, 0, 4, 8]).unwrap();
        assert_eq!(st.p_nonempty.mean, 1.0);
        let e = edge();
        let cfg = RunConfig::new(&e, 0.7, 400, 2);
        let st = intersection_stats(&cfg, [0, 0, 1, 1]).unwrap();
        assert!(st.mean_size.mean >= 0.0);
        assert_relative_eq!(
            st.p_nonempty.mean,
            st.mean_size.mean / st.mean_size_given_nonempty.mean,
            max_relative = 1e-12
        );
    }

    #[test]
    fn intersection_matches_exact_on_grid() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let x = [0, 2, 6, 8];
        let exact = IntersectionExact::compute(&g, 0.5, x).unwrap();
        let cfg = RunConfig::new(&g, 0.5, 8000, 6);
        let st = intersection_stats(&cfg, x).unwrap();
        assert!(st.p_nonempty.agrees_with(exact.p_nonempty, 4.0), "{:?} vs {}", st.p_nonempty, exact.p_nonempty);
        assert!(st.mean_size.agrees_with(exact.mean_size, 4.0));
    }
}
