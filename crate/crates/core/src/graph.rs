//! Finite weighted graphs carrying ferromagnetic couplings.
//!
//! Every other module works on a [`CouplingGraph`]: a simple undirected graph
//! with dense vertex ids `0..n`, non-negative couplings on edges, and optional
//! geometric data (integer embedding, a marked boundary face, block membership
//! for decorated graphs). Graphs are immutable once built.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of sites of a constructed graph.
pub const DEFAULT_SITE_CAP: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub j: f64,
}

impl Edge {
    /// The endpoint of the edge opposite to `x`.
    #[inline]
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Periodic,
}

/// Nearest-neighbour box `{0..L-1}^d` with uniform coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub d: usize,
    pub l: usize,
    pub j: f64,
    pub bc: Boundary,
}

impl LatticeSpec {
    pub fn new(d: usize, l: usize, j: f64, bc: Boundary) -> Self {
        LatticeSpec { d, l, j, bc }
    }

    pub fn periodic(d: usize, l: usize) -> Self {
        Self::new(d, l, 1.0, Boundary::Periodic)
    }

    pub fn free(d: usize, l: usize) -> Self {
        Self::new(d, l, 1.0, Boundary::Free)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if self.l < 1 {
            return Err(Error::InvalidLattice("side length must be at least 1".into()));
        }
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::InvalidLattice(format!("coupling must be positive, got {}", self.j)));
        }
        if self.bc == Boundary::Periodic && self.l < 3 {
            return Err(Error::InvalidLattice(format!(
                "periodic boundary requires L >= 3 (L = {} would create parallel edges)",
                self.l
            )));
        }
        Ok(())
    }

    pub fn volume(&self) -> u64 {
        (self.l as u64).saturating_pow(self.d as u32)
    }

    /// Row-major coordinates of site `idx` (last coordinate varies fastest).
    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            c[k] = (idx % self.l) as i64;
            idx /= self.l;
        }
        c
    }

    pub fn index(&self, coords: &[i64]) -> usize {
        let l = self.l as i64;
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.l + c.rem_euclid(l) as usize)
    }

    /// Minimal-image displacement from `a` to `b` (plain difference for free boxes).
    pub fn displacement(&self, a: usize, b: usize) -> Vec<i64> {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let l = self.l as i64;
        ca.iter()
            .zip(&cb)
            .map(|(&x, &y)| {
                let mut d = y - x;
                if self.bc == Boundary::Periodic {
                    d = d.rem_euclid(l);
                    if d > l / 2 {
                        d -= l;
                    }
                }
                d
            })
            .collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.displacement(a, b)
            .iter()
            .map(|&x| (x * x) as f64)
            .sum::<f64>()
            .sqrt()
    }

    /// Site nearest to the geometric centre of the box.
    pub fn center(&self) -> usize {
        let c = vec![(self.l / 2) as i64; self.d];
        self.index(&c)
    }

    /// The `side^d` sub-box of sites centred in the lattice (the whole lattice
    /// when `side == L`).
    pub fn centered_block(&self, side: usize) -> Vec<usize> {
        let side = side.min(self.l);
        let offset = (self.l - side) / 2;
        let total = side.pow(self.d as u32);
        let mut out = Vec::with_capacity(total);
        for k in 0..total {
            let mut rem = k;
            let mut c = vec![0i64; self.d];
            for axis in (0..self.d).rev() {
                c[axis] = (offset + rem % side) as i64;
                rem /= side;
            }
            out.push(self.index(&c));
        }
        out.sort_unstable();
        out
    }
}

/// A finite ferromagnetic coupling graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    index: HashMap<(usize, usize), usize>,
    embedding: Option<Vec<Vec<i64>>>,
    boundary_face: Option<Vec<usize>>,
    lattice: Option<LatticeSpec>,
    blocks: Option<Vec<Vec<usize>>>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl CouplingGraph {
    /// Validating constructor. Rejects self-loops, duplicate edges, dangling
    /// vertex ids and negative or non-finite couplings.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} ({}, {}) references a vertex outside 0..{n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("edge {i} is a self-loop at vertex {}", e.u)));
            }
            if !(e.j >= 0.0) || !e.j.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} ({}, {}) has invalid coupling {}",
                    e.u, e.v, e.j
                )));
            }
            if let Some(prev) = index.insert(key(e.u, e.v), i) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} ({}, {}) duplicates edge {prev}",
                    e.u, e.v
                )));
            }
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        Ok(CouplingGraph {
            n,
            edges,
            adj,
            index,
            embedding: None,
            boundary_face: None,
            lattice: None,
            blocks: None,
        })
    }

    /// Convenience constructor from `(u, v, J)` triples.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(n, triples.iter().map(|&(u, v, j)| Edge { u, v, j }).collect())
    }

    pub fn with_embedding(mut self, coords: Vec<Vec<i64>>) -> Result<Self> {
        if coords.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "embedding has {} rows for {} vertices",
                coords.len(),
                self.n
            )));
        }
        if let Some(d) = coords.first().map(Vec::len) {
            if let Some(row) = coords.iter().position(|c| c.len() != d) {
                return Err(Error::InvalidGraph(format!("embedding row {row} has inconsistent dimension")));
            }
        }
        self.embedding = Some(coords);
        Ok(self)
    }

    /// Marks a boundary face. The face must be a simple cycle: at least three
    /// distinct vertices, consecutive ones (cyclically) joined by edges.
    pub fn with_boundary_face(mut self, face: Vec<usize>) -> Result<Self> {
        if face.len() < 3 {
            return Err(Error::InvalidGraph("boundary face needs at least 3 vertices".into()));
        }
        let mut seen = vec![false; self.n];
        for (i, &v) in face.iter().enumerate() {
            if v >= self.n {
                return Err(Error::InvalidGraph(format!("boundary face entry {i} ({v}) is not a vertex")));
            }
            if seen[v] {
                return Err(Error::InvalidGraph(format!("boundary face repeats vertex {v}")));
            }
            seen[v] = true;
        }
        for i in 0..face.len() {
            let (a, b) = (face[i], face[(i + 1) % face.len()]);
            if self.edge_between(a, b).is_none() {
                return Err(Error::InvalidGraph(format!(
                    "boundary face vertices {a} and {b} are consecutive but not adjacent"
                )));
            }
        }
        self.boundary_face = Some(face);
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    /// `(neighbour, edge index)` pairs incident to `x`.
    pub fn neighbors(&self, x: usize) -> &[(usize, usize)] {
        &self.adj[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adj[x].len()
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.index.get(&key(u, v)).copied()
    }

    /// Coupling between `u` and `v`, zero when they are not adjacent.
    pub fn coupling(&self, u: usize, v: usize) -> f64 {
        self.edge_between(u, v).map_or(0.0, |i| self.edges[i].j)
    }

    pub fn embedding(&self) -> Option<&[Vec<i64>]> {
        self.embedding.as_deref()
    }

    pub fn boundary_face(&self) -> Option<&[usize]> {
        self.boundary_face.as_deref()
    }

    pub fn lattice(&self) -> Option<&LatticeSpec> {
        self.lattice.as_ref()
    }

    /// Block membership for decorated graphs: `blocks()[x]` lists the sites of `B_x`.
    pub fn blocks(&self) -> Option<&[Vec<usize>]> {
        self.blocks.as_deref()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.n
    }

    /// Sub-graph on the same vertex set keeping only the listed edges.
    pub fn edge_subgraph(&self, keep: &[usize]) -> Result<Self> {
        let edges = keep.iter().map(|&i| self.edges[i]).collect();
        let mut g = Self::new(self.n, edges)?;
        g.embedding = self.embedding.clone();
        Ok(g)
    }

    pub fn to_file_repr(&self) -> GraphFile {
        GraphFile {
            vertices: self.n,
            edges: self.edges.iter().map(|e| (e.u, e.v, e.j)).collect(),
            embedding: self.embedding.clone(),
            boundary_face: self.boundary_face.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file_repr())?;
        fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk graph schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_face: Option<Vec<usize>>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<CouplingGraph> {
        let mut g = CouplingGraph::from_triples(self.vertices, &self.edges)?;
        if let Some(e) = self.embedding {
            g = g.with_embedding(e)?;
        }
        if let Some(f) = self.boundary_face {
            g = g.with_boundary_face(f)?;
        }
        Ok(g)
    }
}

/// Parses and validates a graph file.
pub fn load_graph(path: impl AsRef<Path>) -> Result<CouplingGraph> {
    let path = path.as_ref();
    let wrap = |msg: String| Error::GraphFile { path: path.to_path_buf(), msg };
    let text = fs::read_to_string(path).map_err(|e| wrap(e.to_string()))?;
    parse_graph(&text).map_err(|e| match e {
        Error::InvalidGraph(m) => wrap(m),
        Error::Json(j) => wrap(format!("parse error at line {} column {}: {j}", j.line(), j.column())),
        other => other,
    })
}

pub fn parse_graph(text: &str) -> Result<CouplingGraph> {
    let file: GraphFile = serde_json::from_str(text)?;
    file.into_graph()
}

/// Builds a nearest-neighbour lattice with the default site cap.
pub fn build_lattice(spec: LatticeSpec) -> Result<CouplingGraph> {
    build_lattice_with_cap(spec, DEFAULT_SITE_CAP)
}

pub fn build_lattice_with_cap(spec: LatticeSpec, cap: u64) -> Result<CouplingGraph> {
    spec.validate()?;
    let vol = (spec.l as u64).checked_pow(spec.d as u32).unwrap_or(u64::MAX);
    if vol > cap {
        return Err(Error::SiteCap { what: "lattice", size: vol, cap });
    }
    let n = vol as usize;
    let mut edges = Vec::with_capacity(n * spec.d);
    let mut coords = Vec::with_capacity(n);
    for site in 0..n {
        let c = spec.coords(site);
        for axis in 0..spec.d {
            let mut nb = c.clone();
            nb[axis] += 1;
            if nb[axis] as usize == spec.l {
                if spec.bc == Boundary::Free {
                    continue;
                }
                nb[axis] = 0;
            }
            edges.push(Edge { u: site, v: spec.index(&nb), j: spec.j });
        }
        coords.push(c);
    }
    let mut g = CouplingGraph::new(n, edges)?.with_embedding(coords)?;
    g.lattice = Some(spec);
    if spec.d == 2 && spec.bc == Boundary::Free && spec.l >= 2 {
        g = g.with_boundary_face(outer_cycle_2d(&spec))?;
    }
    Ok(g)
}

/// Outer boundary of a free `L x L` box, traversed once.
fn outer_cycle_2d(spec: &LatticeSpec) -> Vec<usize> {
    let l = spec.l as i64;
    let mut cyc = Vec::new();
    for c1 in 0..l {
        cyc.push(spec.index(&[0, c1]));
    }
    for c0 in 1..l {
        cyc.push(spec.index(&[c0, l - 1]));
    }
    for c1 in (0..l - 1).rev() {
        cyc.push(spec.index(&[l - 1, c1]));
    }
    for c0 in (1..l - 1).rev() {
        cyc.push(spec.index(&[c0, 0]));
    }
    cyc
}

/// Griffiths–Simon decoration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoration {
    /// Constituents per block.
    pub n: usize,
    pub alpha: f64,
    /// Intra-block mean-field strength.
    pub g: f64,
}

/// Replaces each vertex `x` of `base` by a block of `N` Ising sites.
///
/// Sites of block `x` are numbered `x*N .. (x+1)*N`. Pairs inside a block get
/// coupling `g alpha^2 / N` (omitted when `g = 0`); every constituent pair of
/// adjacent blocks gets `alpha^2 J_xy / N`, so the block fields
/// `phi_x = alpha/sqrt(N) sum_i sigma_{x,i}` interact through `J_xy phi_x phi_y`.
pub fn build_decorated(base: &CouplingGraph, dec: Decoration) -> Result<CouplingGraph> {
    build_decorated_with_cap(base, dec, DEFAULT_SITE_CAP)
}

pub fn build_decorated_with_cap(base: &CouplingGraph, dec: Decoration, cap: u64) -> Result<CouplingGraph> {
    let Decoration { n: bn, alpha, g } = dec;
    if bn < 1 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("g must be non-negative, got {g}")));
    }
    let total = (base.n as u64).saturating_mul(bn as u64);
    if total > cap {
        return Err(Error::SiteCap { what: "decorated graph", size: total, cap });
    }
    let a2n = alpha * alpha / bn as f64;
    let mut edges = Vec::new();
    if g > 0.0 {
        for x in 0..base.n {
            for i in 0..bn {
                for k in i + 1..bn {
                    edges.push(Edge { u: x * bn + i, v: x * bn + k, j: g * a2n });
                }
            }
        }
    }
    for e in &base.edges {
        for i in 0..bn {
            for k in 0..bn {
                edges.push(Edge { u: e.u * bn + i, v: e.v * bn + k, j: a2n * e.j });
            }
        }
    }
    let mut out = CouplingGraph::new(total as usize, edges)?;
    out.blocks = Some((0..base.n).map(|x| (x * bn..(x + 1) * bn).collect()).collect());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge(j: f64) -> CouplingGraph {
        CouplingGraph::from_triples(2, &[(0, 1, j)]).unwrap()
    }

    #[test]
    fn periodic_square_counts() {
        let g = build_lattice(LatticeSpec::periodic(2, 4)).unwrap();
        assert_eq!(g.n_vertices(), 16);
        assert_eq!(g.n_edges(), 32);
        assert!(g.boundary_face().is_none());
    }

    #[test]
    fn free_path() {
        let g = build_lattice(LatticeSpec::free(1, 3)).unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.n_edges(), 2);
        assert!(g.edge_between(0, 1).is_some() && g.edge_between(1, 2).is_some());
    }

    #[test]
    fn periodic_l2_rejected() {
        assert!(matches!(
            build_lattice(LatticeSpec::periodic(1, 2)),
            Err(Error::InvalidLattice(_))
        ));
    }

    #[test]
    fn free_edge_count_formula() {
        for d in 1..=3 {
            for l in 1..=5usize {
                let g = build_lattice(LatticeSpec::free(d, l)).unwrap();
                assert_eq!(g.n_edges(), d * l.pow(d as u32 - 1) * (l - 1));
            }
        }
    }

    #[test]
    fn site_cap_enforced() {
        let err = build_lattice_with_cap(LatticeSpec::periodic(3, 10), 999).unwrap_err();
        assert!(matches!(err, Error::SiteCap { size: 1000, .. }));
    }

    #[test]
    fn free_box_records_outer_cycle() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let face = g.boundary_face().unwrap();
        assert_eq!(face, &[0, 1, 2, 5, 8, 7, 6, 3]);
    }

    #[test]
    fn lattice_build_is_deterministic() {
        let a = build_lattice(LatticeSpec::periodic(3, 4)).unwrap();
        let b = build_lattice(LatticeSpec::periodic(3, 4)).unwrap();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(CouplingGraph::from_triples(2, &[(0, 0, 1.0)]).is_err());
        assert!(CouplingGraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(CouplingGraph::from_triples(2, &[(0, 2, 1.0)]).is_err());
        assert!(CouplingGraph::from_triples(2, &[(0, 1, -0.5)]).is_err());
    }

    #[test]
    fn boundary_face_must_be_cycle() {
        let path = build_lattice(LatticeSpec::free(1, 3)).unwrap();
        assert!(path.clone().with_boundary_face(vec![0, 1, 2]).is_err());
        let tri = CouplingGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert!(tri.clone().with_boundary_face(vec![0, 1, 2]).is_ok());
        assert!(tri.with_boundary_face(vec![0, 1, 1]).is_err());
    }

    #[test]
    fn decorated_single_vertex() {
        let base = CouplingGraph::from_triples(1, &[]).unwrap();
        let d = build_decorated(&base, Decoration { n: 2, alpha: 1.0, g: 1.0 }).unwrap();
        assert_eq!(d.n_vertices(), 2);
        assert_eq!(d.n_edges(), 1);
        assert_eq!(d.edge(0).j, 0.5);
    }

    #[test]
    fn decorated_degenerate_block() {
        let base = single_edge(1.0);
        let d = build_decorated(&base, Decoration { n: 1, alpha: 1.0, g: 0.0 }).unwrap();
        assert_eq!(d.n_vertices(), 2);
        assert_eq!(d.edges(), base.edges());
    }

    #[test]
    fn decorated_edge_pairs() {
        // Hand count: one intra pair per block (2) plus 2x2 inter pairs (4).
        let d = build_decorated(&single_edge(1.0), Decoration { n: 2, alpha: 1.0, g: 1.0 }).unwrap();
        assert_eq!(d.n_vertices(), 4);
        let blocks = d.blocks().unwrap();
        let same = |e: &Edge| blocks.iter().any(|b| b.contains(&e.u) && b.contains(&e.v));
        assert_eq!(d.edges().iter().filter(|e| same(e)).count(), 2);
        assert_eq!(d.edges().iter().filter(|e| !same(e)).count(), 4);
    }

    #[test]
    fn decorated_inter_block_sum() {
        let base = CouplingGraph::from_triples(3, &[(0, 1, 0.7), (1, 2, 1.3)]).unwrap();
        let (n, alpha) = (5, 1.4);
        let d = build_decorated(&base, Decoration { n, alpha, g: 0.3 }).unwrap();
        let blocks = d.blocks().unwrap();
        for e in base.edges() {
            let total: f64 = d
                .edges()
                .iter()
                .filter(|f| {
                    (blocks[e.u].contains(&f.u) && blocks[e.v].contains(&f.v))
                        || (blocks[e.u].contains(&f.v) && blocks[e.v].contains(&f.u))
                })
                .map(|f| f.j)
                .sum();
            approx::assert_relative_eq!(total, alpha * alpha * e.j * n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn centered_block_of_full_size_is_everything() {
        let spec = LatticeSpec::periodic(2, 4);
        assert_eq!(spec.centered_block(4), (0..16).collect::<Vec<_>>());
        assert_eq!(spec.centered_block(2), vec![5, 6, 9, 10]);
    }

    #[test]
    fn periodic_displacement_minimal_image() {
        let spec = LatticeSpec::periodic(1, 8);
        assert_eq!(spec.displacement(0, 7), vec![-1]);
        assert_eq!(spec.displacement(0, 4), vec![4]);
        assert_eq!(spec.distance(1, 6), 3.0);
    }
}
