use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;

/// Edge and vertex bitmask view of a graph with at most 64 of each.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub n: usize,
    pub ends: Vec<(usize, usize)>,
    pub incidence: Vec<u64>,
}

impl Topology {
    pub fn new(g: &CouplingGraph) -> Result<Self> {
        if g.n_vertices() > 64 || g.n_edges() > 64 {
            return Err(Error::EnumerationCap { unit: "edges", size: g.n_edges().max(g.n_vertices()), cap: 64 });
        }
        let mut incidence = vec![0u64; g.n_vertices()];
        let ends = g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                incidence[e.u] |= 1 << i;
                incidence[e.v] |= 1 << i;
                (e.u, e.v)
            })
            .collect();
        Ok(Topology { n: g.n_vertices(), ends, incidence })
    }

    /// Vertex bitmask of the component of `x` in the edge set `mask`.
    pub fn cluster(&self, mask: u64, x: usize) -> u64 {
        let mut cl = 1u64 << x;
        let mut frontier = cl;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let mut es = self.incidence[v] & mask;
            while es != 0 {
                let e = es.trailing_zeros() as usize;
                es &= es - 1;
                let (a, b) = self.ends[e];
                let w = if a == v { b } else { a };
                if cl >> w & 1 == 0 {
                    cl |= 1 << w;
                    frontier |= 1 << w;
                }
            }
        }
        cl
    }
}

/// Read-only view of the supports of a tuple of currents.
///
/// Events only see which edges carry non-zero current in each replica; raw
/// occupation numbers are not reachable from here.
pub struct Traces<'a> {
    pub(crate) topo: &'a Topology,
    pub(crate) masks: &'a [u64],
}

impl<'a> Traces<'a> {
    pub fn n_replicas(&self) -> usize {
        self.masks.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.topo.n
    }

    /// Support of replica `i` as an edge bitmask.
    pub fn support(&self, i: usize) -> u64 {
        self.masks[i]
    }

    /// Support of the sum of the listed replicas.
    pub fn union(&self, replicas: &[usize]) -> u64 {
        replicas.iter().fold(0, |m, &i| m | self.masks[i])
    }

    /// Cluster of `x` in the edge set `mask`, as a vertex bitmask.
    pub fn cluster(&self, mask: u64, x: usize) -> u64 {
        self.topo.cluster(mask, x)
    }

    pub fn connected(&self, mask: u64, x: usize, y: usize) -> bool {
        x == y || self.topo.cluster(mask, x) >> y & 1 == 1
    }
}

type Pred = dyn Fn(&Traces) -> bool + Send + Sync;

/// A predicate on the supports of a tuple of currents.
#[derive(Clone)]
pub struct ReplicaEvent {
    f: Arc<Pred>,
    label: String,
}

impl fmt::Debug for ReplicaEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReplicaEvent({})", self.label)
    }
}

fn vmask(points: &[usize]) -> u64 {
    points.iter().fold(0, |m, &x| m | 1u64 << x)
}

impl ReplicaEvent {
    pub fn new(label: impl Into<String>, f: impl Fn(&Traces) -> bool + Send + Sync + 'static) -> Self {
        ReplicaEvent { f: Arc::new(f), label: label.into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: &Traces) -> bool {
        (self.f)(t)
    }

    pub fn always() -> Self {
        Self::new("true", |_| true)
    }

    pub fn not(self) -> Self {
        let label = format!("not({})", self.label);
        Self::new(label, move |t| !self.eval(t))
    }

    /// `x <-> y` in the sum of the listed replicas.
    pub fn connected(replicas: Vec<usize>, x: usize, y: usize) -> Self {
        Self::new(format!("{x}<->{y} in {replicas:?}"), move |t| t.connected(t.union(&replicas), x, y))
    }

    /// Every listed point lies in a single cluster.
    pub fn all_connected(replicas: Vec<usize>, points: Vec<usize>) -> Self {
        Self::new(format!("all of {points:?} connected in {replicas:?}"), move |t| {
            let cl = t.cluster(t.union(&replicas), points[0]);
            points.iter().all(|&p| cl >> p & 1 == 1)
        })
    }

    /// Some point of `a` is connected to some point of `b`.
    pub fn sets_connected(replicas: Vec<usize>, a: Vec<usize>, b: Vec<usize>) -> Self {
        let bm = vmask(&b);
        Self::new(format!("{a:?}<->{b:?} in {replicas:?}"), move |t| {
            let m = t.union(&replicas);
            a.iter().any(|&x| t.cluster(m, x) & bm != 0)
        })
    }

    /// The cluster of `x` meets the vertex set `set`.
    pub fn cluster_hits(replicas: Vec<usize>, x: usize, set: Vec<usize>) -> Self {
        let bm = vmask(&set);
        Self::new(format!("C({x}) meets {set:?} in {replicas:?}"), move |t| t.cluster(t.union(&replicas), x) & bm != 0)
    }

    /// `C_{r1}(x) cap C_{r2}(y) != empty`.
    pub fn clusters_intersect(r1: Vec<usize>, x: usize, r2: Vec<usize>, y: usize) -> Self {
        Self::new(format!("C{r1:?}({x}) meets C{r2:?}({y})"), move |t| {
            t.cluster(t.union(&r1), x) & t.cluster(t.union(&r2), y) != 0
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_cluster() {
        let g = CouplingGraph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let t = Topology::new(&g).unwrap();
        assert_eq!(t.cluster(0, 2), 0b0100);
        assert_eq!(t.cluster(0b011, 0), 0b0111);
        assert_eq!(t.cluster(0b101, 3), 0b1100);
    }

    #[test]
    fn events_on_traces() {
        let g = CouplingGraph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let topo = Topology::new(&g).unwrap();
        let masks = [0b001, 0b100];
        let t = Traces { topo: &topo, masks: &masks };
        assert!(!ReplicaEvent::connected(vec![0, 1], 0, 3).eval(&t));
        assert!(ReplicaEvent::connected(vec![1], 2, 3).eval(&t));
        assert!(ReplicaEvent::sets_connected(vec![0, 1], vec![0, 2], vec![3]).eval(&t));
        assert!(!ReplicaEvent::clusters_intersect(vec![0], 0, vec![1], 3).eval(&t));
        assert!(ReplicaEvent::cluster_hits(vec![0], 0, vec![1]).eval(&t));
        assert!(ReplicaEvent::all_connected(vec![0], vec![1, 0]).eval(&t));
        assert!(!ReplicaEvent::always().not().eval(&t));
    }
}
