use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::worm_mc::chain_rng;

pub const DEFAULT_CORPUS_SEED: u64 = 0x5eed_c0de;
pub const DEFAULT_CORPUS_SIZE: usize = 200;
pub const MIN_VERTICES: usize = 2;
pub const MAX_VERTICES: usize = 6;
pub const MAX_EDGES: usize = 8;

/// One random ferromagnetic instance.
#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub index: usize,
    pub graph: CouplingGraph,
    pub beta: f64,
}

/// Uniform draw from the open interval `(0, hi)`.
fn open_interval(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    loop {
        let v = rng.random_range(0.0..hi);
        if v > 0.0 {
            return v;
        }
    }
}

/// Connected graph with `|V|` in `[2, 6]`, `|E| <= 8`, `J` in `(0, 2)` and
/// `beta` in `(0, 2)`. Instance `i` depends only on `(seed, i)`.
pub fn corpus_instance(seed: u64, index: usize) -> Result<CorpusInstance> {
    let mut rng = chain_rng(seed, index as u64);
    let n = rng.random_range(MIN_VERTICES..=MAX_VERTICES);
    let max_e = MAX_EDGES.min(n * (n - 1) / 2);
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut rng);
    // Random recursive tree, then extra edges among the remaining pairs.
    let mut pairs = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        pairs.push((labels[u].min(labels[v]), labels[u].max(labels[v])));
    }
    let mut free: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|p| !pairs.contains(p)).collect();
    free.shuffle(&mut rng);
    let extra = rng.random_range(0..=max_e - (n - 1));
    pairs.extend(free.into_iter().take(extra));
    let triples: Vec<(usize, usize, f64)> = pairs.into_iter().map(|(u, v)| (u, v, open_interval(&mut rng, 2.0))).collect();
    let graph = CouplingGraph::from_triples(n, &triples)?;
    if !graph.is_connected() {
        return Err(Error::InvalidGraph(format!("corpus instance {index} is disconnected")));
    }
    let beta = open_interval(&mut rng, 2.0);
    Ok(CorpusInstance { index, graph, beta })
}

pub fn random_corpus(seed: u64, count: usize) -> Result<Vec<CorpusInstance>> {
    (0..count).map(|i| corpus_instance(seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_respect_bounds() {
        let corpus = random_corpus(DEFAULT_CORPUS_SEED, 300).unwrap();
        let mut sizes = [0usize; MAX_VERTICES + 1];
        for inst in &corpus {
            let g = &inst.graph;
            assert!((MIN_VERTICES..=MAX_VERTICES).contains(&g.n_vertices()));
            assert!(g.n_edges() <= MAX_EDGES && g.n_edges() >= g.n_vertices() - 1);
            assert!(g.is_connected());
            assert!(g.edges().iter().all(|e| e.j > 0.0 && e.j < 2.0));
            assert!(inst.beta > 0.0 && inst.beta < 2.0);
            sizes[g.n_vertices()] += 1;
        }
        assert!(sizes[MIN_VERTICES..].iter().all(|&c| c > 0), "{sizes:?}");
    }

    #[test]
    fn reproducible_from_seed() {
        let a = corpus_instance(7, 12).unwrap();
        let b = corpus_instance(7, 12).unwrap();
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.beta, b.beta);
        let c = corpus_instance(8, 12).unwrap();
        assert!(a.graph.edges() != c.graph.edges() || a.beta != c.beta);
    }
}
