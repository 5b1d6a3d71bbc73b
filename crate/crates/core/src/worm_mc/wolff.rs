use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::measure::SpinMeasurer;
use super::rng::chain_rng;
use super::stats::Binner;
use super::{RunConfig, RunOutput, SpinUpdate};
use crate::error::Result;
use crate::graph::CouplingGraph;

/// Minimum number of Wolff clusters grown before measuring.
const MIN_THERMAL_CLUSTERS: u64 = 1000;

/// Ising spin chain at zero field with Wolff and Metropolis updates.
pub struct SpinChain<'g> {
    g: &'g CouplingGraph,
    beta: f64,
    spins: Vec<i8>,
    bond_p: Vec<f64>,
    rng: ChaCha8Rng,
    stack: Vec<usize>,
    clusters: u64,
}

impl<'g> SpinChain<'g> {
    /// Starts from the all-plus configuration.
    pub fn new(g: &'g CouplingGraph, beta: f64, seed: u64, stream: u64) -> Self {
        SpinChain {
            g,
            beta,
            spins: vec![1; g.n_vertices()],
            bond_p: g.edges().iter().map(|e| -(-2.0 * beta * e.j).exp_m1()).collect(),
            rng: chain_rng(seed, stream),
            stack: Vec::new(),
            clusters: 0,
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn clusters_grown(&self) -> u64 {
        self.clusters
    }

    /// Grows and flips one cluster; returns its size.
    pub fn wolff_cluster(&mut self) -> usize {
        let n = self.spins.len();
        if n == 0 {
            return 0;
        }
        let seed = self.rng.random_range(0..n);
        let s0 = self.spins[seed];
        self.spins[seed] = -s0;
        self.stack.clear();
        self.stack.push(seed);
        let mut size = 1;
        while let Some(x) = self.stack.pop() {
            for &(y, e) in self.g.neighbors(x) {
                if self.spins[y] == s0 && self.rng.random::<f64>() < self.bond_p[e] {
                    self.spins[y] = -s0;
                    self.stack.push(y);
                    size += 1;
                }
            }
        }
        self.clusters += 1;
        size
    }

    /// Grows `clusters` clusters; returns the number of flipped spins.
    pub fn wolff_sweep(&mut self, clusters: u64) -> u64 {
        (0..clusters).map(|_| self.wolff_cluster() as u64).sum()
    }

    /// `N` single-site Metropolis attempts at uniformly random sites.
    pub fn metropolis_sweep(&mut self) {
        let n = self.spins.len();
        for _ in 0..n {
            let x = self.rng.random_range(0..n);
            let h: f64 = self.g.neighbors(x).iter().map(|&(y, e)| self.g.edge(e).j * self.spins[y] as f64).sum();
            let de = 2.0 * self.spins[x] as f64 * h;
            if de <= 0.0 || self.rng.random::<f64>() < (-self.beta * de).exp() {
                self.spins[x] = -self.spins[x];
            }
        }
    }

}

/// Samples the zero-field Gibbs measure and estimates the requested observables.
pub fn wolff_run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut measurer = SpinMeasurer::new(cfg)?;
    let mut chain = SpinChain::new(cfg.graph, cfg.beta, cfg.seed, cfg.stream);
    let n = cfg.graph.n_vertices() as u64;
    let therm = cfg.thermalization_sweeps();
    let mut done = 0;
    // A Wolff sweep is a fixed number of clusters, chosen during
    // thermalization so that one sweep flips about N spins on average.
    // Stopping on the flipped count itself would bias the measurements.
    let mut per_sweep = 1;
    let mut flipped = 0;
    while done < therm || (cfg.update == SpinUpdate::Wolff && chain.clusters_grown() < MIN_THERMAL_CLUSTERS) {
        match cfg.update {
            SpinUpdate::Wolff => {
                flipped += chain.wolff_sweep(per_sweep);
                let mean = flipped as f64 / chain.clusters_grown() as f64;
                per_sweep = ((n as f64 / mean).ceil() as u64).max(1);
            }
            SpinUpdate::Metropolis => chain.metropolis_sweep(),
        }
        done += 1;
    }
    let total = cfg.measurement_sweeps();
    let mut binner = Binner::new(measurer.channels(), cfg.bins, total)?;
    let mut row = vec![0.0; measurer.channels()];
    for _ in 0..total {
        match cfg.update {
            SpinUpdate::Wolff => {
                chain.wolff_sweep(per_sweep);
            }
            SpinUpdate::Metropolis => chain.metropolis_sweep(),
        }
        measurer.measure(chain.spins(), &mut row);
        binner.push(&row);
    }
    let (estimates, series) = measurer.finish(&binner, cfg);
    Ok(RunOutput {
        algorithm: match cfg.update {
            SpinUpdate::Wolff => "wolff".into(),
            SpinUpdate::Metropolis => "metropolis".into(),
        },
        estimates,
        series,
        measurements: total,
        thermalization_sweeps: done,
    })
}
