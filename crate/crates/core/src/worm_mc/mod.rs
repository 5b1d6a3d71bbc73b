//! Monte Carlo samplers: Wolff/Metropolis spin updates, a worm sampler for
//! source-constrained currents, binned error analysis and Binder-crossing
//! location of the critical point.

mod betac;
mod fft;
mod measure;
mod rng;
mod stats;
mod wolff;
mod worm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;

pub use betac::{locate_beta_c, locate_crossing, BetaCEstimate, McBudget, PairCrossing};
pub use fft::TorusCorrelator;
pub use rng::{chain_rng, RNG_NAME};
pub use stats::{Binner, Estimate};
pub use wolff::{wolff_run, SpinChain};
pub use worm::{intersection_stats, worm_run, IntersectionStats, WormChain, WormOutput, WormState};

/// Quantities a run can be asked to estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observable {
    /// `s2(x,y)` for the listed pairs.
    S2Pairs { pairs: Vec<(usize, usize)> },
    /// `s2_r2=K`: translation-averaged two-point function by squared distance
    /// on a periodic lattice.
    S2Distance,
    /// `m2`, `m4`, `binder`, `chi` of the intensive magnetization.
    Magnetization,
    /// `block_m2`, `block_m4`, `r_ratio`, `block_binder` of `M = sum_{x in sites} sigma_x`.
    Block { sites: Vec<usize> },
    /// `s4`, `u4`, `u4_gap = -u4 - s2(a,c) s2(b,d)` and the relative
    /// Pfaffian residual `pf_residual` for four points.
    FourPoint { points: [usize; 4] },
    /// Second-moment correlation length `xi` on a periodic lattice.
    CorrelationLength,
    /// Per-measurement time series of `sum_x w_x sigma_x`.
    Series { name: String, weights: Vec<f64> },
    /// `edge_occupied[e]`, `edge_odd[e]` in the closed sector (worm only).
    EdgeStates,
}

/// Spin update used by [`wolff_run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinUpdate {
    #[default]
    Wolff,
    Metropolis,
}

/// Parameters of one Monte Carlo chain.
#[derive(Debug, Clone)]
pub struct RunConfig<'g> {
    pub graph: &'g CouplingGraph,
    pub beta: f64,
    /// Total sweeps including thermalization.
    pub sweeps: u64,
    /// Defaults to 10% of `sweeps`.
    pub thermalization: Option<u64>,
    pub seed: u64,
    pub stream: u64,
    pub observables: Vec<Observable>,
    pub bins: usize,
    pub update: SpinUpdate,
    /// Closed-sector worm configurations to retain.
    pub keep_samples: usize,
}

impl<'g> RunConfig<'g> {
    pub fn new(graph: &'g CouplingGraph, beta: f64, sweeps: u64, seed: u64) -> Self {
        RunConfig {
            graph,
            beta,
            sweeps,
            thermalization: None,
            seed,
            stream: 0,
            observables: Vec::new(),
            bins: 16,
            update: SpinUpdate::Wolff,
            keep_samples: 0,
        }
    }

    pub fn observe(mut self, o: Observable) -> Self {
        self.observables.push(o);
        self
    }

    pub fn thermalization_sweeps(&self) -> u64 {
        self.thermalization.unwrap_or(self.sweeps / 10)
    }

    pub fn measurement_sweeps(&self) -> u64 {
        self.sweeps.saturating_sub(self.thermalization_sweeps())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        if self.bins < 8 {
            return Err(Error::InvalidArgument(format!("bin count must be at least 8, got {}", self.bins)));
        }
        if self.sweeps <= self.thermalization_sweeps() {
            return Err(Error::InvalidArgument(format!(
                "sweeps ({}) must exceed thermalization ({})",
                self.sweeps,
                self.thermalization_sweeps()
            )));
        }
        if self.measurement_sweeps() < self.bins as u64 {
            return Err(Error::InvalidArgument(format!(
                "{} measurement sweeps cannot fill {} bins",
                self.measurement_sweeps(),
                self.bins
            )));
        }
        if let Some((edge, e)) = self.graph.edges().iter().enumerate().find(|(_, e)| e.j < 0.0) {
            return Err(Error::NonFerromagnetic { edge, j: e.j });
        }
        let n = self.graph.n_vertices();
        let bad = |x: usize| x >= n;
        for o in &self.observables {
            let ok = match o {
                Observable::S2Pairs { pairs } => !pairs.iter().any(|&(x, y)| bad(x) || bad(y)),
                Observable::Block { sites } => !sites.is_empty() && !sites.iter().any(|&x| bad(x)),
                Observable::FourPoint { points } => !points.iter().any(|&x| bad(x)),
                Observable::Series { weights, .. } => weights.len() == n,
                _ => true,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("observable {o:?} does not fit a graph with {n} vertices")));
            }
        }
        Ok(())
    }

    fn estimate(&self, mean: f64, stderr: f64, bins: usize, samples: u64) -> Estimate {
        Estimate { mean, stderr, bins, samples, seed: self.seed, stream: self.stream, rng: RNG_NAME.into() }
    }
}

/// Estimates and time series produced by a spin run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub algorithm: String,
    pub estimates: BTreeMap<String, Estimate>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub measurements: u64,
    pub thermalization_sweeps: u64,
}

impl RunOutput {
    /// Looks up an estimate by name.
    pub fn get(&self, name: &str) -> Result<&Estimate> {
        self.estimates
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("run produced no estimate named {name}")))
    }
}

pub fn s2_name(x: usize, y: usize) -> String {
    format!("s2({},{})", x.min(y), x.max(y))
}

pub fn four_point_suffix(p: &[usize; 4]) -> String {
    format!("({},{},{},{})", p[0], p[1], p[2], p[3])
}
