use serde::{Deserialize, Serialize};

use super::wolff::wolff_run;
use super::{Observable, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{build_lattice, CouplingGraph, LatticeSpec};

/// Per-point Monte Carlo budget for Binder-cumulant evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McBudget {
    pub sweeps: u64,
    pub bins: usize,
    pub seed: u64,
    /// Bisection steps per size pair.
    pub iterations: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget { sweeps: 20_000, bins: 16, seed: 1, iterations: 10 }
    }
}

/// Crossing of the Binder cumulants of two sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub sizes: (usize, usize),
    pub beta: f64,
    pub half_width: f64,
    pub stat_error: f64,
}

/// Combined crossing estimate over consecutive size pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCEstimate {
    pub beta_c: f64,
    /// Larger of the bracket half-width and the statistical error.
    pub uncertainty: f64,
    pub pairs: Vec<PairCrossing>,
}

/// Binder difference `U_{L1} - U_{L2}` and its standard error.
fn binder_gap(
    family: &dyn Fn(usize) -> Result<CouplingGraph>,
    sizes: (usize, usize),
    beta: f64,
    budget: &McBudget,
) -> Result<(f64, f64)> {
    let mut u = [(0.0, 0.0); 2];
    for (k, l) in [sizes.0, sizes.1].into_iter().enumerate() {
        let g = family(l)?;
        let mut cfg = RunConfig::new(&g, beta, budget.sweeps, budget.seed).observe(Observable::Magnetization);
        cfg.bins = budget.bins;
        cfg.stream = l as u64;
        let e = wolff_run(&cfg)?.get("binder")?.clone();
        u[k] = (e.mean, e.stderr);
    }
    Ok((u[0].0 - u[1].0, (u[0].1.powi(2) + u[1].1.powi(2)).sqrt()))
}

/// Bisects the Binder-cumulant crossing of each consecutive pair of sizes of
/// a graph family. The gap `U_small - U_large` must change sign significantly
/// across the bracket.
pub fn locate_crossing(
    family: impl Fn(usize) -> Result<CouplingGraph>,
    sizes: &[usize],
    bracket: (f64, f64),
    budget: &McBudget,
) -> Result<BetaCEstimate> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("at least two sizes are required".into()));
    }
    let (lo0, hi0) = bracket;
    if !(lo0 < hi0) || lo0 < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid bracket ({lo0}, {hi0})")));
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut pairs = Vec::new();
    for w in sorted.windows(2) {
        let sz = (w[0], w[1]);
        let (f_lo, e_lo) = binder_gap(&family, sz, lo0, budget)?;
        let (f_hi, e_hi) = binder_gap(&family, sz, hi0, budget)?;
        // Below the critical point the smaller system has the larger cumulant.
        if !(f_lo > 2.0 * e_lo && f_hi < -2.0 * e_hi) {
            return Err(Error::NoCrossing { lo: lo0, hi: hi0 });
        }
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..budget.iterations {
            let mid = 0.5 * (lo + hi);
            let (f, _) = binder_gap(&family, sz, mid, budget)?;
            if f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        let (_, e_mid) = binder_gap(&family, sz, mid, budget)?;
        let slope = (f_hi - f_lo) / (hi0 - lo0);
        pairs.push(PairCrossing { sizes: sz, beta: mid, half_width: 0.5 * (hi - lo), stat_error: e_mid / slope.abs() });
    }
    let beta_c = pairs.iter().map(|p| p.beta).sum::<f64>() / pairs.len() as f64;
    let spread = pairs.iter().map(|p| (p.beta - beta_c).abs()).fold(0.0, f64::max);
    let uncertainty = pairs.iter().map(|p| p.half_width.max(p.stat_error)).fold(spread, f64::max);
    Ok(BetaCEstimate { beta_c, uncertainty, pairs })
}

/// Binder-crossing estimate of the critical coupling of the periodic
/// nearest-neighbour lattice in dimension `d`.
pub fn locate_beta_c(d: usize, sizes: &[usize], bracket: (f64, f64), budget: &McBudget) -> Result<BetaCEstimate> {
    locate_crossing(|l| build_lattice(LatticeSpec::periodic(d, l)), sizes, bracket, budget)
}
