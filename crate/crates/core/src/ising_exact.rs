//! Brute-force evaluation of the Ising Gibbs state on small graphs.
//!
//! Spin configurations are bitmasks: bit `x` set means `sigma_x = -1`. The
//! configurations are visited in Gray-code order so each step flips a single
//! spin and the energy is updated in `O(deg)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;

/// Default cap on the number of spins for exact enumeration.
pub const EXACT_SPIN_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub beta: f64,
    pub h: f64,
}

impl ThermoParams {
    pub fn new(beta: f64) -> Self {
        ThermoParams { beta, h: 0.0 }
    }

    pub fn with_field(beta: f64, h: f64) -> Self {
        ThermoParams { beta, h }
    }

    fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !self.h.is_finite() {
            return Err(Error::InvalidArgument(format!("h must be finite, got {}", self.h)));
        }
        Ok(())
    }

    /// Guard used by every random-current caller.
    pub fn require_zero_field(&self) -> Result<()> {
        if self.h != 0.0 {
            return Err(Error::NonzeroField(self.h));
        }
        Ok(())
    }
}

/// A spin configuration with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    pub values: Vec<i8>,
}

impl SpinConfig {
    pub fn from_mask(n: usize, mask: u64) -> Self {
        SpinConfig { values: (0..n).map(|x| if mask >> x & 1 == 1 { -1 } else { 1 }).collect() }
    }

    /// `H(sigma) = -sum J sigma_u sigma_v - h sum sigma_x`.
    pub fn energy(&self, g: &CouplingGraph, h: f64) -> f64 {
        let bonds: f64 = g
            .edges()
            .iter()
            .map(|e| e.j * (self.values[e.u] * self.values[e.v]) as f64)
            .sum();
        let mag: i64 = self.values.iter().map(|&s| s as i64).sum();
        -bonds - h * mag as f64
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// Bitmask of a vertex multiset with repeated vertices cancelled in pairs.
pub fn parity_mask(points: &[usize]) -> u64 {
    points.iter().fold(0u64, |m, &x| m ^ (1u64 << x))
}

/// Normalized Gibbs weights of every configuration of a small graph.
///
/// Building costs `2^|V|` energy evaluations; afterwards any correlation is a
/// single pass over the stored probabilities.
#[derive(Debug, Clone)]
pub struct ExactGibbs {
    n: usize,
    params: ThermoParams,
    probs: Vec<f64>,
    log_z: f64,
}

impl ExactGibbs {
    pub fn new(g: &CouplingGraph, params: ThermoParams) -> Result<Self> {
        Self::with_cap(g, params, EXACT_SPIN_CAP)
    }

    pub fn with_cap(g: &CouplingGraph, params: ThermoParams, cap: usize) -> Result<Self> {
        params.validate()?;
        let n = g.n_vertices();
        if n > cap || n > 40 {
            return Err(Error::EnumerationCap { unit: "spins", size: n, cap });
        }
        let total = 1usize << n;
        let beta = params.beta;
        let mut spin = vec![1i8; n];
        // -beta * H for the all-plus configuration.
        let mut log_w = beta * (g.edges().iter().map(|e| e.j).sum::<f64>() + params.h * n as f64);
        let mut logs = vec![0.0f64; total];
        logs[0] = log_w;
        let mut mask = 0usize;
        for k in 1..total {
            let x = k.trailing_zeros() as usize;
            let s = spin[x] as f64;
            let local: f64 = g.neighbors(x).iter().map(|&(y, e)| g.edge(e).j * spin[y] as f64).sum();
            // Flipping x changes -beta*H by -2 beta s (local + h).
            log_w -= 2.0 * beta * s * (local + params.h);
            spin[x] = -spin[x];
            mask ^= 1 << x;
            logs[mask] = log_w;
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = KahanSum::default();
        for l in logs.iter_mut() {
            *l = (*l - max).exp();
            z.add(*l);
        }
        let zs = z.value();
        for l in logs.iter_mut() {
            *l /= zs;
        }
        Ok(ExactGibbs { n, params, probs: logs, log_z: max + zs.ln() })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> ThermoParams {
        self.params
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_z
    }

    pub fn partition_function(&self) -> f64 {
        self.log_z.exp()
    }

    /// Probability of a single configuration (bit `x` set means `sigma_x = -1`).
    pub fn probability(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `<prod_{x in A} sigma_x>` for the parity bitmask of `A`.
    pub fn correlation_mask(&self, mask: u64) -> f64 {
        if self.params.h == 0.0 && mask.count_ones() % 2 == 1 {
            return 0.0;
        }
        if mask == 0 {
            return 1.0;
        }
        let m = mask as usize;
        let mut acc = KahanSum::default();
        for (c, &p) in self.probs.iter().enumerate() {
            if (c & m).count_ones() & 1 == 0 {
                acc.add(p);
            } else {
                acc.add(-p);
            }
        }
        acc.value()
    }

    pub fn correlation(&self, points: &[usize]) -> f64 {
        self.correlation_mask(parity_mask(points))
    }

    pub fn s2(&self, x: usize, y: usize) -> f64 {
        self.correlation(&[x, y])
    }

    pub fn ursell4(&self, x: [usize; 4]) -> f64 {
        let s = |a: usize, b: usize| self.s2(x[a], x[b]);
        self.correlation(&x) - s(0, 1) * s(2, 3) - s(0, 2) * s(1, 3) - s(0, 3) * s(1, 2)
    }

    /// Full two-point table `S[x][y]`.
    pub fn s2_table(&self) -> Vec<Vec<f64>> {
        let mut t = vec![vec![1.0; self.n]; self.n];
        for x in 0..self.n {
            for y in x + 1..self.n {
                let v = self.s2(x, y);
                t[x][y] = v;
                t[y][x] = v;
            }
        }
        t
    }

    /// `<(sum_{x in block} sigma_x)^k>` for `k = 0..=max_power`.
    pub fn block_moments(&self, block: &[usize], max_power: usize) -> Vec<f64> {
        let bm = parity_mask(block) as usize;
        let size = block.len() as i64;
        let mut dist = vec![0.0f64; block.len() + 1];
        for (c, &p) in self.probs.iter().enumerate() {
            dist[(c & bm).count_ones() as usize] += p;
        }
        (0..=max_power)
            .map(|k| {
                dist.iter()
                    .enumerate()
                    .map(|(down, &p)| p * ((size - 2 * down as i64) as f64).powi(k as i32))
                    .collect::<KahanSum>()
                    .value()
            })
            .collect()
    }

    /// `<exp(z sum_x f_x sigma_x)>` for a real weight vector over all vertices.
    pub fn mgf(&self, f: &[f64], z: f64) -> f64 {
        let mut acc = KahanSum::default();
        let mut field = f.iter().sum::<f64>();
        // Gray-code walk keeps the linear functional incremental.
        acc.add(self.probs[0] * (z * field).exp());
        let mut mask = 0usize;
        for k in 1..self.probs.len() {
            let x = k.trailing_zeros() as usize;
            let was_up = mask >> x & 1 == 0;
            field += if was_up { -2.0 * f[x] } else { 2.0 * f[x] };
            mask ^= 1 << x;
            acc.add(self.probs[mask] * (z * field).exp());
        }
        acc.value()
    }

    /// Moments `<(sum_x f_x sigma_x)^k>` for `k = 0..=max_power`.
    pub fn linear_moments(&self, f: &[f64], max_power: usize) -> Vec<f64> {
        let mut acc = vec![KahanSum::default(); max_power + 1];
        let mut field = f.iter().sum::<f64>();
        let mut mask = 0usize;
        for k in 0..self.probs.len() {
            if k > 0 {
                let x = k.trailing_zeros() as usize;
                let was_up = mask >> x & 1 == 0;
                field += if was_up { -2.0 * f[x] } else { 2.0 * f[x] };
                mask ^= 1 << x;
            }
            let p = self.probs[mask];
            let mut pw = 1.0;
            for a in acc.iter_mut() {
                a.add(p * pw);
                pw *= field;
            }
        }
        acc.iter().map(KahanSum::value).collect()
    }
}

pub fn partition_function(g: &CouplingGraph, p: ThermoParams) -> Result<f64> {
    Ok(ExactGibbs::new(g, p)?.partition_function())
}

/// `<prod_{x in A} sigma_x>`, with repeated vertices cancelling in pairs.
pub fn correlation(g: &CouplingGraph, p: ThermoParams, points: &[usize]) -> Result<f64> {
    check_points(g, points)?;
    if p.h == 0.0 && parity_mask(points).count_ones() % 2 == 1 {
        p.validate()?;
        return Ok(0.0);
    }
    Ok(ExactGibbs::new(g, p)?.correlation(points))
}

pub fn ursell4(g: &CouplingGraph, p: ThermoParams, x: [usize; 4]) -> Result<f64> {
    check_points(g, &x)?;
    p.require_zero_field()?;
    Ok(ExactGibbs::new(g, p)?.ursell4(x))
}

fn check_points(g: &CouplingGraph, points: &[usize]) -> Result<()> {
    match points.iter().find(|&&x| x >= g.n_vertices()) {
        Some(x) => Err(Error::InvalidArgument(format!("vertex {x} is not in the graph"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice, LatticeSpec};
    use approx::assert_relative_eq;

    fn edge() -> CouplingGraph {
        CouplingGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap()
    }

    /// Independent oracle: direct sum over all configurations.
    fn naive(g: &CouplingGraph, beta: f64, points: &[usize]) -> (f64, f64) {
        let n = g.n_vertices();
        let (mut z, mut num) = (0.0, 0.0);
        for m in 0..1u64 << n {
            let s = SpinConfig::from_mask(n, m);
            let w = (-beta * s.energy(g, 0.0)).exp();
            z += w;
            num += w * points.iter().map(|&x| s.values[x] as f64).product::<f64>();
        }
        (z, num / z)
    }

    #[test]
    fn partition_function_examples() {
        assert_relative_eq!(partition_function(&edge(), ThermoParams::new(0.0)).unwrap(), 4.0);
        assert_relative_eq!(
            partition_function(&edge(), ThermoParams::new(1.0)).unwrap(),
            4.0 * 1f64.cosh(),
            max_relative = 1e-14
        );
        assert_relative_eq!(4.0 * 1f64.cosh(), 6.1723226, epsilon = 1e-7);
        let iso = CouplingGraph::from_triples(2, &[]).unwrap();
        assert_relative_eq!(partition_function(&iso, ThermoParams::new(3.3)).unwrap(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn correlation_examples() {
        let p = ThermoParams::new(0.8);
        assert_relative_eq!(correlation(&edge(), p, &[0, 1]).unwrap(), 0.8f64.tanh(), max_relative = 1e-14);
        assert_eq!(correlation(&edge(), p, &[0]).unwrap(), 0.0);
        assert_eq!(correlation(&edge(), p, &[0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn ursell_examples() {
        let g = build_lattice(LatticeSpec::free(2, 2)).unwrap();
        assert_relative_eq!(ursell4(&g, ThermoParams::new(0.3), [1; 4]).unwrap(), -2.0, epsilon = 1e-14);
        assert_relative_eq!(ursell4(&g, ThermoParams::new(0.0), [0, 1, 2, 3]).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_naive_sum() {
        let g = build_lattice(LatticeSpec::periodic(2, 3)).unwrap();
        let gibbs = ExactGibbs::new(&g, ThermoParams::new(0.37)).unwrap();
        for pts in [vec![0, 4], vec![0, 1, 2, 8], vec![3, 5]] {
            let (z, c) = naive(&g, 0.37, &pts);
            assert_relative_eq!(gibbs.partition_function(), z, max_relative = 1e-12);
            assert_relative_eq!(gibbs.correlation(&pts), c, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn field_breaks_odd_vanishing() {
        let g = edge();
        let m = correlation(&g, ThermoParams::with_field(0.5, 0.2), &[0]).unwrap();
        assert!(m > 0.0);
        assert!(ursell4(&g, ThermoParams::with_field(0.5, 0.2), [0, 1, 0, 1]).is_err());
    }

    #[test]
    fn cap_enforced() {
        let g = build_lattice(LatticeSpec::free(1, 30)).unwrap();
        assert!(matches!(
            ExactGibbs::new(&g, ThermoParams::new(0.1)),
            Err(Error::EnumerationCap { size: 30, .. })
        ));
    }

    #[test]
    fn block_moments_at_infinite_temperature() {
        let g = build_lattice(LatticeSpec::periodic(2, 4)).unwrap();
        let gibbs = ExactGibbs::new(&g, ThermoParams::new(0.0)).unwrap();
        let all: Vec<usize> = (0..16).collect();
        let m = gibbs.block_moments(&all, 4);
        assert_relative_eq!(m[2], 16.0, max_relative = 1e-13);
        assert_relative_eq!(m[4], 3.0 * 256.0 - 2.0 * 16.0, max_relative = 1e-13);
    }

    #[test]
    fn mgf_matches_moments_series() {
        let g = edge();
        let gibbs = ExactGibbs::new(&g, ThermoParams::new(0.7)).unwrap();
        let f = [0.3, 1.1];
        // Two-spin closed form.
        let t = 0.7f64.tanh();
        let z: f64 = 0.9;
        let exact = ((z * 1.4).cosh() * (1.0 + t) + (z * 0.8).cosh() * (1.0 - t)) / 2.0;
        assert_relative_eq!(gibbs.mgf(&f, z), exact, max_relative = 1e-13);
        let m = gibbs.linear_moments(&f, 2);
        assert_relative_eq!(m[2], 0.09 + 1.21 + 2.0 * 0.33 * t, max_relative = 1e-13);
    }
}
