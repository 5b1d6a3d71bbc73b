use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monte Carlo estimate with binned standard error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub bins: usize,
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
    pub rng: String,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr + 1e-12 * value.abs().max(1.0)
    }

    /// Inverse-variance combination of independent estimates.
    pub fn combine(parts: &[Estimate]) -> Result<Estimate> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("nothing to combine".into()))?;
        if parts.iter().any(|p| !(p.stderr > 0.0)) {
            let n = parts.len() as f64;
            let mean = parts.iter().map(|p| p.mean).sum::<f64>() / n;
            let var = parts.iter().map(|p| p.stderr * p.stderr).sum::<f64>() / (n * n);
            return Ok(Estimate {
                mean,
                stderr: var.sqrt(),
                bins: parts.iter().map(|p| p.bins).sum(),
                samples: parts.iter().map(|p| p.samples).sum(),
                ..first.clone()
            });
        }
        let (mut wsum, mut acc) = (0.0, 0.0);
        for p in parts {
            let w = 1.0 / (p.stderr * p.stderr);
            wsum += w;
            acc += w * p.mean;
        }
        Ok(Estimate {
            mean: acc / wsum,
            stderr: (1.0 / wsum).sqrt(),
            bins: parts.iter().map(|p| p.bins).sum(),
            samples: parts.iter().map(|p| p.samples).sum(),
            ..first.clone()
        })
    }
}

/// Per-bin running sums of several measured channels.
#[derive(Debug, Clone)]
pub struct Binner {
    channels: usize,
    bins: usize,
    total: u64,
    per_bin: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
    cursor: u64,
}

impl Binner {
    /// `total` measurements will be split into `bins` consecutive bins.
    pub fn new(channels: usize, bins: usize, total: u64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument("at least two bins are required".into()));
        }
        if total < bins as u64 {
            return Err(Error::InvalidArgument(format!(
                "{total} measurements cannot fill {bins} bins"
            )));
        }
        Ok(Binner {
            channels,
            bins,
            total,
            per_bin: total / bins as u64,
            sums: vec![0.0; channels * bins],
            counts: vec![0; bins],
            cursor: 0,
        })
    }

    fn bin_of(&self, i: u64) -> usize {
        ((i / self.per_bin) as usize).min(self.bins - 1)
    }

    /// Records one measurement of every channel.
    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.channels);
        let b = self.bin_of(self.cursor.min(self.total - 1));
        self.cursor += 1;
        self.counts[b] += 1;
        let row = &mut self.sums[b * self.channels..(b + 1) * self.channels];
        for (s, v) in row.iter_mut().zip(values) {
            *s += v;
        }
    }

    /// Builds a binner from externally accumulated per-bin sums and counts.
    pub fn from_sums(sums: Vec<Vec<f64>>, counts: Vec<u64>) -> Result<Self> {
        let bins = sums.len();
        if bins < 2 || counts.len() != bins || counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("need at least two non-empty bins".into()));
        }
        let channels = sums[0].len();
        let total: u64 = counts.iter().sum();
        Ok(Binner {
            channels,
            bins,
            total,
            per_bin: total / bins as u64,
            sums: sums.concat(),
            counts,
            cursor: total,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Raw channel sums per bin (`bins x channels`).
    pub fn bin_sums(&self) -> Vec<Vec<f64>> {
        self.sums.chunks(self.channels).map(<[f64]>::to_vec).collect()
    }

    pub fn bin_counts(&self) -> &[u64] {
        &self.counts
    }

    fn bin_means(&self) -> Vec<Vec<f64>> {
        self.sums
            .chunks(self.channels)
            .zip(&self.counts)
            .map(|(row, &c)| row.iter().map(|s| s / c.max(1) as f64).collect())
            .collect()
    }

    fn overall_means(&self, skip: Option<usize>) -> Vec<f64> {
        let mut s = vec![0.0; self.channels];
        let mut n = 0u64;
        for b in 0..self.bins {
            if Some(b) == skip {
                continue;
            }
            n += self.counts[b];
            for (acc, v) in s.iter_mut().zip(&self.sums[b * self.channels..(b + 1) * self.channels]) {
                *acc += v;
            }
        }
        s.iter().map(|v| v / n.max(1) as f64).collect()
    }

    /// `(mean, stderr)` of a plain channel average.
    pub fn channel(&self, ch: usize) -> (f64, f64) {
        let means = self.bin_means();
        let nb = self.bins as f64;
        let mean = self.overall_means(None)[ch];
        let bm: Vec<f64> = means.iter().map(|r| r[ch]).collect();
        let avg = bm.iter().sum::<f64>() / nb;
        let var = bm.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (nb - 1.0);
        (mean, (var / nb).sqrt())
    }

    /// Jackknife `(estimate, stderr)` of a function of the channel means.
    pub fn jackknife(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let full = f(&self.overall_means(None));
        let nb = self.bins as f64;
        let leave: Vec<f64> = (0..self.bins).map(|b| f(&self.overall_means(Some(b)))).collect();
        let avg = leave.iter().sum::<f64>() / nb;
        let var = leave.iter().map(|v| (v - avg).powi(2)).sum::<f64>() * (nb - 1.0) / nb;
        (full, var.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plain_channel_error_matches_formula() {
        let mut b = Binner::new(1, 4, 8).unwrap();
        for v in [1.0, 3.0, 2.0, 2.0, 5.0, 7.0, 0.0, 2.0] {
            b.push(&[v]);
        }
        let (m, e) = b.channel(0);
        assert_relative_eq!(m, 22.0 / 8.0);
        // Bin means 2, 2, 6, 1.
        let avg: f64 = 11.0 / 4.0;
        let var = [2.0f64, 2.0, 6.0, 1.0].iter().map(|v| (v - avg).powi(2)).sum::<f64>() / 3.0;
        assert_relative_eq!(e, (var / 4.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn jackknife_of_linear_function_equals_plain_error() {
        let mut b = Binner::new(1, 8, 64).unwrap();
        for i in 0..64 {
            b.push(&[((i * 37) % 11) as f64]);
        }
        let (m1, e1) = b.channel(0);
        let (m2, e2) = b.jackknife(|m| m[0]);
        assert_relative_eq!(m1, m2, max_relative = 1e-14);
        assert_relative_eq!(e1, e2, max_relative = 1e-10);
    }

    #[test]
    fn rejects_underfilled_bins() {
        assert!(Binner::new(1, 8, 7).is_err());
    }

    #[test]
    fn combine_is_inverse_variance_weighted() {
        let mk = |mean, stderr| Estimate { mean, stderr, bins: 8, samples: 80, seed: 1, stream: 0, rng: "ChaCha8".into() };
        let c = Estimate::combine(&[mk(1.0, 1.0), mk(3.0, 1.0)]).unwrap();
        assert_relative_eq!(c.mean, 2.0);
        assert_relative_eq!(c.stderr, 0.5f64.sqrt());
    }
}
