//! Single-block marginals of weighted Ising averages and their tuning toward
//! the `exp(-lambda phi^4 + b phi^2)` family.
//!
//! A block of `N` spins with mean-field self-interaction carries the field
//! `phi = alpha / sqrt(N) * sum_j sigma_j` and the weight
//! `binomial(N, k) * exp((g/N) (2k - N)^2)` on the level with `k` up spins.
//! In this normalization the mean-field critical point is `g = 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising_exact::KahanSum;

/// Largest block size handled by [`block_pmf`].
pub const BLOCK_SIZE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub n: usize,
    pub alpha: f64,
    pub g: f64,
}

impl BlockParams {
    pub fn new(n: usize, alpha: f64, g: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        if n > BLOCK_SIZE_CAP {
            return Err(Error::SiteCap { what: "block", size: n as u64, cap: BLOCK_SIZE_CAP as u64 });
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidArgument(format!("g must be non-negative, got {g}")));
        }
        Ok(BlockParams { n, alpha, g })
    }
}

/// Density proportional to `exp(-lambda phi^4 + b phi^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMeasure {
    pub lambda: f64,
    pub b: f64,
}

impl TargetMeasure {
    pub fn new(lambda: f64, b: f64) -> Result<Self> {
        let t = TargetMeasure { lambda, b };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda.is_finite()
            && self.b.is_finite()
            && (self.lambda > 0.0 || (self.lambda == 0.0 && self.b < 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::NonNormalizable { lambda: self.lambda, b: self.b })
        }
    }

    fn exponent(&self, phi: f64) -> f64 {
        let p2 = phi * phi;
        -self.lambda * p2 * p2 + self.b * p2
    }
}

/// Support points `phi_k = alpha/sqrt(N) (2k - N)` with their probabilities,
/// in increasing order of `phi`.
pub fn block_pmf(p: BlockParams) -> Result<Vec<(f64, f64)>> {
    let p = BlockParams::new(p.n, p.alpha, p.g)?;
    let n = p.n;
    let nf = n as f64;
    let half = n / 2;
    // ln binomial(N, k) for k <= N/2, built incrementally.
    let mut logw = Vec::with_capacity(half + 1);
    let mut lnc = 0.0;
    for k in 0..=half {
        if k > 0 {
            lnc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let m = 2.0 * k as f64 - nf;
        logw.push(lnc + p.g / nf * m * m);
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    // Mirror the lower half so the result is exactly symmetric.
    let mut total = KahanSum::default();
    for (k, &wk) in w.iter().enumerate() {
        let mirrored = n - k != k;
        total.add(if mirrored { 2.0 * wk } else { wk });
    }
    let z = total.value();
    let scale = p.alpha / nf.sqrt();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let wk = if k <= half { w[k] } else { w[n - k] };
        out.push((scale * (2.0 * k as f64 - nf), wk / z));
    }
    Ok(out)
}

/// Raw moments `E[phi^k]`, `k = 0..=max_order`, of a symmetric pmf.
pub fn pmf_moments(pmf: &[(f64, f64)], max_order: usize) -> Vec<f64> {
    (0..=max_order)
        .map(|k| {
            if k % 2 == 1 {
                return 0.0;
            }
            pmf.iter().map(|&(x, p)| p * x.powi(k as i32)).collect::<KahanSum>().value()
        })
        .collect()
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (non-negative half).
const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, gk15(&f, a, b))];
    let mut total = KahanSum::default();
    let whole = stack[0].2 .0.abs();
    let mut evaluations = 0;
    while let Some((lo, hi, (val, err))) = stack.pop() {
        evaluations += 1;
        let width_share = (hi - lo) / (b - a);
        if err <= rel_tol * whole.max(f64::MIN_POSITIVE) * width_share.max(1e-3) || hi - lo < 1e-12 * (b - a) {
            total.add(val);
            continue;
        }
        if evaluations > 200_000 {
            return Err(Error::NoConvergence("adaptive quadrature exceeded its subdivision budget".into()));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, gk15(&f, lo, mid)));
        stack.push((mid, hi, gk15(&f, mid, hi)));
    }
    Ok(total.value())
}

/// Moments `E[phi^k]`, `k = 0..=max_order`, of the continuum density.
pub fn target_moments(t: TargetMeasure, max_order: usize) -> Result<Vec<f64>> {
    t.validate()?;
    // Peak of the exponent over phi >= 0, used as a shift against overflow.
    let peak_at = if t.b > 0.0 { (t.b / (2.0 * t.lambda)).sqrt() } else { 0.0 };
    let peak = t.exponent(peak_at);
    // Cut off where the density has fallen by e^-800.
    let mut cut = peak_at.max(1.0);
    while t.exponent(cut) - peak > -800.0 {
        cut *= 1.5;
    }
    let breaks = [0.0, peak_at, cut];
    let piece = |k: i32| -> Result<f64> {
        let f = |x: f64| x.powi(k) * (t.exponent(x) - peak).exp();
        let mut s = 0.0;
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                s += integrate(f, w[0], w[1], 1e-13)?;
            }
        }
        Ok(s)
    };
    let norm = piece(0)?;
    (0..=max_order)
        .map(|k| if k % 2 == 1 { Ok(0.0) } else { Ok(piece(k as i32)? / norm) })
        .collect()
}

/// Outcome of [`tune`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: BlockParams,
    /// Largest relative mismatch of the second and fourth moments.
    pub residual: f64,
    pub iterations: usize,
}

fn kurtosis(n: usize, g: f64) -> Result<f64> {
    let m = pmf_moments(&block_pmf(BlockParams::new(n, 1.0, g)?)?, 4);
    Ok(m[4] / (m[2] * m[2]))
}

/// Chooses `(alpha, g)` so the block matches the target's second and fourth
/// moments. The kurtosis depends on `g` alone and is matched by bisection;
/// `alpha` then fixes the scale.
pub fn tune(n: usize, t: TargetMeasure) -> Result<TuneResult> {
    t.validate()?;
    if !(t.lambda > 0.0) {
        return Err(Error::InvalidArgument("tuning requires lambda > 0".into()));
    }
    let target = target_moments(t, 4)?;
    let want = target[4] / (target[2] * target[2]);
    let k0 = kurtosis(n, 0.0)?;
    if !(k0 > want) {
        return Err(Error::NoConvergence(format!(
            "block of {n} spins has kurtosis at most {k0:.6} at g = 0, cannot reach {want:.6}"
        )));
    }
    // Kurtosis falls toward 1 as g grows past the mean-field point.
    let mut hi = 1.0;
    while kurtosis(n, hi)? > want {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoConvergence("no upper bracket for g".into()));
        }
    }
    let mut lo = 0.0;
    let mut iterations = 0;
    while hi - lo > 1e-15 * hi.max(1.0) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if kurtosis(n, mid)? > want {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let g = 0.5 * (lo + hi);
    let m = pmf_moments(&block_pmf(BlockParams::new(n, 1.0, g)?)?, 4);
    let alpha = (target[2] / m[2]).sqrt();
    let params = BlockParams::new(n, alpha, g)?;
    let got = pmf_moments(&block_pmf(params)?, 4);
    let residual = ((got[2] - target[2]) / target[2]).abs().max(((got[4] - target[4]) / target[4]).abs());
    Ok(TuneResult { params, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    #[test]
    fn small_blocks() {
        let p = block_pmf(BlockParams::new(1, 0.7, 0.0).unwrap()).unwrap();
        assert_eq!(p, vec![(-0.7, 0.5), (0.7, 0.5)]);
        let p = block_pmf(BlockParams::new(2, 1.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(p[0].0, -2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p[0].1, 0.25);
        assert_relative_eq!(p[1].1, 0.5);
        let p = block_pmf(BlockParams::new(2, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!((p[0].1 + p[2].1) / p[1].1, 1f64.exp().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn large_block_is_normalized_and_symmetric() {
        for g in [0.0, 0.5, 3.0] {
            let p = block_pmf(BlockParams::new(1_000_001, 1.3, g).unwrap()).unwrap();
            let total: KahanSum = p.iter().map(|x| x.1).collect();
            assert!((total.value() - 1.0).abs() < 1e-12);
            let n = p.len();
            for k in (0..n).step_by(9973) {
                assert_eq!(p[k].1, p[n - 1 - k].1);
                assert_eq!(p[k].0, -p[n - 1 - k].0);
            }
        }
    }

    #[test]
    fn quartic_moments_match_gamma_ratios() {
        let m = target_moments(TargetMeasure::new(1.0, 0.0).unwrap(), 6).unwrap();
        assert_relative_eq!(m[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(m[2], gamma(0.75) / gamma(0.25), max_relative = 1e-10);
        assert_relative_eq!(m[4], gamma(1.25) / gamma(0.25), max_relative = 1e-10);
        assert_relative_eq!(m[6], gamma(1.75) / gamma(0.25), max_relative = 1e-10);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[5], 0.0);
    }

    #[test]
    fn gaussian_and_double_well() {
        let m = target_moments(TargetMeasure::new(0.0, -0.5).unwrap(), 4).unwrap();
        assert_relative_eq!(m[2], 1.0, max_relative = 1e-10);
        assert_relative_eq!(m[4], 3.0, max_relative = 1e-10);
        // Deep double well concentrates near phi^2 = b / (2 lambda).
        let m = target_moments(TargetMeasure::new(1.0, 40.0).unwrap(), 2).unwrap();
        assert!((m[2] - 20.0).abs() < 0.1);
        assert!(TargetMeasure::new(0.0, 1.0).is_err());
        assert!(TargetMeasure::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn tuning_matches_moments() {
        let t = TargetMeasure::new(1.0, 0.0).unwrap();
        let r = tune(1024, t).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
        assert!(matches!(tune(1, t), Err(Error::NoConvergence(_))));
    }

    #[test]
    fn tuned_g_approaches_mean_field_point() {
        let t = TargetMeasure::new(1.0, 0.0).unwrap();
        let gs: Vec<f64> = [64, 256, 1024].iter().map(|&n| tune(n, t).unwrap().params.g).collect();
        let dist: Vec<f64> = gs.iter().map(|g| (g - 0.5).abs()).collect();
        assert!(dist[0] > dist[1] && dist[1] > dist[2], "{gs:?}");
    }
}
