use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::graph::{Boundary, LatticeSpec};

/// Translation-averaged two-point function on a periodic lattice, computed
/// with separable FFTs and grouped by squared minimal-image distance.
pub struct TorusCorrelator {
    spec: LatticeSpec,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    class_of: Vec<usize>,
    class_norm2: Vec<i64>,
    class_size: Vec<usize>,
    buf: Vec<Complex<f64>>,
    line: Vec<Complex<f64>>,
    coords: Vec<usize>,
}

impl TorusCorrelator {
    pub fn new(spec: LatticeSpec) -> Option<Self> {
        if spec.bc != Boundary::Periodic {
            return None;
        }
        let n = spec.volume() as usize;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(spec.l);
        let inv = planner.plan_fft_inverse(spec.l);
        let norms: Vec<i64> = (0..n)
            .map(|r| spec.displacement(0, r).iter().map(|c| c * c).sum())
            .collect();
        let mut distinct = norms.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let class_of: Vec<usize> = norms.iter().map(|k| distinct.binary_search(k).unwrap()).collect();
        let mut class_size = vec![0; distinct.len()];
        for &c in &class_of {
            class_size[c] += 1;
        }
        Some(TorusCorrelator {
            spec,
            n,
            fwd,
            inv,
            class_of,
            class_norm2: distinct,
            class_size,
            buf: vec![Complex::new(0.0, 0.0); n],
            line: vec![Complex::new(0.0, 0.0); spec.l],
            coords: (0..n).flat_map(|x| spec.coords(x).into_iter().map(|c| c as usize)).collect(),
        })
    }

    /// Squared distances of the classes, ascending.
    pub fn class_norms2(&self) -> &[i64] {
        &self.class_norm2
    }

    /// Number of displacement vectors in each class.
    pub fn class_sizes(&self) -> &[usize] {
        &self.class_size
    }

    pub fn n_classes(&self) -> usize {
        self.class_norm2.len()
    }

    fn transform(&mut self, inverse: bool) {
        let l = self.spec.l;
        let plan = if inverse { self.inv.clone() } else { self.fwd.clone() };
        let mut stride = 1;
        for _ in 0..self.spec.d {
            for base in 0..self.n {
                if (base / stride) % l != 0 {
                    continue;
                }
                for i in 0..l {
                    self.line[i] = self.buf[base + i * stride];
                }
                plan.process(&mut self.line);
                for i in 0..l {
                    self.buf[base + i * stride] = self.line[i];
                }
            }
            stride *= l;
        }
    }

    /// `C(r) = N^{-1} sum_x sigma_x sigma_{x+r}` for every displacement `r`.
    pub fn displacement_correlations(&mut self, spins: &[i8]) -> Vec<f64> {
        for (b, &s) in self.buf.iter_mut().zip(spins) {
            *b = Complex::new(s as f64, 0.0);
        }
        self.transform(false);
        for b in self.buf.iter_mut() {
            *b = Complex::new(b.norm_sqr(), 0.0);
        }
        self.transform(true);
        let norm = (self.n * self.n) as f64;
        self.buf.iter().map(|c| c.re / norm).collect()
    }

    /// Class averages of [`Self::displacement_correlations`].
    pub fn class_correlations(&mut self, spins: &[i8]) -> Vec<f64> {
        let c = self.displacement_correlations(spins);
        let mut out = vec![0.0; self.n_classes()];
        for (r, v) in c.iter().enumerate() {
            out[self.class_of[r]] += v;
        }
        for (o, &k) in out.iter_mut().zip(&self.class_size) {
            *o /= k as f64;
        }
        out
    }

    /// Class index of the displacement between `a` and `b`.
    pub fn class_between(&self, a: usize, b: usize) -> usize {
        let (d, l) = (self.spec.d, self.spec.l);
        let (ca, cb) = (&self.coords[a * d..(a + 1) * d], &self.coords[b * d..(b + 1) * d]);
        let r = ca.iter().zip(cb).fold(0, |acc, (&x, &y)| acc * l + (y + l - x) % l);
        self.class_of[r]
    }
}
