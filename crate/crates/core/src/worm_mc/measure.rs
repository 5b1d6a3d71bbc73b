use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::fft::TorusCorrelator;
use super::stats::{Binner, Estimate};
use super::{four_point_suffix, s2_name, Observable, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{Boundary, CouplingGraph, LatticeSpec};

enum Item {
    Pairs { pairs: Vec<(usize, usize)>, off: usize },
    Distance { off: usize },
    Magnetization { off: usize },
    Block { sites: Vec<usize>, off: usize },
    FourPoint { p: [usize; 4], off: usize },
    Xi { off: usize, l: usize },
    Series { name: String, weights: Vec<f64> },
}

/// Lowest-momentum Fourier modes, one per axis.
struct Modes {
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

fn periodic_lattice(g: &CouplingGraph, what: &str) -> Result<LatticeSpec> {
    match g.lattice() {
        Some(spec) if spec.bc == Boundary::Periodic => Ok(*spec),
        _ => Err(Error::InvalidArgument(format!("{what} requires a periodic lattice"))),
    }
}

/// Turns spin configurations into channel vectors and channel means into
/// named estimates.
pub(crate) struct SpinMeasurer {
    items: Vec<Item>,
    channels: usize,
    n: usize,
    corr: Option<TorusCorrelator>,
    modes: Option<Modes>,
    series: BTreeMap<String, Vec<f64>>,
}

impl SpinMeasurer {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let g = cfg.graph;
        let n = g.n_vertices();
        let mut items = Vec::new();
        let mut off = 0;
        let mut corr = None;
        let mut modes = None;
        for o in &cfg.observables {
            match o {
                Observable::S2Pairs { pairs } => {
                    items.push(Item::Pairs { pairs: pairs.clone(), off });
                    off += pairs.len();
                }
                Observable::S2Distance => {
                    let c = TorusCorrelator::new(periodic_lattice(g, "s2 by distance")?).unwrap();
                    items.push(Item::Distance { off });
                    off += c.n_classes();
                    corr = Some(c);
                }
                Observable::Magnetization => {
                    items.push(Item::Magnetization { off });
                    off += 2;
                }
                Observable::Block { sites } => {
                    items.push(Item::Block { sites: sites.clone(), off });
                    off += 2;
                }
                Observable::FourPoint { points } => {
                    items.push(Item::FourPoint { p: *points, off });
                    off += 7;
                }
                Observable::CorrelationLength => {
                    let spec = periodic_lattice(g, "correlation length")?;
                    let coords: Vec<Vec<i64>> = (0..n).map(|x| spec.coords(x)).collect();
                    let k = 2.0 * PI / spec.l as f64;
                    modes = Some(Modes {
                        cos: (0..spec.d).map(|a| coords.iter().map(|c| (k * c[a] as f64).cos()).collect()).collect(),
                        sin: (0..spec.d).map(|a| coords.iter().map(|c| (k * c[a] as f64).sin()).collect()).collect(),
                    });
                    items.push(Item::Xi { off, l: spec.l });
                    off += 2;
                }
                Observable::Series { name, weights } => {
                    items.push(Item::Series { name: name.clone(), weights: weights.clone() });
                }
                Observable::EdgeStates => {
                    return Err(Error::InvalidArgument("edge states are only measured by the worm sampler".into()));
                }
            }
        }
        Ok(SpinMeasurer { items, channels: off, n, corr, modes, series: BTreeMap::new() })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn measure(&mut self, s: &[i8], out: &mut [f64]) {
        let f = |x: usize| s[x] as f64;
        for item in &self.items {
            match item {
                Item::Pairs { pairs, off } => {
                    for (k, &(x, y)) in pairs.iter().enumerate() {
                        out[off + k] = f(x) * f(y);
                    }
                }
                Item::Distance { off } => {
                    let c = self.corr.as_mut().unwrap().class_correlations(s);
                    out[*off..off + c.len()].copy_from_slice(&c);
                }
                Item::Magnetization { off } => {
                    let m = s.iter().map(|&v| v as i64).sum::<i64>() as f64 / self.n as f64;
                    let m2 = m * m;
                    out[*off] = m2;
                    out[off + 1] = m2 * m2;
                }
                Item::Block { sites, off } => {
                    let m = sites.iter().map(|&x| s[x] as i64).sum::<i64>() as f64;
                    out[*off] = m * m;
                    out[off + 1] = m * m * m * m;
                }
                Item::FourPoint { p, off } => {
                    let [a, b, c, d] = p.map(f);
                    out[*off..off + 7].copy_from_slice(&[a * b * c * d, a * b, c * d, a * c, b * d, a * d, b * c]);
                }
                Item::Xi { off, .. } => {
                    let modes = self.modes.as_ref().unwrap();
                    let m = s.iter().map(|&v| v as i64).sum::<i64>() as f64;
                    let mut fk = 0.0;
                    for (cs, sn) in modes.cos.iter().zip(&modes.sin) {
                        let (mut re, mut im) = (0.0, 0.0);
                        for x in 0..self.n {
                            re += f(x) * cs[x];
                            im += f(x) * sn[x];
                        }
                        fk += re * re + im * im;
                    }
                    out[*off] = m * m / self.n as f64;
                    out[off + 1] = fk / (self.n * modes.cos.len()) as f64;
                }
                Item::Series { name, weights } => {
                    let t: f64 = weights.iter().zip(s).map(|(w, &v)| w * v as f64).sum();
                    self.series.entry(name.clone()).or_default().push(t);
                }
            }
        }
    }

    pub fn finish(self, b: &Binner, cfg: &RunConfig) -> (BTreeMap<String, Estimate>, BTreeMap<String, Vec<f64>>) {
        let mut est = BTreeMap::new();
        let nb = b.bins();
        let ns = b.samples();
        let mut put = |name: String, (m, e): (f64, f64)| {
            est.insert(name, cfg.estimate(m, e, nb, ns));
        };
        for item in &self.items {
            match item {
                Item::Pairs { pairs, off } => {
                    for (k, &(x, y)) in pairs.iter().enumerate() {
                        put(s2_name(x, y), b.channel(off + k));
                    }
                }
                Item::Distance { off } => {
                    let c = self.corr.as_ref().unwrap();
                    for (k, norm) in c.class_norms2().iter().enumerate() {
                        put(format!("s2_r2={norm}"), b.channel(off + k));
                    }
                }
                Item::Magnetization { off } => {
                    let o = *off;
                    let n = self.n as f64;
                    put("m2".into(), b.channel(o));
                    put("m4".into(), b.channel(o + 1));
                    put("chi".into(), b.jackknife(|m| n * m[o]));
                    put("binder".into(), b.jackknife(|m| 1.0 - m[o + 1] / (3.0 * m[o] * m[o])));
                }
                Item::Block { off, .. } => {
                    let o = *off;
                    put("block_m2".into(), b.channel(o));
                    put("block_m4".into(), b.channel(o + 1));
                    put("r_ratio".into(), b.jackknife(|m| 3.0 - m[o + 1] / (m[o] * m[o])));
                    put("block_binder".into(), b.jackknife(|m| 1.0 - m[o + 1] / (3.0 * m[o] * m[o])));
                }
                Item::FourPoint { p, off } => {
                    let o = *off;
                    let sfx = four_point_suffix(p);
                    let u4 = move |m: &[f64]| m[o] - m[o + 1] * m[o + 2] - m[o + 3] * m[o + 4] - m[o + 5] * m[o + 6];
                    put(format!("s4{sfx}"), b.channel(o));
                    put(format!("u4{sfx}"), b.jackknife(u4));
                    put(format!("u4_gap{sfx}"), b.jackknife(|m| -u4(m) - m[o + 3] * m[o + 4]));
                    // (S4 - Pf) / S4 for points in cyclic order.
                    put(
                        format!("pf_residual{sfx}"),
                        b.jackknife(|m| 1.0 - (m[o + 1] * m[o + 2] - m[o + 3] * m[o + 4] + m[o + 5] * m[o + 6]) / m[o]),
                    );
                }
                Item::Xi { off, l } => {
                    let o = *off;
                    let s = 2.0 * (PI / *l as f64).sin();
                    put("xi".into(), b.jackknife(|m| (m[o] / m[o + 1] - 1.0).max(0.0).sqrt() / s));
                    put("f_kmin".into(), b.channel(o + 1));
                    put("chi".into(), b.channel(o));
                }
                Item::Series { .. } => {}
            }
        }
        (est, self.series)
    }
}
