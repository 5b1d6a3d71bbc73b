//! Pfaffians, pairing signs and the boundary Pfaffian identity of planar
//! Ising models.

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::ising_exact::{ExactGibbs, ThermoParams};

/// Strictly upper-triangular entries `A_{ij}`, `i < j`, of a `dim x dim`
/// antisymmetric array.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricArray {
    dim: usize,
    upper: Vec<f64>,
}

impl AntisymmetricArray {
    pub fn zeros(dim: usize) -> Self {
        AntisymmetricArray { dim, upper: vec![0.0; dim * dim.saturating_sub(1) / 2] }
    }

    /// Builds the array from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            for j in i + 1..dim {
                a.set(i, j, f(i, j));
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        // Row-major packing of the strict upper triangle.
        i * (2 * self.dim - i - 1) / 2 + (j - i - 1)
    }

    /// Sets `A_{ij}` for `i < j`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < j && j < self.dim, "set requires i < j < dim");
        let o = self.offset(i, j);
        self.upper[o] = v;
    }

    /// `A_{ij}` with the implicit antisymmetry and zero diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[self.offset(i, j)],
            Greater => -self.upper[self.offset(j, i)],
            Equal => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// `Pf(A) = sum_pi sgn(pi) prod A_{j, pi(j)}`.
///
/// Direct pairing expansion up to dimension 8, skew-symmetric `LTL^T`
/// elimination with partial pivoting above that.
pub fn pfaffian(a: &AntisymmetricArray) -> Result<f64> {
    if a.dim % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Pfaffian of odd dimension {}", a.dim)));
    }
    if a.dim <= 8 {
        let idx: Vec<usize> = (0..a.dim).collect();
        Ok(expand(a, &idx))
    } else {
        Ok(eliminate(a.to_dense()))
    }
}

fn expand(a: &AntisymmetricArray, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    let mut rest = Vec::with_capacity(idx.len() - 2);
    for k in 1..idx.len() {
        let v = a.get(idx[0], idx[k]);
        if v == 0.0 {
            continue;
        }
        rest.clear();
        rest.extend(idx[1..].iter().enumerate().filter(|&(i, _)| i + 1 != k).map(|(_, &x)| x));
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * v * expand(a, &rest);
    }
    total
}

fn eliminate(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let kp = (k + 1..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if kp != k + 1 {
            m.swap(k + 1, kp);
            for row in m.iter_mut() {
                row.swap(k + 1, kp);
            }
            pf = -pf;
        }
        if m[k + 1][k] == 0.0 {
            return 0.0;
        }
        pf *= m[k][k + 1];
        if k + 2 < n {
            let tau: Vec<f64> = m[k][k + 2..].iter().map(|&v| v / m[k][k + 1]).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| m[i][k + 1]).collect();
            for (a, i) in (k + 2..n).enumerate() {
                for (b, j) in (k + 2..n).enumerate() {
                    m[i][j] += tau[a] * col[b] - col[a] * tau[b];
                }
            }
        }
        k += 2;
    }
    pf
}

/// A fixed-point-free involution on `0..2n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    partner: Vec<usize>,
}

impl Pairing {
    pub fn new(partner: Vec<usize>) -> Result<Self> {
        for (j, &p) in partner.iter().enumerate() {
            if p >= partner.len() || p == j || partner[p] != j {
                return Err(Error::InvalidArgument(format!("not a pairing at position {j}")));
            }
        }
        Ok(Pairing { partner })
    }

    pub fn from_pairs(size: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut partner = vec![usize::MAX; size];
        for &(a, b) in pairs {
            if a >= size || b >= size || partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::InvalidArgument(format!("invalid pair ({a}, {b})")));
            }
            partner[a] = b;
            partner[b] = a;
        }
        Self::new(partner)
    }

    pub fn partner(&self, j: usize) -> usize {
        self.partner[j]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// Pairs `(i, j)` with `i < j`, ordered by `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.partner.len()).filter(|&i| i < self.partner[i]).map(|i| (i, self.partner[i])).collect()
    }

    /// All `(2n-1)!!` pairings of `0..size`.
    pub fn all(size: usize) -> Vec<Pairing> {
        fn rec(free: &mut Vec<usize>, partner: &mut Vec<usize>, out: &mut Vec<Pairing>) {
            if free.is_empty() {
                out.push(Pairing { partner: partner.clone() });
                return;
            }
            let a = free.remove(0);
            for k in 0..free.len() {
                let b = free.remove(k);
                partner[a] = b;
                partner[b] = a;
                rec(free, partner, out);
                free.insert(k, b);
            }
            free.insert(0, a);
        }
        let mut out = Vec::new();
        if size % 2 == 0 {
            rec(&mut (0..size).collect(), &mut vec![0; size], &mut out);
        }
        out
    }

    /// Number of crossing chord pairs for labels in their natural cyclic order.
    pub fn crossings(&self) -> usize {
        let pairs = self.pairs();
        let mut c = 0;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            for &(p, q) in &pairs[i + 1..] {
                if (a < p && p < b) != (a < q && q < b) {
                    c += 1;
                }
            }
        }
        c
    }
}

/// `(-1)^{#crossing chord pairs}` when label `j` sits at `positions[j]` on a
/// cycle and the chords are drawn inside it.
pub fn crossing_sign(positions: &[i64], pairing: &Pairing) -> Result<i8> {
    if positions.len() != pairing.len() {
        return Err(Error::InvalidArgument("positions and pairing differ in size".into()));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate boundary positions".into()));
    }
    let chords: Vec<(i64, i64)> = pairing
        .pairs()
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (positions[i], positions[j]);
            (a.min(b), a.max(b))
        })
        .collect();
    let mut crossings = 0;
    for (i, &(a, b)) in chords.iter().enumerate() {
        for &(p, q) in &chords[i + 1..] {
            if (a < p && p < b) != (a < q && q < b) {
                crossings += 1;
            }
        }
    }
    Ok(if crossings % 2 == 0 { 1 } else { -1 })
}

/// Reorders `points` along the marked boundary face.
pub fn cyclic_order(g: &CouplingGraph, points: &[usize]) -> Result<Vec<usize>> {
    let face = g
        .boundary_face()
        .ok_or_else(|| Error::InvalidArgument("graph has no marked boundary face".into()))?;
    let mut with_pos = Vec::with_capacity(points.len());
    for &p in points {
        let pos = face
            .iter()
            .position(|&v| v == p)
            .ok_or_else(|| Error::InvalidArgument(format!("vertex {p} is not on the marked boundary face")))?;
        with_pos.push((pos, p));
    }
    with_pos.sort_unstable();
    if with_pos.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("boundary points must be distinct".into()));
    }
    Ok(with_pos.into_iter().map(|(_, p)| p).collect())
}

/// `|S_{2n}(points) - Pf[S_2(x_i, x_j)]|` with the points taken in cyclic
/// order along the marked face.
pub fn boundary_pfaffian_residual(g: &CouplingGraph, beta: f64, points: &[usize]) -> Result<f64> {
    let ordered = cyclic_order(g, points)?;
    let gibbs = ExactGibbs::new(g, ThermoParams::new(beta))?;
    boundary_pfaffian_residual_with(&gibbs, &ordered)
}

/// Residual for points already in cyclic order, reusing enumerated weights.
pub fn boundary_pfaffian_residual_with(gibbs: &ExactGibbs, ordered: &[usize]) -> Result<f64> {
    if ordered.len() % 2 == 1 || ordered.is_empty() {
        return Err(Error::InvalidArgument("need an even, non-zero number of points".into()));
    }
    let s = gibbs.correlation(ordered);
    let a = AntisymmetricArray::from_fn(ordered.len(), |i, j| gibbs.s2(ordered[i], ordered[j]));
    Ok((s - pfaffian(&a)?).abs())
}
