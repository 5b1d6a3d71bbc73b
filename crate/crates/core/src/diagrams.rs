//! Diagrammatic bounds and scaling observables built on two-point tables:
//! bubble and tree diagrams, the ratio `R_L`, Wick functionals, MGF gap
//! checks and distance-resolved two-point diagnostics.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Boundary, CouplingGraph, LatticeSpec};
use crate::ising_exact::{ExactGibbs, KahanSum};
use crate::worm_mc::{RunOutput, TorusCorrelator};

/// Symmetric table of two-point values over vertex pairs. `NaN` marks a
/// missing entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2Table {
    n: usize,
    values: Vec<f64>,
}

impl S2Table {
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("two-point table must be square".into()));
        }
        for x in 0..n {
            for y in 0..x {
                let (a, b) = (rows[x][y], rows[y][x]);
                if !(a.is_nan() && b.is_nan()) && (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidArgument(format!("table is not symmetric at ({x}, {y})")));
                }
            }
        }
        Ok(S2Table { n, values: rows.concat() })
    }

    pub fn from_exact(gibbs: &ExactGibbs) -> Self {
        let t = gibbs.s2_table();
        S2Table { n: t.len(), values: t.concat() }
    }

    /// Translation-invariant table on a periodic lattice from a function of
    /// the squared minimal-image distance.
    pub fn from_distance_fn(spec: LatticeSpec, f: impl Fn(i64) -> f64) -> Self {
        let n = spec.volume() as usize;
        let mut values = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                let k: i64 = spec.displacement(x, y).iter().map(|c| c * c).sum();
                values[x * n + y] = f(k);
            }
        }
        S2Table { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.n + y]
    }

    fn check(&self, points: &[usize]) -> Result<()> {
        match points.iter().find(|&&x| x >= self.n) {
            Some(x) => Err(Error::InvalidArgument(format!("point {x} outside a table of {} sites", self.n))),
            None => Ok(()),
        }
    }
}

/// Distance from `center` to every vertex: minimal-image Euclidean on
/// lattices, Euclidean on embedded graphs, hop count otherwise.
pub fn distances_from(g: &CouplingGraph, center: usize) -> Vec<f64> {
    let n = g.n_vertices();
    if let Some(spec) = g.lattice() {
        return (0..n).map(|x| spec.distance(center, x)).collect();
    }
    if let Some(emb) = g.embedding() {
        let c = &emb[center];
        return emb
            .iter()
            .map(|p| p.iter().zip(c).map(|(a, b)| ((a - b) * (a - b)) as f64).sum::<f64>().sqrt())
            .collect();
    }
    let mut d = vec![f64::INFINITY; n];
    d[center] = 0.0;
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in g.neighbors(v) {
            if d[w].is_infinite() {
                d[w] = d[v] + 1.0;
                queue.push_back(w);
            }
        }
    }
    d
}

/// `B_ell = sum_{|x| < ell} S2(center, x)^2`.
pub fn bubble(s2: &S2Table, g: &CouplingGraph, center: usize, ell: f64) -> Result<f64> {
    s2.check(&[center])?;
    if g.n_vertices() != s2.n() {
        return Err(Error::InvalidArgument("table and graph sizes differ".into()));
    }
    let d = distances_from(g, center);
    let mut acc = KahanSum::default();
    for x in 0..s2.n() {
        if d[x] < ell {
            let v = s2.get(center, x);
            if v.is_nan() {
                return Err(Error::InvalidArgument(format!("missing table entry ({center}, {x})")));
            }
            acc.add(v * v);
        }
    }
    Ok(acc.value())
}

/// `2 sum_u prod_j S2(u, x_j)`.
pub fn tree_rhs(s2: &S2Table, x: [usize; 4]) -> Result<f64> {
    s2.check(&x)?;
    let acc: KahanSum = (0..s2.n()).map(|u| 2.0 * x.iter().map(|&xj| s2.get(u, xj)).product::<f64>()).collect();
    Ok(acc.value())
}

/// Point-split tree bound. The first sum runs over `y` outside the four
/// points; the correction terms cover `y = x_j`, splitting at `x_j` towards
/// the last remaining point (`x_4`, or `x_3` when `j = 4`).
pub fn tree_rhs_balanced(s2: &S2Table, g: &CouplingGraph, beta: f64, x: [usize; 4]) -> Result<f64> {
    s2.check(&x)?;
    if g.n_vertices() != s2.n() {
        return Err(Error::InvalidArgument("table and graph sizes differ".into()));
    }
    let s = |a: usize, b: usize| s2.get(a, b);
    // flux(y, z) = sum_u beta J_{y,u} S2(u, z)
    let flux = |y: usize, z: usize| -> f64 {
        g.neighbors(y).iter().map(|&(u, e)| beta * g.edge(e).j * s(u, z)).sum()
    };
    let mut acc = KahanSum::default();
    for y in 0..s2.n() {
        if x.contains(&y) {
            continue;
        }
        acc.add(2.0 * s(x[0], y) * s(x[1], y) * flux(y, x[2]) * flux(y, x[3]));
    }
    for j in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&k| k != j).collect();
        let (a, b, last) = (x[others[0]], x[others[1]], x[others[2]]);
        acc.add(2.0 * s(x[j], a) * s(x[j], b) * flux(x[j], last));
    }
    Ok(acc.value())
}

/// `R = -[<T^4> - 3 <T^2>^2]` for `T = M / sqrt(<M^2>)`, from raw block moments.
pub fn r_ratio(m2: f64, m4: f64) -> Result<f64> {
    if !(m2 > 0.0) {
        return Err(Error::InvalidArgument(format!("block second moment must be positive, got {m2}")));
    }
    Ok(3.0 - m4 / (m2 * m2))
}

/// Sum over pairings of the points of the product of paired `S2` values.
pub fn wick_functional(s2: &S2Table, points: &[usize]) -> Result<f64> {
    if points.len() % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Wick functional needs an even number of points, got {}", points.len())));
    }
    s2.check(points)?;
    fn rec(s2: &S2Table, pts: &mut Vec<usize>) -> f64 {
        if pts.is_empty() {
            return 1.0;
        }
        let first = pts.remove(0);
        let mut total = 0.0;
        for i in 0..pts.len() {
            let partner = pts.remove(i);
            total += s2.get(first, partner) * rec(s2, pts);
            pts.insert(i, partner);
        }
        pts.insert(0, first);
        total
    }
    Ok(rec(s2, &mut points.to_vec()))
}

/// Outcome of [`wick_gap_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WickGap {
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `gap = G_{2n}[S2] - S_{2n}` against
/// `bound = -3/2 sum_{j<k<l<m} U4(x_j, x_k, x_l, x_m) G_{2n-4}[S2](rest)`.
pub fn wick_gap_check(g: &CouplingGraph, beta: f64, points: &[usize]) -> Result<WickGap> {
    let gibbs = ExactGibbs::new(g, crate::ising_exact::ThermoParams::new(beta))?;
    wick_gap_check_with(&gibbs, points)
}

pub fn wick_gap_check_with(gibbs: &ExactGibbs, points: &[usize]) -> Result<WickGap> {
    let m = points.len();
    if m % 2 == 1 || m < 4 {
        return Err(Error::InvalidArgument(format!("need an even number of at least 4 points, got {m}")));
    }
    let s2 = S2Table::from_exact(gibbs);
    let gap = wick_functional(&s2, points)? - gibbs.correlation(points);
    let mut bound = KahanSum::default();
    let mut scale = KahanSum::default();
    for j in 0..m {
        for k in j + 1..m {
            for l in k + 1..m {
                for q in l + 1..m {
                    let u4 = gibbs.ursell4([points[j], points[k], points[l], points[q]]);
                    let rest: Vec<usize> =
                        (0..m).filter(|i| ![j, k, l, q].contains(i)).map(|i| points[i]).collect();
                    let term = -1.5 * u4 * wick_functional(&s2, &rest)?;
                    bound.add(term);
                    scale.add(term.abs());
                }
            }
        }
    }
    let bound = bound.value();
    let tol = 1e-10 * scale.value().max(gap.abs()).max(1e-300);
    Ok(WickGap { gap, bound, holds: gap >= -tol && gap <= bound + tol })
}

/// Inputs of the MGF gap inequality for one smeared field.
pub struct MgfData<'a> {
    /// `<T_f^2>`.
    pub var_t: f64,
    /// `<T_{|f|}^2>`.
    pub var_t_abs: f64,
    /// `z -> <exp(z T_f)>`.
    pub mgf: Box<dyn Fn(f64) -> Result<f64> + 'a>,
}

impl<'a> MgfData<'a> {
    /// Exact data for `T_f = sum_x f_x sigma_x / sqrt(Sigma)` with
    /// `Sigma = <(sum_{x in block} sigma_x)^2>`.
    pub fn exact(gibbs: &'a ExactGibbs, f: &[f64], block: &[usize]) -> Result<Self> {
        let sigma = block_norm(gibbs, block)?;
        let scale = 1.0 / sigma.sqrt();
        let fs: Vec<f64> = f.iter().map(|v| v * scale).collect();
        let fa: Vec<f64> = fs.iter().map(|v| v.abs()).collect();
        let var_t = gibbs.linear_moments(&fs, 2)[2];
        let var_t_abs = gibbs.linear_moments(&fa, 2)[2];
        Ok(MgfData { var_t, var_t_abs, mgf: Box::new(move |z| Ok(gibbs.mgf(&fs, z))) })
    }

    /// Sample estimates from normalized draws of `T_f` and `T_{|f|}`.
    pub fn samples(t: &'a [f64], t_abs: &'a [f64]) -> Result<Self> {
        if t.len() < 2 || t.len() != t_abs.len() {
            return Err(Error::InvalidArgument("need matching sample series of length at least 2".into()));
        }
        let n = t.len() as f64;
        let var_t = t.iter().map(|v| v * v).sum::<f64>() / n;
        let var_t_abs = t_abs.iter().map(|v| v * v).sum::<f64>() / n;
        let mgf = move |z: f64| -> Result<f64> {
            let top = t.iter().map(|v| z * v).fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = t.iter().map(|v| (z * v - top).exp()).collect();
            let s1: f64 = w.iter().sum();
            let s2: f64 = w.iter().map(|x| x * x).sum();
            // The estimate is meaningless once a handful of draws dominate it.
            if s1 * s1 / s2 < (0.01 * n).max(10.0) {
                return Err(Error::InvalidArgument(format!("MGF estimate at z = {z} is dominated by few samples")));
            }
            Ok(s1 / n * top.exp())
        };
        Ok(MgfData { var_t, var_t_abs, mgf: Box::new(mgf) })
    }
}

fn block_norm(gibbs: &ExactGibbs, block: &[usize]) -> Result<f64> {
    let sigma = gibbs.block_moments(block, 2)[2];
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("block normalization must be positive".into()));
    }
    Ok(sigma)
}

/// `R~ = sum |U4| prod |f| / Sigma^2 = -(<F^4> - 3 <F^2>^2) / Sigma^2`
/// with `F = sum_x |f_x| sigma_x`; exact because `U4 <= 0` pointwise.
pub fn r_tilde_exact(gibbs: &ExactGibbs, f: &[f64], block: &[usize]) -> Result<f64> {
    let sigma = block_norm(gibbs, block)?;
    let fa: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let m = gibbs.linear_moments(&fa, 4);
    Ok(-(m[4] - 3.0 * m[2] * m[2]) / (sigma * sigma))
}

/// Largest value over the grid of
/// `|<e^{zT}> - e^{z^2 <T^2>/2}| - 2^-4 z^4 e^{z^2 <T_{|f|}^2>/2} R~`;
/// negative means the inequality holds everywhere.
pub fn mgf_gap_check(data: &MgfData, z_grid: &[f64], r_tilde: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for &z in z_grid {
        let lhs = ((data.mgf)(z)? - (0.5 * z * z * data.var_t).exp()).abs();
        let rhs = z.powi(4) / 16.0 * (0.5 * z * z * data.var_t_abs).exp() * r_tilde;
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

/// Test functions sampled at lattice points `x / L`, measured from the
/// lattice centre; all vanish outside the centred box of side `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Indicator,
    Tent,
    Cosines,
}

impl TestFunction {
    pub fn eval(&self, u: &[f64]) -> f64 {
        if u.iter().any(|c| c.abs() > 0.5) {
            return 0.0;
        }
        match self {
            TestFunction::Indicator => 1.0,
            TestFunction::Tent => u.iter().map(|c| 1.0 - 2.0 * c.abs()).product(),
            TestFunction::Cosines => u.iter().map(|c| (std::f64::consts::PI * c).cos()).product(),
        }
    }

    /// Weights `f((x - centre) / scale)` for every site of the lattice.
    pub fn sample(&self, spec: &LatticeSpec, scale: f64) -> Vec<f64> {
        let c = spec.center();
        (0..spec.volume() as usize)
            .map(|x| {
                let u: Vec<f64> = spec.displacement(c, x).iter().map(|&d| d as f64 / scale).collect();
                self.eval(&u)
            })
            .collect()
    }
}

/// Transfer inequalities between smeared and block quantities:
/// `R~_{f,L} <= r^d |f|^4 R_{rL}` and `<T_{f,L}^2> <= r^d |f|^2`.
pub fn transfer_bounds_hold(r_tilde: f64, t2: f64, r: f64, d: usize, f_sup: f64, r_rl: f64, tol: f64) -> (bool, bool) {
    let rd = r.powi(d as i32);
    (r_tilde <= rd * f_sup.powi(4) * r_rl + tol, t2 <= rd * f_sup * f_sup + tol)
}

/// One distance class of a translation-invariant two-point function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceClass {
    pub r: f64,
    pub multiplicity: usize,
    pub s2: f64,
    pub err: f64,
}

/// Two-point function by distance class, ascending in distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub classes: Vec<DistanceClass>,
}

impl DistanceProfile {
    /// Reads the `s2_r2=K` estimates of a run on the given periodic lattice.
    pub fn from_run(out: &RunOutput, spec: LatticeSpec) -> Result<Self> {
        let corr = TorusCorrelator::new(spec)
            .ok_or_else(|| Error::InvalidArgument("distance profiles need a periodic lattice".into()))?;
        let mut classes = Vec::new();
        for (&k, &m) in corr.class_norms2().iter().zip(corr.class_sizes()) {
            let e = out.get(&format!("s2_r2={k}"))?;
            classes.push(DistanceClass { r: (k as f64).sqrt(), multiplicity: m, s2: e.mean, err: e.stderr });
        }
        Ok(DistanceProfile { classes })
    }

    /// Exact profile seen from vertex 0 of a periodic lattice.
    pub fn from_table(s2: &S2Table, spec: LatticeSpec) -> Result<Self> {
        if spec.bc != Boundary::Periodic || spec.volume() as usize != s2.n() {
            return Err(Error::InvalidArgument("table does not match the periodic lattice".into()));
        }
        let corr = TorusCorrelator::new(spec).unwrap();
        let mut sums = vec![0.0; corr.n_classes()];
        for x in 0..s2.n() {
            sums[corr.class_between(0, x)] += s2.get(0, x);
        }
        let classes = corr
            .class_norms2()
            .iter()
            .zip(corr.class_sizes())
            .zip(sums)
            .map(|((&k, &m), s)| DistanceClass { r: (k as f64).sqrt(), multiplicity: m, s2: s / m as f64, err: 0.0 })
            .collect();
        Ok(DistanceProfile { classes })
    }

    /// `B_ell = sum_{|x| < ell} S2(0, x)^2` with its propagated error.
    pub fn bubble(&self, ell: f64) -> (f64, f64) {
        let (mut b, mut var) = (0.0, 0.0);
        for c in self.classes.iter().filter(|c| c.r < ell) {
            let m = c.multiplicity as f64;
            b += m * c.s2 * c.s2;
            var += (2.0 * m * c.s2 * c.err).powi(2);
        }
        (b, var.sqrt())
    }
}

/// Summary of distance-resolved two-point behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2Report {
    /// No positive correlation beyond distance zero.
    pub degenerate: bool,
    /// Fitted decay exponent `p` in `S2 ~ r^-p`, with its standard error.
    pub exponent: Option<(f64, f64)>,
    /// Constant fitted on the outer half of the range.
    pub c2: f64,
    /// Whether `beta J S2(r) r^{d-2} <= c2` holds over the whole range
    /// within two standard errors.
    pub infrared_bound_holds: bool,
    /// `(scale 2^k, average of S2 r^{d-2} over 2^k <= r < 2^{k+1}, error)`.
    pub dyadic: Vec<(f64, f64, f64)>,
    /// Dyadic averages are non-increasing within two combined standard errors.
    pub dyadic_nonincreasing: bool,
}

/// Fits and scale checks on a distance profile over `r_min <= r <= r_max`.
pub fn s2_diagnostics(p: &DistanceProfile, d: usize, beta_j: f64, r_min: f64, r_max: f64) -> Result<S2Report> {
    let probed: Vec<&DistanceClass> = p.classes.iter().filter(|c| c.r >= r_min && c.r <= r_max && c.r > 0.0).collect();
    if probed.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "only {} distance classes in [{r_min}, {r_max}], need at least 3",
            probed.len()
        )));
    }
    let positive: Vec<&&DistanceClass> = probed.iter().filter(|c| c.s2 > 0.0).collect();
    let degenerate = positive.len() < 2 || positive.iter().all(|c| c.s2 < 1e-12);
    let exponent = if degenerate { None } else { Some(fit_power(&positive)) };
    let dm2 = d as i32 - 2;
    let scaled = |c: &DistanceClass| (c.s2 * c.r.powi(dm2), c.err * c.r.powi(dm2));
    let outer: Vec<&&DistanceClass> = probed.iter().filter(|c| c.r >= 0.5 * (r_min.max(1.0) + r_max)).collect();
    let c2 = outer.iter().map(|c| beta_j * scaled(c).0).fold(0.0, f64::max);
    let infrared_bound_holds = probed.iter().all(|c| {
        let (v, e) = scaled(c);
        beta_j * (v - 2.0 * e) <= c2 * (1.0 + 1e-12)
    });
    let mut dyadic = Vec::new();
    let mut k = r_min.max(1.0).log2().floor() as i32;
    while 2f64.powi(k) <= r_max {
        let (lo, hi) = (2f64.powi(k), 2f64.powi(k + 1));
        let (mut w, mut s, mut v) = (0.0, 0.0, 0.0);
        for c in probed.iter().filter(|c| c.r >= lo && c.r < hi) {
            let m = c.multiplicity as f64;
            let (x, e) = scaled(c);
            w += m;
            s += m * x;
            v += (m * e).powi(2);
        }
        if w > 0.0 {
            dyadic.push((lo, s / w, v.sqrt() / w));
        }
        k += 1;
    }
    let dyadic_nonincreasing = dyadic.windows(2).all(|p| p[1].1 <= p[0].1 + 2.0 * (p[0].2.powi(2) + p[1].2.powi(2)).sqrt());
    Ok(S2Report { degenerate, exponent, c2, infrared_bound_holds, dyadic, dyadic_nonincreasing })
}

/// Weighted least squares of `ln S2` on `ln r`; returns `(-slope, stderr)`.
fn fit_power(pts: &[&&DistanceClass]) -> (f64, f64) {
    let rows: Vec<(f64, f64, f64)> = pts
        .iter()
        .map(|c| {
            let sigma = if c.err > 0.0 { c.err / c.s2 } else { 1.0 };
            (c.r.ln(), c.s2.ln(), 1.0 / (sigma * sigma))
        })
        .collect();
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    let slope = sxy / sxx;
    let all_exact = pts.iter().all(|c| c.err == 0.0);
    let err = if all_exact {
        let resid: f64 = rows.iter().map(|r| (r.1 - my - slope * (r.0 - mx)).powi(2)).sum();
        (resid / (rows.len() as f64 - 2.0).max(1.0) / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    (-slope, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_lattice;
    use crate::ising_exact::ThermoParams;
    use approx::assert_relative_eq;

    fn edge() -> CouplingGraph {
        CouplingGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn exact(g: &CouplingGraph, beta: f64) -> ExactGibbs {
        ExactGibbs::new(g, ThermoParams::new(beta)).unwrap()
    }

    #[test]
    fn bubble_examples() {
        let g = build_lattice(LatticeSpec::periodic(2, 3)).unwrap();
        let t = S2Table::from_exact(&exact(&g, 0.0));
        assert_relative_eq!(bubble(&t, &g, 4, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(bubble(&t, &g, 4, 5.0).unwrap(), 1.0, epsilon = 1e-14);
        let e = edge();
        let t = S2Table::from_exact(&exact(&e, 0.8));
        assert_relative_eq!(bubble(&t, &e, 0, 2.0).unwrap(), 1.0 + 0.8f64.tanh().powi(2), max_relative = 1e-12);
        let mut rows = vec![vec![1.0, f64::NAN], vec![f64::NAN, 1.0]];
        rows[0][1] = f64::NAN;
        let t = S2Table::from_matrix(rows).unwrap();
        assert!(bubble(&t, &e, 0, 2.0).is_err());
    }

    #[test]
    fn tree_examples() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let t0 = S2Table::from_exact(&exact(&g, 0.0));
        assert_eq!(tree_rhs(&t0, [0, 2, 6, 8]).unwrap(), 0.0);
        assert_eq!(tree_rhs_balanced(&t0, &g, 0.0, [0, 2, 6, 8]).unwrap(), 0.0);
        let ex = exact(&g, 0.5);
        let t = S2Table::from_exact(&ex);
        assert!(tree_rhs(&t, [4, 4, 4, 4]).unwrap() >= 2.0);
        for x in [[0, 2, 6, 8], [0, 1, 3, 4], [1, 5, 7, 3]] {
            let u4 = ex.ursell4(x).abs();
            assert!(tree_rhs(&t, x).unwrap() >= u4 - 1e-12);
            assert!(tree_rhs_balanced(&t, &g, 0.5, x).unwrap() >= u4 - 1e-12);
        }
        let e = edge();
        let ex = exact(&e, 0.9);
        let t = S2Table::from_exact(&ex);
        for x in [[0, 0, 1, 1], [0, 1, 0, 1], [0, 0, 0, 0], [0, 1, 1, 1]] {
            assert!(tree_rhs_balanced(&t, &e, 0.9, x).unwrap() >= ex.ursell4(x).abs() - 1e-12, "{x:?}");
        }
    }

    #[test]
    fn ratio_examples() {
        // Sixteen independent spins: <M^2> = 16, <M^4> = 3*16^2 - 2*16.
        assert_relative_eq!(r_ratio(16.0, 3.0 * 256.0 - 32.0).unwrap(), 0.125);
        assert_relative_eq!(r_ratio(1.0, 1.0).unwrap(), 2.0);
        assert!(r_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn wick_examples() {
        let g = build_lattice(LatticeSpec::free(2, 2)).unwrap();
        let ex = exact(&g, 0.6);
        let t = S2Table::from_exact(&ex);
        assert_relative_eq!(wick_functional(&t, &[0, 3]).unwrap(), ex.s2(0, 3));
        let w4 = wick_functional(&t, &[0, 1, 2, 3]).unwrap();
        let three = ex.s2(0, 1) * ex.s2(2, 3) + ex.s2(0, 2) * ex.s2(1, 3) + ex.s2(0, 3) * ex.s2(1, 2);
        assert_relative_eq!(w4, three, max_relative = 1e-14);
        assert!(wick_functional(&t, &[0, 1, 2]).is_err());
        let t0 = S2Table::from_exact(&exact(&g, 0.0));
        assert_eq!(wick_functional(&t0, &[0, 1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn wick_gap_examples() {
        let g = build_lattice(LatticeSpec::free(2, 3)).unwrap();
        let ex = exact(&g, 0.4);
        let w = wick_gap_check_with(&ex, &[0, 2, 6, 8]).unwrap();
        let u4 = ex.ursell4([0, 2, 6, 8]);
        assert_relative_eq!(w.gap, -u4, max_relative = 1e-10);
        assert_relative_eq!(w.bound, -1.5 * u4, max_relative = 1e-10);
        assert!(w.holds);
        let w = wick_gap_check(&g, 0.0, &[0, 2, 6, 8]).unwrap();
        assert_eq!((w.gap, w.bound), (0.0, 0.0));
        let grid = CouplingGraph::from_triples(
            6,
            &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (0, 3, 1.0), (1, 4, 1.0), (2, 5, 1.0)],
        )
        .unwrap();
        assert!(wick_gap_check(&grid, 0.4, &[0, 1, 2, 3, 4, 5]).unwrap().holds);
    }

    #[test]
    fn mgf_examples() {
        let e = edge();
        let ex = exact(&e, 0.7);
        let f = vec![1.0, 1.0];
        let data = MgfData::exact(&ex, &f, &[0, 1]).unwrap();
        let rt = r_tilde_exact(&ex, &f, &[0, 1]).unwrap();
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 / 10.0).collect();
        let worst = mgf_gap_check(&data, &grid, rt).unwrap();
        assert!(worst <= 1e-12, "{worst}");
        assert!(mgf_gap_check(&data, &[0.0], rt).unwrap().abs() <= 1e-15);

        let g = build_lattice(LatticeSpec::free(2, 4)).unwrap();
        let ex = exact(&g, 0.0);
        let all: Vec<usize> = (0..16).collect();
        let f = vec![1.0; 16];
        let rt = r_tilde_exact(&ex, &f, &all).unwrap();
        assert_relative_eq!(rt, 2.0 / 16.0, max_relative = 1e-12);
        let data = MgfData::exact(&ex, &f, &all).unwrap();
        assert!(mgf_gap_check(&data, &grid, rt).unwrap() <= 1e-12);
    }

    #[test]
    fn sampled_mgf_detects_domination() {
        let t = [0.1, -0.2, 0.3, 5.0];
        let data = MgfData::samples(&t, &t).unwrap();
        assert!(mgf_gap_check(&data, &[20.0], 0.1).is_err());
    }

    #[test]
    fn test_functions() {
        let spec = LatticeSpec::periodic(2, 8);
        let f = TestFunction::Indicator.sample(&spec, 4.0);
        assert_eq!(f.iter().filter(|&&v| v == 1.0).count(), 25);
        let tent = TestFunction::Tent.sample(&spec, 4.0);
        assert_eq!(tent[spec.center()], 1.0);
        assert!(TestFunction::Cosines.sample(&spec, 4.0).iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn diagnostics_on_exact_profiles() {
        let spec = LatticeSpec::periodic(2, 4);
        let g = build_lattice(spec).unwrap();
        let t0 = S2Table::from_exact(&exact(&g, 0.0));
        let p0 = DistanceProfile::from_table(&t0, spec).unwrap();
        let r = s2_diagnostics(&p0, 2, 0.0, 1.0, 3.0).unwrap();
        assert!(r.degenerate && r.exponent.is_none());
        let t = S2Table::from_exact(&exact(&g, 0.3));
        let p = DistanceProfile::from_table(&t, spec).unwrap();
        let r = s2_diagnostics(&p, 2, 0.3, 1.0, 3.0).unwrap();
        assert!(!r.degenerate && r.exponent.unwrap().0 > 0.0);
        assert_relative_eq!(p.bubble(1.5).0, bubble(&t, &g, 0, 1.5).unwrap(), max_relative = 1e-12);
        let sparse = DistanceProfile { classes: p.classes[..2].to_vec() };
        assert!(s2_diagnostics(&sparse, 2, 0.3, 0.0, 10.0).is_err());
    }
}
