//! Exact checks of random-current identities and inequalities on small graphs.
//!
//! Every check compares two exactly enumerated quantities. Identities report
//! a relative residual; inequalities report the excess of the left side over
//! the right side, relative to the size of the terms involved, so a check
//! holds when its residual is at most [`EXACT_TOL`].
//!
//! Spin correlations come from signed sums over configurations, so their
//! absolute accuracy is set by the largest configuration probability. That
//! probability is included in the scale of every check that compares
//! correlations directly.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::currents::{
    constrained_sum, grouped_probability, replica_probability, switching_check, ReplicaEvent, SourceSet,
};
use crate::diagrams::{
    mgf_gap_check, r_ratio, r_tilde_exact, tree_rhs, tree_rhs_balanced, wick_functional, wick_gap_check_with,
    MgfData, S2Table,
};
use crate::error::Result;
use crate::graph::{build_lattice, CouplingGraph, LatticeSpec};
use crate::ising_exact::{ExactGibbs, ThermoParams};
use crate::pfaffian::{boundary_pfaffian_residual_with, crossing_sign, cyclic_order, Pairing};
use crate::worm_mc::chain_rng;

/// Tolerance for exact-arithmetic checks.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for boundary Pfaffian residuals, which are absolute.
pub const PFAFFIAN_TOL: f64 = 1e-9;

/// One evaluated check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub case: String,
    pub residual: f64,
    pub passed: bool,
}

impl Check {
    /// `|a - b| / max(|a|, |b|, scale)`.
    pub fn identity(name: &str, case: String, a: f64, b: f64, scale: f64) -> Self {
        let s = a.abs().max(b.abs()).max(scale);
        let residual = if s == 0.0 { 0.0 } else { (a - b).abs() / s };
        Check { name: name.into(), case, residual, passed: residual <= EXACT_TOL }
    }

    /// `(lhs - rhs) / max(|lhs|, |rhs|, scale)`; non-positive when `lhs <= rhs`.
    pub fn inequality(name: &str, case: String, lhs: f64, rhs: f64, scale: f64) -> Self {
        let s = lhs.abs().max(rhs.abs()).max(scale);
        let residual = if s == 0.0 { 0.0 } else { (lhs - rhs) / s };
        Check { name: name.into(), case, residual, passed: residual <= EXACT_TOL }
    }
}

/// How many tuples of each shape are drawn per graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteLimits {
    pub tuples: usize,
    /// Sets `B` per pair in the box-hitting check.
    pub subsets: usize,
}

impl Default for SuiteLimits {
    fn default() -> Self {
        SuiteLimits { tuples: 16, subsets: 4 }
    }
}

/// Worst residual and failure count for each check name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    pub checks: usize,
    pub failures: usize,
    pub worst: f64,
    pub worst_case: String,
}

pub fn summarize(checks: &[Check]) -> BTreeMap<String, CheckStats> {
    let mut out: BTreeMap<String, CheckStats> = BTreeMap::new();
    for c in checks {
        let s = out.entry(c.name.clone()).or_insert(CheckStats {
            checks: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            worst_case: String::new(),
        });
        s.checks += 1;
        s.failures += usize::from(!c.passed);
        // NaN residuals count as worst.
        if !(c.residual <= s.worst) {
            s.worst = c.residual;
            s.worst_case = c.case.clone();
        }
    }
    out
}

/// Evenly spaced selection of at most `k` items.
fn spread<T: Clone>(items: Vec<T>, k: usize) -> Vec<T> {
    if items.len() <= k {
        return items;
    }
    (0..k).map(|i| items[i * items.len() / k].clone()).collect()
}

fn ordered_distinct(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !cur.contains(&v) {
                cur.push(v);
                rec(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut out);
    out
}

/// Non-decreasing `k`-sequences over `0..n`, i.e. multisets.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in from..n {
            cur.push(v);
            rec(n, k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Largest configuration probability: the absolute accuracy scale of any
/// correlation computed by enumeration.
fn largest_term(gibbs: &ExactGibbs) -> f64 {
    gibbs.probabilities().iter().copied().fold(0.0, f64::max)
}

fn quad(t: &[usize]) -> [usize; 4] {
    [t[0], t[1], t[2], t[3]]
}

fn label(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}

fn vertices_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Partition function, correlations, two-point, hitting, truncated and
/// four-point identities of the random current representation.
pub fn identity_checks(g: &CouplingGraph, beta: f64, lim: &SuiteLimits) -> Result<Vec<Check>> {
    let gibbs = ExactGibbs::new(g, ThermoParams::new(beta))?;
    let n = g.n_vertices();
    let s = |x: usize, y: usize| gibbs.s2(x, y);
    let floor = largest_term(&gibbs);
    let mut out = Vec::new();

    let z0 = constrained_sum(g, beta, &SourceSet::empty())?;
    let z = gibbs.partition_function();
    out.push(Check::identity("partition", String::new(), z, 2f64.powi(n as i32) * z0, 0.0));

    for mask in 1u64..1 << n {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let pts = vertices_of(mask);
        let za = constrained_sum(g, beta, &SourceSet::from_mask(mask))?;
        out.push(Check::identity("correlation", label(&pts), gibbs.correlation(&pts), za / z0, floor));
    }

    let pairs: Vec<Vec<usize>> = multisets(n, 2).into_iter().filter(|p| p[0] != p[1]).collect();
    for p in spread(pairs, lim.tuples) {
        let (x, y) = (p[0], p[1]);
        let pr = replica_probability(
            g,
            beta,
            &[SourceSet::empty(), SourceSet::empty()],
            &ReplicaEvent::connected(vec![0, 1], x, y),
        )?;
        out.push(Check::identity("two_point_squared", label(&p), s(x, y).powi(2), pr, floor));
    }

    let triples: Vec<Vec<usize>> = (0..n)
        .flat_map(|x| (0..n).flat_map(move |y| (0..n).map(move |z| vec![x, y, z])))
        .filter(|t| t[0] != t[2])
        .collect();
    for t in spread(triples, lim.tuples) {
        let (x, y, zz) = (t[0], t[1], t[2]);
        let pr = replica_probability(
            g,
            beta,
            &[SourceSet::pair(x, zz), SourceSet::empty()],
            &ReplicaEvent::connected(vec![0, 1], x, y),
        )?;
        out.push(Check::identity("hitting", label(&t), s(x, y) * s(y, zz) / s(x, zz), pr, 0.0));
    }

    if n >= 4 {
        for t in spread(ordered_distinct(n, 4), lim.tuples) {
            let [x, y, u, v] = quad(&t);
            let s4 = gibbs.correlation(&t);
            let lhs = s4 - s(x, y) * s(u, v);
            let no_uv = |a: SourceSet, b: SourceSet| {
                replica_probability(g, beta, &[a, b], &ReplicaEvent::connected(vec![0, 1], u, v).not())
            };
            let rhs = s(x, u) * s(y, v) * no_uv(SourceSet::pair(x, u), SourceSet::pair(y, v))?
                + s(x, v) * s(y, u) * no_uv(SourceSet::pair(x, v), SourceSet::pair(y, u))?;
            out.push(Check::identity("truncated", label(&t), lhs, rhs, s4.max(s(x, y) * s(u, v)).max(floor)));

            let u4 = gibbs.ursell4([x, y, u, v]);
            let cancel = s4.max(s(x, y) * s(u, v)).max(s(x, u) * s(y, v)).max(s(x, v) * s(y, u)).max(floor);
            let all = replica_probability(
                g,
                beta,
                &[SourceSet::from_parity(&t), SourceSet::empty()],
                &ReplicaEvent::all_connected(vec![0, 1], t.clone()),
            )?;
            out.push(Check::identity("u4_all_connected", label(&t), u4, -2.0 * s4 * all, cancel));
            let link = replica_probability(
                g,
                beta,
                &[SourceSet::pair(x, y), SourceSet::pair(u, v)],
                &ReplicaEvent::sets_connected(vec![0, 1], vec![x, y], vec![u, v]),
            )?;
            out.push(Check::identity("u4_pair_connection", label(&t), u4, -2.0 * s(x, y) * s(u, v) * link, cancel));
        }
    }
    Ok(out)
}

/// Four-point bounds, box hitting, Wick gap, moment-generating-function gap
/// and the range of the block ratio `R`.
pub fn inequality_checks(g: &CouplingGraph, beta: f64, lim: &SuiteLimits) -> Result<Vec<Check>> {
    let gibbs = ExactGibbs::new(g, ThermoParams::new(beta))?;
    let table = S2Table::from_exact(&gibbs);
    let n = g.n_vertices();
    let s = |x: usize, y: usize| gibbs.s2(x, y);
    let floor = largest_term(&gibbs);
    let mut out = Vec::new();

    let all: Vec<usize> = (0..n).collect();
    let m = gibbs.block_moments(&all, 4);
    let r = r_ratio(m[2], m[4])?;
    let cancel = 3.0 * m[4] / (m[2] * m[2]);
    out.push(Check::inequality("r_nonnegative", String::new(), -r, 0.0, cancel));
    out.push(Check::inequality("r_at_most_two", String::new(), r, 2.0, cancel));

    for t in spread(multisets(n, 4), lim.tuples) {
        let x = quad(&t);
        let u4 = gibbs.ursell4(x);
        let s4 = gibbs.correlation(&t);
        out.push(Check::inequality("u4_nonpositive", label(&t), u4, 0.0, s4.max(floor)));
    }

    if n >= 4 {
        for t in spread(ordered_distinct(n, 4), lim.tuples) {
            let x = quad(&t);
            let u4 = gibbs.ursell4(x);
            let s4 = gibbs.correlation(&t).max(floor);
            let (s12, s34) = (s(x[0], x[1]), s(x[2], x[3]));
            let p = grouped_probability(
                g,
                beta,
                &[
                    vec![SourceSet::pair(x[0], x[1]), SourceSet::empty()],
                    vec![SourceSet::pair(x[2], x[3]), SourceSet::empty()],
                ],
                &ReplicaEvent::clusters_intersect(vec![0], x[0], vec![1], x[2]),
            )?;
            out.push(Check::inequality("intersection_bound", label(&t), u4.abs(), 2.0 * s12 * s34 * p, s4));
            out.push(Check::inequality("tree_bound", label(&t), u4.abs(), tree_rhs(&table, x)?, s4));
            out.push(Check::inequality(
                "balanced_tree_bound",
                label(&t),
                u4.abs(),
                tree_rhs_balanced(&table, g, beta, x)?,
                s4,
            ));
        }
    }

    for t in spread(multisets(n, 4), lim.tuples) {
        out.push(wick_check(&gibbs, &table, &t)?);
    }
    for t in spread(multisets(n, 6), lim.tuples) {
        out.push(wick_check(&gibbs, &table, &t)?);
    }

    let pairs: Vec<Vec<usize>> = ordered_distinct(n, 2);
    for p in spread(pairs, lim.tuples) {
        let (x, z) = (p[0], p[1]);
        let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != z).collect();
        let subsets: Vec<u64> = (1u64..1 << rest.len()).collect();
        for sub in spread(subsets, lim.subsets) {
            let b: Vec<usize> = (0..rest.len()).filter(|&i| sub >> i & 1 == 1).map(|i| rest[i]).collect();
            let hit = replica_probability(
                g,
                beta,
                &[SourceSet::pair(x, z), SourceSet::empty()],
                &ReplicaEvent::cluster_hits(vec![0, 1], x, b.clone()),
            )?;
            let mut flux = 0.0;
            for &u in &b {
                for &(v, e) in g.neighbors(u) {
                    if !b.contains(&v) {
                        flux += s(x, u) * beta * g.edge(e).j * s(v, z);
                    }
                }
            }
            out.push(Check::inequality(
                "box_hitting",
                format!("x={x} z={z} B={}", label(&b)),
                s(x, z) * hit,
                flux,
                0.0,
            ));
        }
    }

    let z_grid: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.25).collect();
    let ones = vec![1.0; n];
    let mixed: Vec<f64> = (0..n).map(|x| if x % 2 == 0 { 1.0 + x as f64 / n as f64 } else { -0.5 }).collect();
    for (name, f) in [("uniform", ones), ("mixed", mixed)] {
        let data = MgfData::exact(&gibbs, &f, &all)?;
        let rt = r_tilde_exact(&gibbs, &f, &all)?;
        let worst = mgf_gap_check(&data, &z_grid, rt)?;
        let scale = (data.mgf)(3.0)?.max((data.mgf)(-3.0)?);
        out.push(Check::inequality("mgf_gap", name.into(), worst, 0.0, scale));
    }
    Ok(out)
}

fn wick_check(gibbs: &ExactGibbs, table: &S2Table, t: &[usize]) -> Result<Check> {
    let w = wick_gap_check_with(gibbs, t)?;
    let scale = wick_functional(table, t)?.max(largest_term(gibbs));
    let excess = (-w.gap).max(w.gap - w.bound);
    Ok(Check::inequality(&format!("wick_gap_{}", t.len()), label(t), excess, 0.0, scale))
}

/// Switching-lemma checks on a graph: `count` cases alternating between
/// `G2 = G1` and strict edge subgraphs, with events cycling through the
/// constant event and connectivity indicators of the summed current.
pub fn switching_checks(g: &CouplingGraph, beta: f64, seed: u64, stream: u64, count: usize) -> Result<Vec<Check>> {
    let mut rng = chain_rng(seed, stream);
    let n = g.n_vertices();
    let ne = g.n_edges();
    let mut out = Vec::new();
    for case in 0..count {
        let mut a = rng.random_range(0..1u64 << n);
        if a.count_ones() % 2 == 1 {
            a ^= 1 << rng.random_range(0..n);
        }
        let x = rng.random_range(0..n);
        let y = (x + 1 + rng.random_range(0..n - 1)) % n;
        let b = SourceSet::pair(x, y);
        let (g2, sub) = if case % 2 == 0 || ne == 0 {
            (g.clone(), "G2=G1".to_string())
        } else {
            let drop = rng.random_range(0..ne);
            let keep: Vec<usize> = (0..ne).filter(|&e| e != drop && (e == (drop + 1) % ne || rng.random_bool(0.7))).collect();
            (g.edge_subgraph(&keep)?, format!("G2=G1-{}", ne - keep.len()))
        };
        let w = rng.random_range(0..n);
        let event = match case % 4 {
            0 => ReplicaEvent::always(),
            1 => ReplicaEvent::connected(vec![0], x, w),
            2 => ReplicaEvent::cluster_hits(vec![0], w, vec![x, y]),
            _ => ReplicaEvent::all_connected(vec![0], vec![x, y, w]),
        };
        let res = switching_check(g, &g2, beta, &SourceSet::from_mask(a), &b, &event)?;
        let case_label =
            format!("A={} B={} {} F={}", label(&vertices_of(a)), label(b.vertices()), sub, event.label());
        let residual = res.relative_residual();
        out.push(Check { name: "switching".into(), case: case_label, residual, passed: residual <= EXACT_TOL });
    }
    Ok(out)
}

/// Boundary Pfaffian residuals on the free `side x side` grid at `beta` for
/// several sets of `k` boundary points.
pub fn pfaffian_checks(side: usize, beta: f64, k: usize, sets: usize) -> Result<Vec<Check>> {
    let g = build_lattice(LatticeSpec::free(2, side))?;
    let face = g.boundary_face().map(|f| f.to_vec()).unwrap_or_default();
    if face.len() < k {
        return Ok(Vec::new());
    }
    let gibbs = ExactGibbs::new(&g, ThermoParams::new(beta))?;
    let m = face.len();
    let mut choices: Vec<Vec<usize>> = vec![(0..k).map(|i| face[i * m / k]).collect(), face[..k].to_vec()];
    let combos: Vec<Vec<usize>> = multisets(m, k)
        .into_iter()
        .filter(|c| c.windows(2).all(|w| w[0] < w[1]))
        .map(|c| c.into_iter().map(|i| face[i]).collect())
        .collect();
    choices.extend(spread(combos, sets));
    choices.sort();
    choices.dedup();
    let mut out = Vec::new();
    for pts in choices {
        let ordered = cyclic_order(&g, &pts)?;
        let residual = boundary_pfaffian_residual_with(&gibbs, &ordered)?;
        out.push(Check {
            name: format!("pfaffian_{k}"),
            case: format!("L={side} beta={beta} points={}", label(&ordered)),
            residual,
            passed: residual <= PFAFFIAN_TOL,
        });
    }
    Ok(out)
}

/// The six-point pairing with two crossings contributes with sign `+1`.
pub fn crossing_sign_check() -> Result<Check> {
    let pairing = Pairing::from_pairs(6, &[(0, 2), (1, 4), (3, 5)])?;
    let sign = crossing_sign(&[1, 2, 3, 4, 5, 6], &pairing)?;
    let ok = pairing.crossings() == 2 && sign == 1;
    Ok(Check {
        name: "crossing_sign".into(),
        case: "pairing (0,2),(1,4),(3,5)".into(),
        residual: if ok { 0.0 } else { 1.0 },
        passed: ok,
    })
}
