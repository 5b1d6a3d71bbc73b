//! Experiment kinds as lists of independent units.
//!
//! Units run on the rayon pool; their rows are gathered in unit order, so the
//! record stream is deterministic. The first failing unit ends the stream and
//! everything before it is kept.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, ExperimentKind, DEFAULT_VERIFY_SECS};
use super::corpus::corpus_instance;
use super::records::{ResultRecord, VerificationSummary};
use super::svg::{Chart, Series};
use super::verify::{
    crossing_sign_check, identity_checks, inequality_checks, pfaffian_checks, summarize, switching_checks, Check,
    SuiteLimits,
};
use crate::currents::{IntersectionExact, SourceSet, CLUSTER_LAW_VERTEX_CAP};
use crate::diagrams::{s2_diagnostics, DistanceProfile};
use crate::error::{Error, Result};
use crate::graph::{build_lattice, CouplingGraph, LatticeSpec};
use crate::gs_blocks::{block_pmf, pmf_moments, target_moments, tune, TargetMeasure};
use crate::worm_mc::{
    four_point_suffix, intersection_stats, locate_beta_c, wolff_run, worm_run, Estimate, McBudget, Observable,
    RunConfig, SpinUpdate,
};

/// Everything an experiment produced, before persistence.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<ResultRecord>,
    pub summary: Option<VerificationSummary>,
    pub charts: Vec<Chart>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default)]
struct Row {
    observable: String,
    value: f64,
    error: Option<f64>,
    l: Option<usize>,
    beta: Option<f64>,
    seed: Option<u64>,
}

impl Row {
    fn new(observable: impl Into<String>, value: f64) -> Self {
        Row { observable: observable.into(), value, ..Default::default() }
    }

    fn est(observable: impl Into<String>, e: &Estimate) -> Self {
        Row { observable: observable.into(), value: e.mean, error: Some(e.stderr), ..Default::default() }
    }

    fn at(mut self, l: Option<usize>, beta: Option<f64>, seed: Option<u64>) -> Self {
        self.l = l;
        self.beta = beta;
        self.seed = seed;
        self
    }
}

#[derive(Default)]
struct UnitOut {
    rows: Vec<Row>,
    checks: Vec<Check>,
}

/// Runs units in parallel and keeps results up to the first failure.
fn drive<U: Sync>(
    units: &[U],
    deadline: Option<Instant>,
    f: impl Fn(&U) -> Result<UnitOut> + Sync,
) -> (Vec<UnitOut>, Option<String>) {
    let results: Vec<std::result::Result<UnitOut, String>> = units
        .par_iter()
        .map(|u| {
            if deadline.is_some_and(|d| Instant::now() > d) {
                return Err("wall-clock budget exhausted".to_string());
            }
            f(u).map_err(|e| e.to_string())
        })
        .collect();
    let mut done = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(u) => done.push(u),
            Err(msg) => return (done, Some(format!("unit {i}: {msg}"))),
        }
    }
    (done, None)
}

fn run_config<'g>(cfg: &ExperimentConfig, g: &'g CouplingGraph, beta: f64, seed: u64, stream: u64) -> RunConfig<'g> {
    let mut rc = RunConfig::new(g, beta, cfg.budget.sweeps, seed);
    rc.bins = cfg.budget.bins;
    rc.thermalization = cfg.budget.thermalization;
    rc.stream = stream;
    rc
}

/// Corners of the axis-aligned square of side `L/2` centred on the torus,
/// in cyclic order; the square spans the first two axes.
pub fn square_corners(spec: &LatticeSpec) -> Option<[usize; 4]> {
    if spec.d < 2 || spec.l < 4 {
        return None;
    }
    let c = (spec.l / 2) as i64;
    let h = (spec.l / 4) as i64;
    let at = |dx: i64, dy: i64| {
        let mut p = vec![c; spec.d];
        p[0] += dx;
        p[1] += dy;
        spec.index(&p)
    };
    Some([at(-h, -h), at(h, -h), at(h, h), at(-h, h)])
}

/// Free `length x depth` strip with unit nearest-neighbour couplings and
/// diagonal couplings `j2`. Site `(row, col)` has index `row * length + col`;
/// row 0 is the boundary.
pub fn nnn_strip(length: usize, depth: usize, j2: f64) -> Result<CouplingGraph> {
    if length < 2 || depth < 1 {
        return Err(Error::InvalidArgument(format!("strip {length} x {depth} is too small")));
    }
    let idx = |r: usize, c: usize| r * length + c;
    let mut t = Vec::new();
    for r in 0..depth {
        for c in 0..length {
            if c + 1 < length {
                t.push((idx(r, c), idx(r, c + 1), 1.0));
            }
            if r + 1 < depth {
                t.push((idx(r, c), idx(r + 1, c), 1.0));
                if j2 > 0.0 {
                    if c + 1 < length {
                        t.push((idx(r, c), idx(r + 1, c + 1), j2));
                    }
                    if c > 0 {
                        t.push((idx(r, c), idx(r + 1, c - 1), j2));
                    }
                }
            }
        }
    }
    let coords = (0..length * depth).map(|v| vec![(v / length) as i64, (v % length) as i64]).collect();
    CouplingGraph::from_triples(length * depth, &t)?.with_embedding(coords)
}

fn grid3<A: Copy, B: Copy, C: Copy>(a: &[A], b: &[B], c: &[C]) -> Vec<(A, B, C)> {
    a.iter().flat_map(|&x| b.iter().flat_map(move |&y| c.iter().map(move |&z| (x, y, z)))).collect()
}

fn deadline(cfg: &ExperimentConfig, start: Instant) -> Option<Instant> {
    let secs = cfg.budget.wall_clock_secs.or(cfg.kind.is_verification().then_some(DEFAULT_VERIFY_SECS));
    secs.map(|s| start + Duration::from_secs(s))
}

/// Runs an experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let dl = deadline(cfg, start);
    let (units, failure) = match cfg.kind {
        ExperimentKind::VerifyIdentities => verify_identities(cfg, dl),
        ExperimentKind::VerifySwitching => verify_switching(cfg, dl),
        ExperimentKind::VerifyPfaffian => verify_pfaffian(cfg, dl),
        ExperimentKind::GsMatch => gs_match(cfg, dl),
        ExperimentKind::McRun => mc_run(cfg, dl),
        ExperimentKind::ScanRl => scan_rl(cfg, dl),
        ExperimentKind::LocateBetac => locate_betac(cfg, dl),
        ExperimentKind::S2Diagnostics => s2_diag(cfg, dl),
        ExperimentKind::IntersectionScan => intersection_scan(cfg, dl),
        ExperimentKind::EmergentPlanarity => emergent_planarity(cfg, dl),
    };
    let id = cfg.experiment_id();
    let hash = cfg.input_hash();
    let mut checks = Vec::new();
    let mut records = Vec::new();
    for u in units {
        checks.extend(u.checks);
        for r in u.rows {
            records.push(ResultRecord {
                experiment_id: id.clone(),
                kind: cfg.kind.name().into(),
                observable: r.observable,
                value: r.value,
                error: r.error,
                l: r.l,
                beta: r.beta,
                seed: r.seed,
                input_hash: hash.clone(),
            });
        }
    }
    let summary = cfg.kind.is_verification().then(|| {
        let by_check = summarize(&checks);
        let failures = checks.iter().filter(|c| !c.passed).count();
        VerificationSummary { passed: failures == 0 && failure.is_none(), checks: checks.len(), failures, by_check }
    });
    let charts = charts_for(cfg, &records);
    Outcome { records, summary, charts, failure }
}

fn limits(cfg: &ExperimentConfig) -> SuiteLimits {
    SuiteLimits { tuples: cfg.corpus.tuples, subsets: cfg.corpus.subsets }
}

fn verify_identities(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let units: Vec<usize> = (0..cfg.corpus.count).collect();
    let lim = limits(cfg);
    drive(&units, dl, |&i| {
        let inst = corpus_instance(cfg.corpus.seed, i)?;
        let mut checks = identity_checks(&inst.graph, inst.beta, &lim)?;
        checks.extend(inequality_checks(&inst.graph, inst.beta, &lim)?);
        let rows = summarize(&checks)
            .into_iter()
            .map(|(name, st)| Row::new(format!("{name}[{i}]"), st.worst).at(None, Some(inst.beta), Some(cfg.corpus.seed)))
            .collect();
        Ok(UnitOut { rows, checks })
    })
}

fn verify_switching(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let units: Vec<usize> = (0..cfg.corpus.count).collect();
    drive(&units, dl, |&i| {
        let inst = corpus_instance(cfg.corpus.seed, i)?;
        let checks = switching_checks(&inst.graph, inst.beta, cfg.corpus.seed, i as u64, cfg.corpus.switching_cases)?;
        let rows = checks
            .iter()
            .enumerate()
            .map(|(k, c)| Row::new(format!("switching[{i}.{k}]"), c.residual).at(None, Some(inst.beta), Some(cfg.corpus.seed)))
            .collect();
        Ok(UnitOut { rows, checks })
    })
}

fn verify_pfaffian(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let mut units: Vec<Option<(usize, f64, usize)>> =
        grid3(&cfg.sizes, &cfg.betas, &cfg.boundary_points).into_iter().map(Some).collect();
    units.push(None);
    drive(&units, dl, |u| {
        let checks = match *u {
            Some((side, beta, k)) => pfaffian_checks(side, beta, k, cfg.corpus.tuples)?,
            None => vec![crossing_sign_check()?],
        };
        let rows = checks
            .iter()
            .map(|c| {
                let (l, beta) = u.map(|(s, b, _)| (Some(s), Some(b))).unwrap_or((None, None));
                Row::new(format!("{}[{}]", c.name, c.case), c.residual).at(l, beta, None)
            })
            .collect();
        Ok(UnitOut { rows, checks })
    })
}

fn gs_match(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    drive(&cfg.block_sizes, dl, |&n| {
        let t = TargetMeasure::new(cfg.target.lambda, cfg.target.b)?;
        let res = tune(n, t)?;
        let target = target_moments(t, 6)?;
        let block = pmf_moments(&block_pmf(res.params)?, 6);
        let m6 = (block[6] - target[6]).abs() / target[6];
        let tag = |s: &str| format!("{s}[N={n}]");
        Ok(UnitOut {
            rows: vec![
                Row::new(tag("alpha"), res.params.alpha),
                Row::new(tag("g"), res.params.g),
                Row::new(tag("tune_residual"), res.residual),
                Row::new(tag("m2"), block[2]),
                Row::new(tag("m4"), block[4]),
                Row::new(tag("m6_rel_error"), m6),
            ],
            checks: Vec::new(),
        })
    })
}

fn estimate_rows(est: &BTreeMap<String, Estimate>, l: Option<usize>, beta: f64, seed: u64) -> Vec<Row> {
    est.iter().map(|(k, e)| Row::est(k.clone(), e).at(l, Some(beta), Some(seed))).collect()
}

fn mc_run(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let g = match cfg.graph.as_ref().map(|s| s.build()) {
        Some(Ok(g)) => g,
        Some(Err(e)) => return (Vec::new(), Some(format!("graph: {e}"))),
        None => return (Vec::new(), Some("no graph".into())),
    };
    let l = g.lattice().map(|s| s.l);
    let units: Vec<(f64, u64)> = cfg.betas.iter().flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s))).collect();
    drive(&units, dl, |&(beta, seed)| {
        let mut rc = run_config(cfg, &g, beta, seed, 0);
        rc.observables = cfg.observables.clone();
        let est = match cfg.algorithm {
            Algorithm::Wolff => wolff_run(&rc)?.estimates,
            Algorithm::Metropolis => {
                rc.update = SpinUpdate::Metropolis;
                wolff_run(&rc)?.estimates
            }
            Algorithm::Worm => worm_run(&rc, &SourceSet::from_parity(&cfg.sources))?.estimates,
        };
        Ok(UnitOut { rows: estimate_rows(&est, l, beta, seed), checks: Vec::new() })
    })
}

fn lattice_units(cfg: &ExperimentConfig) -> Vec<(usize, f64, u64)> {
    grid3(&cfg.sizes, &cfg.betas, &cfg.seeds)
}

fn scan_rl(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let d = cfg.dimension.unwrap_or(2);
    drive(&lattice_units(cfg), dl, |&(l, beta, seed)| {
        let spec = LatticeSpec::periodic(d, l);
        let g = build_lattice(spec)?;
        let sites = match cfg.block_side {
            Some(side) => spec.centered_block(side),
            None => (0..g.n_vertices()).collect(),
        };
        let mut rc = run_config(cfg, &g, beta, seed, l as u64).observe(Observable::Block { sites });
        let square = square_corners(&spec);
        if let Some(points) = square {
            rc = rc.observe(Observable::FourPoint { points });
        }
        let out = wolff_run(&rc)?;
        let at = |r: Row| r.at(Some(l), Some(beta), Some(seed));
        let mut rows = Vec::new();
        for k in ["r_ratio", "block_m2", "block_m4", "block_binder"] {
            rows.push(at(Row::est(k, out.get(k)?)));
        }
        if let Some(p) = square {
            let sfx = four_point_suffix(&p);
            for k in ["s4", "u4", "u4_gap"] {
                rows.push(at(Row::est(format!("{k}_square"), out.get(&format!("{k}{sfx}"))?)));
            }
        }
        Ok(UnitOut { rows, checks: Vec::new() })
    })
}

fn locate_betac(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let d = cfg.dimension.unwrap_or(2);
    drive(&cfg.seeds, dl, |&seed| {
        let budget = McBudget { sweeps: cfg.budget.sweeps, bins: cfg.budget.bins, seed, iterations: cfg.budget.iterations };
        let est = locate_beta_c(d, &cfg.sizes, cfg.bracket.unwrap(), &budget)?;
        let mut rows = vec![Row { error: Some(est.uncertainty), ..Row::new("beta_c", est.beta_c) }.at(None, None, Some(seed))];
        for p in &est.pairs {
            rows.push(
                Row { error: Some(p.half_width.max(p.stat_error)), ..Row::new(format!("crossing({},{})", p.sizes.0, p.sizes.1), p.beta) }
                    .at(Some(p.sizes.1), None, Some(seed)),
            );
        }
        Ok(UnitOut { rows, checks: Vec::new() })
    })
}

fn s2_diag(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let d = cfg.dimension.unwrap_or(2);
    drive(&lattice_units(cfg), dl, |&(l, beta, seed)| {
        let spec = LatticeSpec::periodic(d, l);
        let g = build_lattice(spec)?;
        let rc = run_config(cfg, &g, beta, seed, l as u64).observe(Observable::S2Distance);
        let out = wolff_run(&rc)?;
        let profile = DistanceProfile::from_run(&out, spec)?;
        let (r_min, r_max) = cfg.distance_range.unwrap_or((1.0, (l / 2) as f64));
        let report = s2_diagnostics(&profile, d, beta * spec.j, r_min, r_max)?;
        let at = |r: Row| r.at(Some(l), Some(beta), Some(seed));
        let mut rows = Vec::new();
        for c in &profile.classes {
            rows.push(at(Row { error: Some(c.err), ..Row::new(format!("s2(r={:.6})", c.r), c.s2) }));
        }
        if let Some((p, e)) = report.exponent {
            rows.push(at(Row { error: Some(e), ..Row::new("s2_exponent", p) }));
        }
        rows.push(at(Row::new("infrared_c2", report.c2)));
        rows.push(at(Row::new("infrared_bound_holds", f64::from(u8::from(report.infrared_bound_holds)))));
        for &(scale, v, e) in &report.dyadic {
            rows.push(at(Row { error: Some(e), ..Row::new(format!("dyadic(r>={scale})"), v) }));
        }
        rows.push(at(Row::new("dyadic_nonincreasing", f64::from(u8::from(report.dyadic_nonincreasing)))));
        let mut ell = 2usize;
        // Scales beyond the largest torus distance repeat the full sum.
        while ell <= l {
            let (b, e) = profile.bubble(ell as f64 + 0.5);
            rows.push(at(Row { error: Some(e), ..Row::new(format!("bubble(ell={ell})"), b) }));
            ell *= 2;
        }
        Ok(UnitOut { rows, checks: Vec::new() })
    })
}

fn intersection_scan(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    let d = cfg.dimension.unwrap_or(2);
    drive(&lattice_units(cfg), dl, |&(l, beta, seed)| {
        let spec = LatticeSpec::periodic(d, l);
        let g = build_lattice(spec)?;
        let x = square_corners(&spec).ok_or_else(|| Error::InvalidArgument("lattice too small for a square".into()))?;
        let stats = intersection_stats(&run_config(cfg, &g, beta, seed, l as u64), x)?;
        let at = |r: Row| r.at(Some(l), Some(beta), Some(seed));
        let mut rows = vec![
            at(Row::est("p_nonempty", &stats.p_nonempty)),
            at(Row::est("mean_size", &stats.mean_size)),
            at(Row::est("mean_size_given_nonempty", &stats.mean_size_given_nonempty)),
        ];
        if g.n_vertices() <= CLUSTER_LAW_VERTEX_CAP {
            let ex = IntersectionExact::compute(&g, beta, x)?;
            rows.push(at(Row::new("exact_p_nonempty", ex.p_nonempty)));
            rows.push(at(Row::new("exact_mean_size", ex.mean_size)));
            rows.push(at(Row::new("exact_mean_size_given_nonempty", ex.mean_size_given_nonempty())));
        }
        Ok(UnitOut { rows, checks: Vec::new() })
    })
}

fn emergent_planarity(cfg: &ExperimentConfig, dl: Option<Instant>) -> (Vec<UnitOut>, Option<String>) {
    drive(&grid3(&cfg.separations, &cfg.betas, &cfg.seeds), dl, |&(s, beta, seed)| {
        let length = 5 * s + 1;
        let g = nnn_strip(length, 2 * s + 1, cfg.nnn_coupling)?;
        let points = [s, 2 * s, 3 * s, 4 * s];
        let rc = run_config(cfg, &g, beta, seed, s as u64).observe(Observable::FourPoint { points });
        let out = wolff_run(&rc)?;
        let sfx = four_point_suffix(&points);
        let at = |r: Row| r.at(Some(s), Some(beta), Some(seed));
        let mut rows = Vec::new();
        for k in ["pf_residual", "u4", "s4"] {
            rows.push(at(Row::est(k, out.get(&format!("{k}{sfx}"))?)));
        }
        Ok(UnitOut { rows, checks: Vec::new() })
    })
}

/// Series of `observable` against `L`, one per `(beta, seed)`.
fn series_by_l(records: &[ResultRecord], observable: &str) -> Vec<Series> {
    let mut groups: BTreeMap<(u64, u64), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.observable == observable) {
        if let Some(l) = r.l {
            let key = (r.beta.unwrap_or(0.0).to_bits(), r.seed.unwrap_or(0));
            groups.entry(key).or_default().push((l as f64, r.value, r.error.unwrap_or(0.0)));
        }
    }
    groups
        .into_iter()
        .map(|((b, s), mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { name: format!("beta={} seed={s}", f64::from_bits(b)), points: pts }
        })
        .collect()
}

fn chart(file: &str, title: &str, x: &str, y: &str, log_x: bool, series: Vec<Series>) -> Chart {
    Chart { file: file.into(), title: title.into(), x_label: x.into(), y_label: y.into(), log_x, series }
}

fn charts_for(cfg: &ExperimentConfig, records: &[ResultRecord]) -> Vec<Chart> {
    match cfg.kind {
        ExperimentKind::ScanRl => vec![chart("r_vs_l.svg", "Block ratio R_L", "L", "R_L", true, series_by_l(records, "r_ratio"))],
        ExperimentKind::EmergentPlanarity => vec![chart(
            "pfaffian_residual_vs_separation.svg",
            "Relative boundary Pfaffian residual",
            "separation",
            "(S4 - Pf) / S4",
            true,
            series_by_l(records, "pf_residual"),
        )],
        ExperimentKind::IntersectionScan => vec![chart(
            "intersection_vs_l.svg",
            "Mean intersection size given non-empty",
            "L",
            "E[|Q| | Q non-empty]",
            true,
            series_by_l(records, "mean_size_given_nonempty"),
        )],
        ExperimentKind::S2Diagnostics => {
            let mut groups: BTreeMap<(usize, u64, u64), Vec<(f64, f64, f64)>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.observable.starts_with("bubble(ell=")) {
                let ell: f64 = r.observable.trim_start_matches("bubble(ell=").trim_end_matches(')').parse().unwrap_or(f64::NAN);
                let key = (r.l.unwrap_or(0), r.beta.unwrap_or(0.0).to_bits(), r.seed.unwrap_or(0));
                groups.entry(key).or_default().push((ell, r.value, r.error.unwrap_or(0.0)));
            }
            let series = groups
                .into_iter()
                .map(|((l, b, s), pts)| Series { name: format!("L={l} beta={} seed={s}", f64::from_bits(b)), points: pts })
                .collect();
            vec![chart("bubble_vs_ell.svg", "Bubble diagram B_ell", "ell", "B_ell", true, series)]
        }
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_centred_and_cyclic() {
        let spec = LatticeSpec::periodic(2, 8);
        let [a, b, c, d] = square_corners(&spec).unwrap();
        assert_eq!(spec.coords(a), vec![2, 2]);
        assert_eq!(spec.coords(b), vec![6, 2]);
        assert_eq!(spec.coords(c), vec![6, 6]);
        assert_eq!(spec.coords(d), vec![2, 6]);
        assert!(square_corners(&LatticeSpec::periodic(1, 8)).is_none());
        assert_eq!(square_corners(&LatticeSpec::periodic(4, 4)).unwrap().len(), 4);
    }

    #[test]
    fn strip_geometry() {
        let g = nnn_strip(6, 3, 0.5).unwrap();
        assert_eq!(g.n_vertices(), 18);
        // 5*3 horizontal, 6*2 vertical, 2*5*2 diagonal
        assert_eq!(g.n_edges(), 15 + 12 + 20);
        assert_eq!(nnn_strip(6, 3, 0.0).unwrap().n_edges(), 27);
    }

    #[test]
    fn drive_keeps_prefix_before_failure() {
        let units = [1, 2, 3, 4];
        let (done, fail) = drive(&units, None, |&u| {
            if u == 3 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(UnitOut { rows: vec![Row::new("x", u as f64)], checks: Vec::new() })
            }
        });
        assert_eq!(done.len(), 2);
        assert!(fail.unwrap().contains("unit 2"));
    }

    #[test]
    fn exhausted_deadline_fails_immediately() {
        let (done, fail) = drive(&[1], Some(Instant::now() - Duration::from_secs(1)), |_| Ok(UnitOut::default()));
        assert!(done.is_empty());
        assert!(fail.unwrap().contains("budget"));
    }
}
