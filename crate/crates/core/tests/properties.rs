use nalgebra::DMatrix;
use proptest::prelude::*;

use rcurrent::currents::SourceSet;
use rcurrent::diagrams::r_ratio;
use rcurrent::graph::CouplingGraph;
use rcurrent::gs_blocks::{block_pmf, pmf_moments, BlockParams};
use rcurrent::harness::corpus::{corpus_instance, DEFAULT_CORPUS_SEED};
use rcurrent::harness::records::ResultRecord;
use rcurrent::harness::verify::{identity_checks, switching_checks, SuiteLimits};
use rcurrent::harness::{compare_records, ExperimentConfig, ExperimentKind};
use rcurrent::ising_exact::{ExactGibbs, ThermoParams};
use rcurrent::pfaffian::{crossing_sign, pfaffian, AntisymmetricArray, Pairing};

/// Connected graph on `n` vertices: a random tree plus extra edges.
fn graph_strategy() -> impl Strategy<Value = CouplingGraph> {
    (2usize..=6)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            let tree_j = prop::collection::vec(0.05f64..1.5, n - 1);
            let extra = prop::collection::vec((0..n, 0..n, 0.05f64..1.5), 0..3);
            (Just(n), parents, tree_j, extra)
        })
        .prop_map(|(n, parents, tree_j, extra)| {
            let mut t: Vec<(usize, usize, f64)> =
                parents.iter().enumerate().map(|(i, &p)| (p, i + 1, tree_j[i])).collect();
            for (u, v, j) in extra {
                if u != v && !t.iter().any(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u)) {
                    t.push((u, v, j));
                }
            }
            CouplingGraph::from_triples(n, &t).unwrap()
        })
}

fn antisymmetric(dim: usize, vals: &[f64]) -> AntisymmetricArray {
    let mut it = vals.iter();
    AntisymmetricArray::from_fn(dim, |_, _| *it.next().unwrap())
}

fn dense(a: &AntisymmetricArray) -> DMatrix<f64> {
    let d = a.dim();
    DMatrix::from_fn(d, d, |i, j| a.get(i, j))
}

fn pairing_strategy(max_pairs: usize) -> impl Strategy<Value = Pairing> {
    (1..=max_pairs).prop_flat_map(|k| Just((0..2 * k).collect::<Vec<_>>()).prop_shuffle()).prop_map(|perm| {
        let mut partner = vec![0; perm.len()];
        for c in perm.chunks(2) {
            partner[c[0]] = c[1];
            partner[c[1]] = c[0];
        }
        Pairing::new(partner).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_squares_to_determinant(k in 1usize..=5, vals in prop::collection::vec(-2.0f64..2.0, 45)) {
        let dim = 2 * k;
        let a = antisymmetric(dim, &vals);
        let pf = pfaffian(&a).unwrap();
        let det = dense(&a).determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-9 * (1.0 + det.abs()), "pf^2 {} det {}", pf * pf, det);
    }

    #[test]
    fn pfaffian_congruence(k in 1usize..=4, vals in prop::collection::vec(-2.0f64..2.0, 28), b in prop::collection::vec(-1.0f64..1.0, 64)) {
        let dim = 2 * k;
        let a = antisymmetric(dim, &vals);
        let bm = DMatrix::from_fn(dim, dim, |i, j| b[i * dim + j]);
        let c = &bm * dense(&a) * bm.transpose();
        let ca = AntisymmetricArray::from_fn(dim, |i, j| c[(i, j)]);
        let lhs = pfaffian(&ca).unwrap();
        let rhs = bm.determinant() * pfaffian(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn crossing_sign_is_rotation_invariant(p in pairing_strategy(4), shift in 0usize..8) {
        let n = p.len();
        let pos: Vec<i64> = (0..n as i64).collect();
        let rotated: Vec<i64> = (0..n).map(|i| ((i + shift) % n) as i64).collect();
        let s = crossing_sign(&pos, &p).unwrap();
        prop_assert_eq!(s, crossing_sign(&rotated, &p).unwrap());
        prop_assert_eq!(i32::from(s), if p.crossings() % 2 == 0 { 1 } else { -1 });
    }

    #[test]
    fn correlations_bounded_and_griffiths_monotone(g in graph_strategy(), beta in 0.01f64..1.5, db in 0.01f64..0.5) {
        let lo = ExactGibbs::new(&g, ThermoParams::new(beta)).unwrap();
        let hi = ExactGibbs::new(&g, ThermoParams::new(beta + db)).unwrap();
        let n = g.n_vertices();
        for x in 0..n {
            for y in x + 1..n {
                let (a, b) = (lo.s2(x, y), hi.s2(x, y));
                prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
                prop_assert!(b >= a - 1e-12, "s2({x},{y}) fell from {a} to {b}");
            }
        }
    }

    #[test]
    fn ursell_nonpositive_and_ratio_in_range(g in graph_strategy(), beta in 0.01f64..2.0, pts in prop::collection::vec(0usize..6, 4)) {
        let gibbs = ExactGibbs::new(&g, ThermoParams::new(beta)).unwrap();
        let n = g.n_vertices();
        let x = [pts[0] % n, pts[1] % n, pts[2] % n, pts[3] % n];
        prop_assert!(gibbs.ursell4(x) <= 1e-12);
        let all: Vec<usize> = (0..n).collect();
        let m = gibbs.block_moments(&all, 4);
        let r = r_ratio(m[2], m[4]).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&r), "R = {r}");
    }

    #[test]
    fn random_current_identities(g in graph_strategy(), beta in 0.01f64..2.0) {
        let lim = SuiteLimits { tuples: 4, subsets: 2 };
        for c in identity_checks(&g, beta, &lim).unwrap() {
            prop_assert!(c.passed, "{} {} residual {}", c.name, c.case, c.residual);
        }
    }

    #[test]
    fn switching_lemma_holds(g in graph_strategy(), beta in 0.01f64..2.0, seed in any::<u64>()) {
        for c in switching_checks(&g, beta, seed, 0, 2).unwrap() {
            prop_assert!(c.passed, "{} residual {}", c.case, c.residual);
        }
    }

    #[test]
    fn source_sets_reduce_by_parity(points in prop::collection::vec(0usize..8, 0..10)) {
        let a = SourceSet::from_parity(&points);
        for x in 0..8 {
            let odd = points.iter().filter(|&&p| p == x).count() % 2 == 1;
            prop_assert_eq!(a.contains(x), odd);
        }
        prop_assert_eq!(a.symmetric_difference(&a).len(), 0);
    }

    #[test]
    fn corpus_is_within_bounds(index in 0usize..500, seed in any::<u64>()) {
        let inst = corpus_instance(seed, index).unwrap();
        prop_assert!((2..=6).contains(&inst.graph.n_vertices()));
        prop_assert!(inst.graph.n_edges() <= 8);
        prop_assert!(inst.graph.is_connected());
        prop_assert!(inst.beta > 0.0 && inst.beta < 2.0);
        prop_assert!(inst.graph.edges().iter().all(|e| e.j > 0.0 && e.j < 2.0));
        let again = corpus_instance(seed, index).unwrap();
        prop_assert_eq!(inst.graph, again.graph);
        prop_assert_eq!(inst.beta.to_bits(), again.beta.to_bits());
    }

    #[test]
    fn block_pmf_is_symmetric_and_normalised(n in 2usize..200, alpha in 0.05f64..3.0, g in 0.0f64..0.999) {
        let pmf = block_pmf(BlockParams::new(n, alpha, g).unwrap()).unwrap();
        let total: f64 = pmf.iter().map(|p| p.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (a, b) in pmf.iter().zip(pmf.iter().rev()) {
            prop_assert!((a.0 + b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 * (1.0 + a.1));
        }
        prop_assert!(pmf_moments(&pmf, 3)[3] == 0.0);
    }

    #[test]
    fn config_hash_is_deterministic(seed in 0..=i64::MAX as u64 - 1, betas in prop::collection::vec(0.0f64..2.0, 1..4)) {
        let mut a = ExperimentConfig::new(ExperimentKind::EmergentPlanarity);
        a.seeds = vec![seed];
        a.betas = betas;
        a.separations = vec![1];
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        prop_assert_eq!(a.input_hash(), b.input_hash());
        let back = ExperimentConfig::from_toml(&a.to_toml().unwrap(), None).unwrap();
        prop_assert_eq!(back.input_hash(), a.input_hash());
        let mut c = a.clone();
        c.seeds.push(seed.wrapping_add(1));
        prop_assert_ne!(c.input_hash(), a.input_hash());
        c.seeds = vec![seed | (1 << 63)];
        prop_assert!(c.validate().is_err());
    }

    #[test]
    fn compare_records_finds_first_change(vals in prop::collection::vec(any::<f64>(), 1..20), at in any::<prop::sample::Index>()) {
        let recs: Vec<ResultRecord> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| ResultRecord {
                experiment_id: "e".into(),
                kind: "mc-run".into(),
                observable: format!("o{i}"),
                value: v,
                error: None,
                l: None,
                beta: Some(0.5),
                seed: Some(1),
                input_hash: "h".into(),
            })
            .collect();
        prop_assert!(compare_records(&recs, &recs).is_ok());
        let i = at.index(recs.len());
        let mut edited = recs.clone();
        edited[i].value = if vals[i] == 1.0 { 2.0 } else { 1.0 };
        let err = compare_records(&recs, &edited).unwrap_err().to_string();
        let expected = format!("record {i} (o{i})");
        prop_assert!(err.contains(&expected), "{}", err);
    }
}

#[test]
fn default_corpus_seed_is_stable() {
    let a = corpus_instance(DEFAULT_CORPUS_SEED, 7).unwrap();
    let b = corpus_instance(DEFAULT_CORPUS_SEED, 7).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.beta.to_bits(), b.beta.to_bits());
}
