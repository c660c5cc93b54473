//! Property tests for the invariants each stage must keep.

mod common;

use std::collections::BTreeMap;

use affinity_core::classifiers::{
    fit, ridge_normal_residual, softmax, ClassifierKind, ClassifierSpec, ModelParams,
};
use affinity_core::constraint::{canonical_label, compact, matches, ConstraintError};
use affinity_core::ensemble::{evaluate, fit_ensemble, hard_vote};
use affinity_core::features::{build_dictionary, compress, DataRow, EncodedRow, SparseVec};
use affinity_core::matcher::{classify_group, GroupLabel};
use affinity_core::trace::{
    format_node_event, format_task_event, parse_node_event, parse_task_event, AttrValue, EventPayload,
    RawConstraint, TaskId, TaskSpec, TraceEvent,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Failing seeds are printed by the runner rather than persisted to disk.
fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels_of(raws: &[RawConstraint]) -> Result<Vec<String>, ConstraintError> {
    compact(raws).map(|s| s.iter().map(canonical_label).collect())
}

/// Every node over the test attributes with values from a small grid.
fn probe_nodes() -> Vec<affinity_core::trace::Node> {
    let mut values: Vec<Option<AttrValue>> = vec![None, Some(AttrValue::Empty)];
    values.extend((-4..=7).map(|i| Some(AttrValue::Integer(i))));
    values.extend(TEXTS.iter().map(|t| Some(AttrValue::text(*t).unwrap())));
    let mut out = Vec::new();
    for a in &values {
        for b in &values {
            let mut node = affinity_core::trace::Node::new("p");
            for (name, v) in [("A", a), ("B", b)] {
                if let Some(v) = v {
                    node = node.with(name, v.clone());
                }
            }
            out.push(node);
        }
    }
    out
}

fn random_rows(rng: &mut impl Rng, n: usize) -> Vec<DataRow> {
    (0..n)
        .map(|i| {
            let mut labels = BTreeMap::new();
            for a in ["P", "Q", "R"] {
                if rng.gen_bool(0.5) {
                    labels.insert(a.to_string(), format!("{a}|EQ|i:{}", rng.gen_range(0..3)));
                }
            }
            let count = rng.gen_range(1..3_000);
            DataRow {
                job_id: rng.gen_range(0..(n as u64 / 2 + 1)),
                task_index: i as u32,
                count,
                group: classify_group(count).unwrap(),
                cpu: [0.25, 0.5][rng.gen_range(0..2)],
                mem: 0.5,
                labels,
            }
        })
        .collect()
}

fn labels_strategy(max: usize) -> impl Strategy<Value = Vec<GroupLabel>> {
    prop::collection::vec(0usize..26, 1..max)
        .prop_map(|v| v.into_iter().map(|i| GroupLabel::from_index(i).unwrap()).collect())
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn compaction_ignores_constraint_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut raws = random_constraints(&mut r);
        let before = labels_of(&raws);
        raws.shuffle(&mut r);
        prop_assert_eq!(before, labels_of(&raws));
    }

    #[test]
    fn compaction_is_idempotent(seed in any::<u64>()) {
        let raws = random_constraints(&mut rng(seed));
        if let Ok(set) = compact(&raws) {
            let again: Vec<RawConstraint> = set.iter().flat_map(|c| c.to_raw()).collect();
            prop_assert_eq!(compact(&again).unwrap(), set);
        }
    }

    #[test]
    fn compaction_preserves_semantics(seed in any::<u64>()) {
        let raws = random_constraints(&mut rng(seed));
        let nodes = probe_nodes();
        match compact(&raws) {
            Ok(set) => {
                for n in &nodes {
                    prop_assert_eq!(matches(n, &set), raw_oracle(n, &raws), "{:?} on {:?}", raws, n);
                }
            }
            Err(ConstraintError::Unsatisfiable(_)) => {
                prop_assert!(!nodes.iter().any(|n| raw_oracle(n, &raws)), "{:?}", raws);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    /// Equal labels imply equal satisfying sets on the probe grid.
    #[test]
    fn labels_identify_satisfying_sets(a in any::<u64>(), b in any::<u64>()) {
        let (ra, rb) = (random_constraints(&mut rng(a)), random_constraints(&mut rng(b)));
        if let (Ok(sa), Ok(sb)) = (compact(&ra), compact(&rb)) {
            let la: Vec<String> = sa.iter().map(canonical_label).collect();
            let lb: Vec<String> = sb.iter().map(canonical_label).collect();
            if la == lb {
                for n in probe_nodes() {
                    prop_assert_eq!(matches(&n, &sa), matches(&n, &sb));
                }
            }
        }
    }

    #[test]
    fn events_survive_format_and_parse(seed in any::<u64>(), ts in 0u64..1 << 50) {
        let mut r = rng(seed);
        let name = format!("node{}", r.gen_range(0..100));
        let node = random_node(&mut r, name);
        for payload in [EventPayload::NodeAdd(node.clone()), EventPayload::NodeUpdate(node.clone()), EventPayload::NodeRemove(node.id.clone())] {
            let e = TraceEvent::new(ts, payload);
            prop_assert_eq!(parse_node_event(&format_node_event(&e)).unwrap(), e);
        }
        let id = TaskId::new(r.gen_range(0..1 << 40), r.gen_range(0..1000));
        let spec = TaskSpec { id, cpu: r.gen_range(0.0..1.0), mem: r.gen_range(0.0..1.0), constraints: random_constraints(&mut r) };
        for payload in [EventPayload::TaskSubmit(spec.clone()), EventPayload::TaskUpdate(spec), EventPayload::TaskFinish(id)] {
            let e = TraceEvent::new(ts, payload);
            prop_assert_eq!(parse_task_event(&format_task_event(&e)).unwrap(), e);
        }
    }

    #[test]
    fn parsers_never_panic(line in "\\PC{0,80}", csvish in "[0-9A-Za-z,:|=;.-]{0,60}") {
        for l in [&line, &csvish] {
            let _ = parse_node_event(l);
            let _ = parse_task_event(l);
        }
    }

    #[test]
    fn compression_is_idempotent_and_order_free(seed in any::<u64>(), n in 1usize..120) {
        let mut r = rng(seed);
        let mut rows = random_rows(&mut r, n);
        let once = compress(&rows);
        prop_assert_eq!(compress(&once), once.clone());
        rows.shuffle(&mut r);
        let key = |v: &[DataRow]| {
            let mut k: Vec<_> = v.iter().map(|d| (d.job_id, d.labels.clone(), d.cpu.to_bits(), d.count)).collect();
            k.sort();
            k
        };
        prop_assert_eq!(key(&compress(&rows)), key(&once));
    }

    #[test]
    fn dictionary_ignores_row_order(seed in any::<u64>(), n in 1usize..80) {
        let mut r = rng(seed);
        let mut rows = random_rows(&mut r, n);
        let first = build_dictionary(&rows).unwrap();
        rows.shuffle(&mut r);
        prop_assert_eq!(build_dictionary(&rows).unwrap(), first);
    }

    #[test]
    fn sparse_ops_agree_with_dense(a in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 0..30),
                                   b in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 0..30)) {
        let width = a.len().max(b.len());
        let (sa, sb) = (SparseVec::from_dense(&a), SparseVec::from_dense(&b));
        let (da, db) = (sa.to_dense(width), sb.to_dense(width));
        let dot: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let dist: f64 = da.iter().zip(&db).map(|(x, y)| (x - y) * (x - y)).sum();
        prop_assert!((sa.dot(&db) - dot).abs() <= 1e-9 * (1.0 + dot.abs()));
        prop_assert!((sa.squared_distance(&sb) - dist).abs() <= 1e-9 * (1.0 + dist));
        prop_assert_eq!(sa.nnz(), a.iter().filter(|v| **v != 0.0).count());
    }

    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-500.0..500.0f64, 1..12)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn metric_identities_hold(pairs in labels_strategy(80).prop_flat_map(|t| {
        let n = t.len();
        (Just(t), labels_strategy(n + 1).prop_map(move |p| p.into_iter().cycle().take(n).collect::<Vec<_>>()))
    })) {
        let (truth, pred) = pairs;
        let rep = evaluate(&truth, &pred).unwrap();
        let total: u64 = rep.confusion.iter().flatten().sum();
        prop_assert_eq!(total, truth.len() as u64);
        let diag: u64 = (0..rep.labels.len()).map(|i| rep.confusion[i][i]).sum();
        prop_assert!((rep.accuracy - diag as f64 / truth.len() as f64).abs() < 1e-12);
        for (i, c) in rep.classes.iter().enumerate() {
            prop_assert_eq!(c.support, rep.confusion[i].iter().sum::<u64>());
            prop_assert!((0.0..=1.0).contains(&c.precision) && (0.0..=1.0).contains(&c.recall));
            let lo = c.precision.min(c.recall);
            let hi = c.precision.max(c.recall);
            prop_assert!(c.f1 >= lo - 1e-12 && c.f1 <= hi + 1e-12);
        }
    }

    #[test]
    fn hard_vote_returns_a_most_common_vote(votes in labels_strategy(6)) {
        let winner = hard_vote(votes.iter().copied());
        let count = |l: GroupLabel| votes.iter().filter(|v| **v == l).count();
        prop_assert!(votes.contains(&winner));
        prop_assert!(votes.iter().all(|v| count(*v) < count(winner) || (count(*v) == count(winner) && *v >= winner)));
    }

    #[test]
    fn knn_agrees_with_brute_force(seed in any::<u64>(), n in 4usize..60) {
        let mut r = rng(seed);
        let width = 8;
        let rows: Vec<EncodedRow> = (0..n).map(|_| {
            let dense: Vec<f64> = (0..width).map(|_| if r.gen_bool(0.4) { r.gen_range(0..3) as f64 } else { 0.0 }).collect();
            EncodedRow { label: label(['A', 'B', 'C'][r.gen_range(0..3)]), count: 1, features: SparseVec::from_dense(&dense) }
        }).collect();
        let model = fit(&ClassifierSpec::new(ClassifierKind::Knn, seed), &rows, width).unwrap();
        for _ in 0..10 {
            let q: Vec<f64> = (0..width).map(|_| r.gen_range(0..3) as f64).collect();
            let q = SparseVec::from_dense(&q);
            prop_assert_eq!(model.predict_one(&q), knn_oracle(&rows, 3, &q, width));
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn ridge_solves_its_normal_equations(seed in any::<u64>(), width in 8usize..40) {
        let rows = separable_rows(&mut rng(seed), &['A', 'C', 'Z'], 15, width);
        let spec = ClassifierSpec::new(ClassifierKind::Ridge, seed);
        let model = fit(&spec, &rows, width).unwrap();
        let ModelParams::Linear { weights } = &model.params else { panic!("linear model expected") };
        let xs: Vec<&SparseVec> = rows.iter().map(|r| &r.features).collect();
        let ys: Vec<usize> = rows.iter().map(|r| model.classes.iter().position(|c| *c == r.label).unwrap()).collect();
        for (class, w) in weights.iter().enumerate() {
            let (res, rhs) = ridge_normal_residual(&xs, &ys, class, w, spec.alpha);
            prop_assert!(res <= 1e-8 * (1.0 + rhs), "residual {res} for rhs norm {rhs}");
        }
    }

    #[test]
    fn training_is_independent_of_thread_count(seed in any::<u64>()) {
        let rows = separable_rows(&mut rng(seed), &['A', 'B', 'C'], 20, 12);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| fit_ensemble(&rows, 12, seed).unwrap());
        let b = four.install(|| fit_ensemble(&rows, 12, seed).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn incremental_counts_match_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        prop_assert_eq!(check_random_stream(&mut r, 150, 20, 15), Ok(()));
    }
}
