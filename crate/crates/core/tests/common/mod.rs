//! Oracles and random generators shared by the integration tests. Oracles
//! here are written from the operator definitions and do not call the
//! library's evaluation code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use affinity_core::classifiers::{mlp_loss_and_gradient, MlpParams};
use affinity_core::features::{Dataset, DatasetMeta, EncodedRow, FeatureDictionary, SparseVec};
use affinity_core::matcher::{brute_force_count, ClusterState, GroupLabel, Mode};
use affinity_core::trace::{AttrValue, EventPayload, Node, RawConstraint, RawOp, TaskId, TaskSpec, TraceEvent};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ATTRS: [&str; 3] = ["A", "B", "C"];
pub const TEXTS: [&str; 3] = ["x", "y", "z"];

pub fn label(c: char) -> GroupLabel {
    GroupLabel::from_letter(c).unwrap()
}

/// Group letter from integer arithmetic on the count, written separately
/// from the library's classifier.
pub fn group_oracle(count: u64) -> char {
    if count == 1 {
        'A'
    } else if count > 12_000 {
        'Z'
    } else {
        char::from_u32(((count as i64 - 1) / 500 + 66) as u32).unwrap()
    }
}

/// Integer a node value compares as in range operators: absent and empty
/// read as 0, text has none.
fn as_number(v: Option<&AttrValue>) -> Option<i64> {
    match v {
        None => Some(0),
        Some(AttrValue::Empty) => Some(0),
        Some(AttrValue::Integer(i)) => Some(*i),
        Some(AttrValue::Text(_)) => None,
    }
}

/// Whether `node` satisfies every raw constraint, each evaluated on its own.
/// An integer not-equal on an attribute that also has a range bound in the
/// list excludes that number (absent and empty count as 0); elsewhere
/// not-equal only rejects an identical stored value.
pub fn raw_oracle(node: &Node, raws: &[RawConstraint]) -> bool {
    raws.iter().all(|c| {
        let v = node.attributes.get(&c.attribute);
        let ranged = raws.iter().any(|o| {
            o.attribute == c.attribute
                && matches!(o.op, RawOp::LessThan | RawOp::LessEqual | RawOp::GreaterEqual | RawOp::GreaterThan)
        });
        match c.op {
            RawOp::Equal => v == Some(&c.value),
            RawOp::NotEqual => match (&c.value, ranged) {
                (AttrValue::Integer(k), true) => as_number(v) != Some(*k),
                _ => v != Some(&c.value),
            },
            op => {
                let (Some(x), AttrValue::Integer(k)) = (as_number(v), &c.value) else {
                    return false;
                };
                match op {
                    RawOp::LessThan => x < *k,
                    RawOp::LessEqual => x <= *k,
                    RawOp::GreaterEqual => x >= *k,
                    RawOp::GreaterThan => x > *k,
                    _ => unreachable!(),
                }
            }
        }
    })
}

pub fn random_value(rng: &mut impl Rng) -> AttrValue {
    match rng.gen_range(0..10) {
        0..=5 => AttrValue::Integer(rng.gen_range(-3..=6)),
        6..=8 => AttrValue::text(*TEXTS.choose(rng).unwrap()).unwrap(),
        _ => AttrValue::Empty,
    }
}

pub fn random_node(rng: &mut impl Rng, id: impl Into<String>) -> Node {
    let mut node = Node::new(id);
    for a in ATTRS {
        if rng.gen_bool(0.8) {
            node = node.with(a, random_value(rng));
        }
    }
    node
}

/// One to five constraints over a few attributes, with every operator.
pub fn random_constraints(rng: &mut impl Rng) -> Vec<RawConstraint> {
    let n = rng.gen_range(1..=5);
    let attrs = &ATTRS[..rng.gen_range(1..=ATTRS.len())];
    (0..n)
        .map(|_| {
            let attr = *attrs.choose(rng).unwrap();
            let op = *[
                RawOp::Equal,
                RawOp::NotEqual,
                RawOp::NotEqual,
                RawOp::LessThan,
                RawOp::GreaterEqual,
                RawOp::GreaterThan,
                RawOp::LessEqual,
            ]
            .choose(rng)
            .unwrap();
            let value = match op {
                RawOp::Equal | RawOp::NotEqual => random_value(rng),
                _ => AttrValue::Integer(rng.gen_range(-3..=6)),
            };
            RawConstraint::new(attr, op, value)
        })
        .collect()
}

/// Replays `events` random events (at most `max_nodes` nodes and `max_tasks`
/// live tasks) and after every event compares each live task's cached count
/// with brute-force counts over the current nodes, from both the compacted
/// set and the raw constraints. Also checks the per-event evaluation budget
/// and that node additions and removals move counts monotonically.
pub fn check_random_stream(rng: &mut impl Rng, events: usize, max_nodes: usize, max_tasks: usize) -> Result<(), String> {
    let mut state = ClusterState::new(Mode::Strict);
    let mut raws: BTreeMap<TaskId, Vec<RawConstraint>> = BTreeMap::new();
    let mut next_node = 0usize;
    let mut next_job = 0u64;
    for step in 0..events {
        let node_ids: Vec<String> = state.nodes().map(|n| n.id.clone()).collect();
        let live: Vec<TaskId> = state.task_ids().collect();
        let payload = match rng.gen_range(0..6) {
            0 if node_ids.len() < max_nodes => {
                next_node += 1;
                EventPayload::NodeAdd(random_node(rng, format!("n{next_node}")))
            }
            1 if !node_ids.is_empty() => {
                let id = node_ids.choose(rng).unwrap().clone();
                EventPayload::NodeUpdate(random_node(rng, id))
            }
            2 if !node_ids.is_empty() && rng.gen_bool(0.5) => {
                EventPayload::NodeRemove(node_ids.choose(rng).unwrap().clone())
            }
            3 if !live.is_empty() => {
                let id = *live.choose(rng).unwrap();
                EventPayload::TaskUpdate(TaskSpec {
                    id,
                    cpu: 0.5,
                    mem: 0.5,
                    constraints: random_constraints(rng),
                })
            }
            4 if !live.is_empty() => EventPayload::TaskFinish(*live.choose(rng).unwrap()),
            _ if live.len() < max_tasks => {
                next_job += 1;
                let constraints = if rng.gen_bool(0.1) { Vec::new() } else { random_constraints(rng) };
                EventPayload::TaskSubmit(TaskSpec {
                    id: TaskId::new(next_job, 0),
                    cpu: 0.1,
                    mem: 0.1,
                    constraints,
                })
            }
            _ => EventPayload::TaskFinish(*live.choose(rng).unwrap()),
        };
        let before: BTreeMap<TaskId, usize> = live.iter().map(|&id| (id, state.task_count(id).unwrap())).collect();
        let evals = state.match_evaluations();
        let (n_nodes, n_tasks) = (state.node_count(), state.live_task_count());
        let event = TraceEvent::new(step as u64, payload);
        state
            .apply_event(&event)
            .map_err(|e| format!("step {step}: unexpected error {e}"))?;
        let spent = state.match_evaluations() - evals;
        let budget = if event.payload.is_node_event() { n_tasks } else { n_nodes };
        if spent as usize > budget {
            return Err(format!("step {step}: {spent} evaluations exceed budget {budget}"));
        }
        match &event.payload {
            EventPayload::TaskSubmit(s) | EventPayload::TaskUpdate(s) => {
                raws.insert(s.id, s.constraints.clone());
            }
            EventPayload::TaskFinish(id) => {
                raws.remove(id);
            }
            _ => {}
        }
        raws.retain(|id, _| state.task_count(*id).is_some());
        for (id, before) in &before {
            let Some(after) = state.task_count(*id) else { continue };
            let bad = match &event.payload {
                EventPayload::NodeAdd(_) => after < *before,
                EventPayload::NodeRemove(_) => after > *before,
                _ => false,
            };
            if bad {
                return Err(format!("step {step}: count of {id} moved {before} -> {after} the wrong way"));
            }
        }
        for id in state.task_ids() {
            let cached = state.task_count(id).unwrap();
            let compacted = brute_force_count(state.nodes(), state.task_constraints(id).unwrap());
            let raw = state.nodes().filter(|n| raw_oracle(n, &raws[&id])).count();
            if cached != compacted || cached != raw {
                return Err(format!(
                    "step {step}: task {id} cached {cached}, compacted brute force {compacted}, raw {raw}"
                ));
            }
            let members = state.task_members(id).unwrap();
            if members.len() != cached || members.iter().any(|m| state.node(m).is_none()) {
                return Err(format!("step {step}: membership set of {id} is inconsistent"));
            }
        }
    }
    Ok(())
}

/// A dictionary of exactly `width` columns: one attribute with
/// `width - 1` categories.
pub fn dictionary_of_width(width: usize) -> FeatureDictionary {
    let cats: Vec<String> = (0..width - 1).map(|i| format!("F|EQ|i:{i:04}")).collect();
    FeatureDictionary::from_categories(BTreeMap::from([("F".to_string(), cats)]))
}

pub fn dataset(rows: Vec<EncodedRow>, width: usize) -> Dataset {
    Dataset {
        dictionary: dictionary_of_width(width),
        rows,
        meta: DatasetMeta::default(),
    }
}

/// Rows of `classes.len()` classes: class `c` sets indicator column
/// `c + 2` to 1 and sprinkles small noise over the columns after the
/// indicators, so classes are separable with margin.
pub fn separable_rows(rng: &mut impl Rng, classes: &[char], n_per_class: usize, width: usize) -> Vec<EncodedRow> {
    let first_noise = classes.len() + 2;
    assert!(width > first_noise);
    let mut rows = Vec::new();
    for (c, &letter) in classes.iter().enumerate() {
        for _ in 0..n_per_class {
            let mut dense = vec![0.0; width];
            dense[0] = rng.gen_range(0.0..1.0);
            dense[1] = rng.gen_range(0.0..1.0);
            dense[c + 2] = 1.0;
            for v in dense.iter_mut().skip(first_noise) {
                if rng.gen_bool(0.1) {
                    *v = 1.0;
                }
            }
            rows.push(EncodedRow {
                label: label(letter),
                count: 1,
                features: SparseVec::from_dense(&dense),
            });
        }
    }
    rows.shuffle(rng);
    rows
}

/// Inverse-distance k-nearest-neighbour vote by exhaustive dense scan;
/// ties in distance keep training order, exact matches alone decide.
pub fn knn_oracle(train: &[EncodedRow], k: usize, query: &SparseVec, width: usize) -> GroupLabel {
    let q = query.to_dense(width);
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d: f64 = r.features.to_dense(width).iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nearest = &dist[..k.min(dist.len())];
    let exact = nearest.iter().any(|p| p.0 == 0.0);
    let mut votes: BTreeMap<GroupLabel, f64> = BTreeMap::new();
    for &(d, i) in nearest {
        let w = if exact {
            if d == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 / d.sqrt()
        };
        *votes.entry(train[i].label).or_default() += w;
    }
    let mut best: Option<(GroupLabel, f64)> = None;
    for (l, v) in votes {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((l, v));
        }
    }
    best.unwrap().0
}

/// Largest per-parameter relative difference between the analytic gradient
/// and central differences with step `h`:
/// `|g - fd| / max(|g| + |fd|, floor)`.
pub fn max_gradient_error(params: &MlpParams, xs: &[SparseVec], ys: &[usize], h: f64, floor: f64) -> f64 {
    let (_, grad) = mlp_loss_and_gradient(params, xs, ys).unwrap();
    let analytic = grad.to_flat();
    let flat = params.to_flat();
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += h;
        let mut minus = flat.clone();
        minus[i] -= h;
        let (lp, _) = mlp_loss_and_gradient(&MlpParams::from_flat(&params.sizes, &plus), xs, ys).unwrap();
        let (lm, _) = mlp_loss_and_gradient(&MlpParams::from_flat(&params.sizes, &minus), xs, ys).unwrap();
        let fd = (lp - lm) / (2.0 * h);
        let err = (analytic[i] - fd).abs() / (analytic[i].abs() + fd.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}
