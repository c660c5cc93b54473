//! Seeded synthetic cluster traces with exact suitable-node counts.
//!
//! Nodes are added at time 0. Jobs draw their constraints from a fixed pool
//! of templates, so the same constraint structure recurs across jobs the way
//! it does in production traces. Churn only touches one volatile integer
//! attribute that no template constrains, which keeps every task's count
//! fixed after node creation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttrValue, EventPayload, Node, RawConstraint, RawOp, TaskId, TaskSpec, TraceError, TraceEvent};
use crate::constraint::{compact, matches, CompactedConstraintSet};

const INT_LEVELS: i64 = 21;
const ABSENT_RATE: f64 = 0.05;
const EMPTY_RATE: f64 = 0.03;
const MAX_ATTEMPTS: usize = 20_000;

/// Target share of tasks per kind. The remainder gets random templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupMix {
    /// Tasks pinned to exactly one node.
    pub a: f64,
    /// Tasks fitting 501..=1000 nodes.
    pub c: f64,
    pub unconstrained: f64,
}

impl Default for GroupMix {
    fn default() -> Self {
        GroupMix {
            a: 0.05,
            c: 0.05,
            unconstrained: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTraceConfig {
    pub n_nodes: usize,
    pub n_attributes: usize,
    /// Fraction of attributes holding integers; the rest hold text.
    pub integer_ratio: f64,
    pub categories_per_text_attribute: usize,
    pub n_jobs: usize,
    /// Inclusive range of tasks per job.
    pub tasks_per_job: (usize, usize),
    /// Inclusive range of constraints per random template. Pinned templates
    /// use as many equalities as uniqueness needs.
    pub constraints_per_task: (usize, usize),
    pub group_mix: GroupMix,
    /// Volatile-attribute node updates per interval.
    pub churn_rate: usize,
    pub interval_micros: u64,
    /// Number of random templates; pinned and mid-size pools are an eighth of it.
    pub template_pool: usize,
    /// Whether random templates may land in 2..=500 nodes.
    pub allow_group_b: bool,
    pub finish_fraction: f64,
    pub update_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticTraceConfig {
    fn default() -> Self {
        SyntheticTraceConfig {
            n_nodes: 4500,
            n_attributes: 24,
            integer_ratio: 0.6,
            categories_per_text_attribute: 8,
            n_jobs: 4000,
            tasks_per_job: (1, 40),
            constraints_per_task: (1, 4),
            group_mix: GroupMix::default(),
            churn_rate: 20,
            interval_micros: crate::matcher::DEFAULT_INTERVAL_MICROS,
            template_pool: 320,
            allow_group_b: false,
            finish_fraction: 0.02,
            update_fraction: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticTraceConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: &str| Err(TraceError::InvalidConfig(m.to_string()));
        let frac = |x: f64| (0.0..=1.0).contains(&x);
        if self.n_nodes == 0 || self.n_jobs == 0 || self.template_pool == 0 {
            return bad("n_nodes, n_jobs and template_pool must be positive");
        }
        if self.categories_per_text_attribute == 0 {
            return bad("categories_per_text_attribute must be positive");
        }
        if self.interval_micros == 0 {
            return bad("interval_micros must be positive");
        }
        let (tlo, thi) = self.tasks_per_job;
        if tlo == 0 || tlo > thi || thi > u32::MAX as usize {
            return bad("tasks_per_job must be a non-empty positive range");
        }
        if self.constraints_per_task.0 > self.constraints_per_task.1 {
            return bad("constraints_per_task range is inverted");
        }
        let m = &self.group_mix;
        let fractions = [
            self.integer_ratio,
            m.a,
            m.c,
            m.unconstrained,
            self.finish_fraction,
            self.update_fraction,
        ];
        if !fractions.iter().all(|&x| frac(x)) {
            return bad("fractions must lie in [0, 1]");
        }
        if m.a + m.c + m.unconstrained > 1.0 + 1e-12 {
            return bad("group mix fractions sum above 1");
        }
        Ok(())
    }

    fn n_integer_attributes(&self) -> usize {
        (self.n_attributes as f64 * self.integer_ratio).round() as usize
    }
}

/// Generated events plus the exact suitable-node count of every task's
/// final constraints against the final node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub node_events: Vec<TraceEvent>,
    pub task_events: Vec<TraceEvent>,
    pub oracle: BTreeMap<TaskId, u64>,
}

/// Attribute names in spreadsheet order: `A`..`Z`, `AA`, `AB`, ...
pub fn attribute_name(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Pinned,
    MidSize,
    Random,
    Unconstrained,
}

#[derive(Clone)]
struct Template {
    constraints: Vec<RawConstraint>,
    count: u64,
}

struct Universe {
    integer_attrs: Vec<String>,
    text_attrs: Vec<String>,
    volatile: Option<String>,
    categories: usize,
    nodes: Vec<Node>,
}

impl Universe {
    fn build(cfg: &SyntheticTraceConfig, rng: &mut ChaCha8Rng) -> Self {
        let n_int = cfg.n_integer_attributes();
        let names: Vec<String> = (0..cfg.n_attributes).map(attribute_name).collect();
        let mut integer_attrs = names[..n_int].to_vec();
        let text_attrs = names[n_int..].to_vec();
        let volatile = if cfg.churn_rate > 0 { integer_attrs.pop() } else { None };
        let mut nodes = Vec::with_capacity(cfg.n_nodes);
        let width = cfg.n_nodes.to_string().len();
        for i in 0..cfg.n_nodes {
            let mut node = Node::new(format!("n{i:0width$}"));
            for name in &integer_attrs {
                if !rng.gen_bool(ABSENT_RATE) {
                    node.attributes
                        .insert(name.clone(), AttrValue::Integer(rng.gen_range(0..INT_LEVELS)));
                }
            }
            for name in &text_attrs {
                let roll: f64 = rng.gen();
                if roll < ABSENT_RATE {
                    continue;
                }
                let value = if roll < ABSENT_RATE + EMPTY_RATE {
                    AttrValue::Empty
                } else {
                    category(rng.gen_range(0..cfg.categories_per_text_attribute))
                };
                node.attributes.insert(name.clone(), value);
            }
            if let Some(v) = &volatile {
                node.attributes
                    .insert(v.clone(), AttrValue::Integer(rng.gen_range(0..INT_LEVELS)));
            }
            nodes.push(node);
        }
        Universe {
            integer_attrs,
            text_attrs,
            volatile,
            categories: cfg.categories_per_text_attribute,
            nodes,
        }
    }

    fn stable_attrs(&self) -> usize {
        self.integer_attrs.len() + self.text_attrs.len()
    }

    fn count(&self, constraints: &[RawConstraint]) -> Option<(CompactedConstraintSet, u64)> {
        let set = compact(constraints).ok()?;
        let n = self.nodes.iter().filter(|n| matches(n, &set)).count() as u64;
        Some((set, n))
    }

    fn random_constraint(&self, name: &str, is_int: bool, rng: &mut ChaCha8Rng) -> Vec<RawConstraint> {
        let c = |op, v| RawConstraint::new(name, op, v);
        let int = AttrValue::Integer;
        if is_int {
            let k = rng.gen_range(1..INT_LEVELS);
            match rng.gen_range(0..9) {
                0 => vec![c(RawOp::GreaterEqual, int(k))],
                1 => vec![c(RawOp::LessThan, int(k))],
                2 => {
                    let lo = rng.gen_range(0..INT_LEVELS - 1);
                    let hi = rng.gen_range(lo + 1..=INT_LEVELS);
                    vec![c(RawOp::GreaterEqual, int(lo)), c(RawOp::LessThan, int(hi))]
                }
                3 => vec![c(RawOp::GreaterThan, int(k - 1))],
                4 => vec![c(RawOp::LessEqual, int(k))],
                5 => vec![c(RawOp::Equal, int(k))],
                6 => {
                    let n = rng.gen_range(1..=3);
                    (0..n)
                        .map(|_| c(RawOp::NotEqual, int(rng.gen_range(0..INT_LEVELS))))
                        .collect()
                }
                7 => vec![c(RawOp::GreaterEqual, int(0)), c(RawOp::NotEqual, int(0))],
                // Holds on every node: levels are non-negative and absent reads as 0.
                _ => vec![c(RawOp::GreaterEqual, int(0))],
            }
        } else {
            match rng.gen_range(0..4) {
                0 => vec![c(RawOp::Equal, category(rng.gen_range(0..self.categories)))],
                1 => {
                    let n = rng.gen_range(1..=3.min(self.categories));
                    (0..n)
                        .map(|_| c(RawOp::NotEqual, category(rng.gen_range(0..self.categories))))
                        .collect()
                }
                2 => vec![c(RawOp::NotEqual, AttrValue::Empty)],
                // No node carries this value.
                _ => vec![c(RawOp::NotEqual, category(self.categories + 1))],
            }
        }
    }

    fn random_template(&self, cfg: &SyntheticTraceConfig, rng: &mut ChaCha8Rng) -> Vec<RawConstraint> {
        let (lo, hi) = cfg.constraints_per_task;
        let n = rng.gen_range(lo.max(1)..=hi).min(self.stable_attrs());
        let mut attrs: Vec<(&String, bool)> = self
            .integer_attrs
            .iter()
            .map(|a| (a, true))
            .chain(self.text_attrs.iter().map(|a| (a, false)))
            .collect();
        attrs.shuffle(rng);
        let mut out = Vec::new();
        for (name, is_int) in attrs.into_iter().take(n) {
            out.extend(self.random_constraint(name, is_int, rng));
        }
        out
    }

    /// Equalities on a growing set of one node's attributes until no other
    /// node shares the combination.
    fn pinned_template(&self, rng: &mut ChaCha8Rng) -> Option<Vec<RawConstraint>> {
        let node = &self.nodes[rng.gen_range(0..self.nodes.len())];
        let mut attrs: Vec<&String> = self
            .integer_attrs
            .iter()
            .chain(&self.text_attrs)
            .filter(|a| node.attributes.contains_key(*a))
            .collect();
        attrs.shuffle(rng);
        let mut out = Vec::new();
        let mut candidates: Vec<&Node> = self.nodes.iter().collect();
        for name in attrs {
            let value = node.attributes[name].clone();
            candidates.retain(|n| n.get(name) == Some(&value));
            out.push(RawConstraint::new(name.as_str(), RawOp::Equal, value));
            if candidates.len() == 1 {
                return Some(out);
            }
        }
        None
    }
}

fn category(i: usize) -> AttrValue {
    AttrValue::Text(format!("v{i}"))
}

fn admissible(kind: Kind, count: u64, allow_b: bool) -> bool {
    match kind {
        Kind::Pinned => count == 1,
        Kind::MidSize => (501..=1000).contains(&count),
        Kind::Random => count >= 2 && (allow_b || count > 500),
        Kind::Unconstrained => true,
    }
}

fn build_pool(
    kind: Kind,
    size: usize,
    universe: &Universe,
    cfg: &SyntheticTraceConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Template>, TraceError> {
    let mut seen = BTreeSet::new();
    let mut pool = Vec::new();
    let mut attempts = 0;
    while pool.len() < size && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let constraints = match kind {
            Kind::Pinned => match universe.pinned_template(rng) {
                Some(c) => c,
                None => continue,
            },
            _ => universe.random_template(cfg, rng),
        };
        let Some((set, count)) = universe.count(&constraints) else {
            continue;
        };
        if admissible(kind, count, cfg.allow_group_b) && seen.insert(set.labels()) {
            pool.push(Template { constraints, count });
        }
    }
    if pool.is_empty() {
        return Err(TraceError::InfeasibleConfig(format!(
            "no {kind:?} template found after {MAX_ATTEMPTS} attempts"
        )));
    }
    Ok(pool)
}

/// Assigns a kind to every job so that each kind's share of tasks tracks its
/// target fraction.
fn assign_kinds(sizes: &[usize], mix: &GroupMix, rng: &mut ChaCha8Rng) -> Vec<Kind> {
    let total: usize = sizes.iter().sum();
    let targets = [
        (Kind::Pinned, mix.a),
        (Kind::MidSize, mix.c),
        (Kind::Unconstrained, mix.unconstrained),
    ];
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.shuffle(rng);
    let mut kinds = vec![Kind::Random; sizes.len()];
    let mut next = order.into_iter().peekable();
    for (kind, fraction) in targets {
        let quota = fraction * total as f64;
        let mut filled = 0.0;
        while let Some(&job) = next.peek() {
            let size = sizes[job] as f64;
            // Take the job while it brings the running total closer to the quota.
            if (filled + size - quota).abs() > (filled - quota).abs() {
                break;
            }
            filled += size;
            kinds[job] = kind;
            next.next();
        }
    }
    kinds
}

fn resource(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(1..=100) as f64 / 128.0
}

/// Generates a trace for `cfg`. Identical configs give identical traces.
pub fn generate_synthetic_trace(cfg: &SyntheticTraceConfig) -> Result<SyntheticTrace, TraceError> {
    cfg.validate()?;
    let mix = cfg.group_mix;
    let constrained_possible = cfg.constraints_per_task.1 > 0;
    if mix.a > 0.0 && (cfg.n_attributes == 0 || !constrained_possible) {
        return Err(TraceError::InfeasibleConfig(
            "pinned tasks need attributes and constraints".into(),
        ));
    }
    if mix.c > 0.0 && (cfg.n_nodes < 501 || !constrained_possible) {
        return Err(TraceError::InfeasibleConfig(
            "tasks fitting 501..=1000 nodes need at least 501 nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let universe = Universe::build(cfg, &mut rng);
    if constrained_possible && universe.stable_attrs() == 0 {
        return Err(TraceError::InfeasibleConfig(
            "constraints requested but no constrainable attributes".into(),
        ));
    }

    let sizes: Vec<usize> = (0..cfg.n_jobs)
        .map(|_| rng.gen_range(cfg.tasks_per_job.0..=cfg.tasks_per_job.1))
        .collect();
    let mut kinds = assign_kinds(&sizes, &mix, &mut rng);
    if !constrained_possible {
        kinds.iter_mut().for_each(|k| *k = Kind::Unconstrained);
    }
    let side_pool = (cfg.template_pool / 8).max(1);
    let mut pools: BTreeMap<u8, Vec<Template>> = BTreeMap::new();
    for (tag, kind, size) in [
        (0u8, Kind::Pinned, side_pool),
        (1, Kind::MidSize, side_pool),
        (2, Kind::Random, cfg.template_pool),
    ] {
        if kinds.contains(&kind) {
            pools.insert(tag, build_pool(kind, size, &universe, cfg, &mut rng)?);
        }
    }
    let unconstrained = Template {
        constraints: Vec::new(),
        count: cfg.n_nodes as u64,
    };
    let pick = |kind: Kind, rng: &mut ChaCha8Rng| -> Template {
        let tag = match kind {
            Kind::Pinned => 0,
            Kind::MidSize => 1,
            Kind::Random => 2,
            Kind::Unconstrained => return unconstrained.clone(),
        };
        pools[&tag].choose(rng).expect("pool is non-empty").clone()
    };

    // One job per second after the nodes appear at time 0.
    const JOB_GAP: u64 = 1_000_000;
    let horizon = (cfg.n_jobs as u64 + 1) * JOB_GAP;
    let mut task_events = Vec::new();
    let mut oracle = BTreeMap::new();
    for (j, (&size, &kind)) in sizes.iter().zip(&kinds).enumerate() {
        let job = 1000 + j as u64;
        let submit_at = (j as u64 + 1) * JOB_GAP;
        let template = pick(kind, &mut rng);
        let n_configs = rng.gen_range(1..=3).min(size);
        let configs: Vec<(f64, f64)> = (0..n_configs)
            .map(|_| (resource(&mut rng), resource(&mut rng)))
            .collect();
        let update = (rng.gen_bool(cfg.update_fraction) && kind != Kind::Unconstrained)
            .then(|| pick(kind, &mut rng));
        for index in 0..size {
            let id = TaskId::new(job, index as u32);
            let (cpu, mem) = configs[index % n_configs];
            let spec = |t: &Template| TaskSpec {
                id,
                cpu,
                mem,
                constraints: t.constraints.clone(),
            };
            task_events.push(TraceEvent::new(submit_at, EventPayload::TaskSubmit(spec(&template))));
            let mut last = &template;
            if let Some(u) = &update {
                let at = rng.gen_range(submit_at + 1..horizon);
                task_events.push(TraceEvent::new(at, EventPayload::TaskUpdate(spec(u))));
                last = u;
            }
            if rng.gen_bool(cfg.finish_fraction) {
                // Updates for finished tasks would be stale; finish after the horizon.
                let at = horizon + rng.gen_range(0..JOB_GAP);
                task_events.push(TraceEvent::new(at, EventPayload::TaskFinish(id)));
            }
            oracle.insert(id, last.count);
        }
    }
    task_events.sort_by_key(|e| e.timestamp);

    let mut node_events: Vec<TraceEvent> = universe
        .nodes
        .iter()
        .map(|n| TraceEvent::new(0, EventPayload::NodeAdd(n.clone())))
        .collect();
    if let Some(volatile) = &universe.volatile {
        let mut current = universe.nodes.clone();
        let intervals = horizon.div_ceil(cfg.interval_micros);
        let mut churn = Vec::new();
        for k in 0..intervals {
            for _ in 0..cfg.churn_rate {
                let at = k * cfg.interval_micros + rng.gen_range(0..cfg.interval_micros);
                churn.push((at.max(1), rng.gen_range(0..current.len())));
            }
        }
        churn.sort_by_key(|&(at, _)| at);
        for (at, i) in churn {
            let node = &mut current[i];
            node.attributes
                .insert(volatile.clone(), AttrValue::Integer(rng.gen_range(0..INT_LEVELS)));
            node_events.push(TraceEvent::new(at, EventPayload::NodeUpdate(node.clone())));
        }
    }
    Ok(SyntheticTrace {
        node_events,
        task_events,
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticTraceConfig {
        SyntheticTraceConfig {
            n_nodes: 200,
            n_attributes: 10,
            n_jobs: 120,
            tasks_per_job: (1, 5),
            group_mix: GroupMix {
                a: 0.02,
                c: 0.0,
                unconstrained: 0.3,
            },
            allow_group_b: true,
            template_pool: 40,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn attribute_names() {
        assert_eq!(attribute_name(0), "A");
        assert_eq!(attribute_name(25), "Z");
        assert_eq!(attribute_name(26), "AA");
        assert_eq!(attribute_name(27), "AB");
        assert_eq!(attribute_name(52), "BA");
    }

    #[test]
    fn same_seed_same_trace() {
        let a = generate_synthetic_trace(&small(7)).unwrap();
        let b = generate_synthetic_trace(&small(7)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_trace(&small(8)).unwrap();
        assert_ne!(a.task_events, c.task_events);
    }

    #[test]
    fn pinned_share_tracks_target() {
        let t = generate_synthetic_trace(&small(7)).unwrap();
        let ones = t.oracle.values().filter(|&&c| c == 1).count() as f64;
        let share = ones / t.oracle.len() as f64;
        assert!(share > 0.005 && share < 0.06, "share {share}");
    }

    #[test]
    fn no_constraints_means_every_node_fits() {
        let cfg = SyntheticTraceConfig {
            constraints_per_task: (0, 0),
            group_mix: GroupMix {
                a: 0.0,
                c: 0.0,
                unconstrained: 0.0,
            },
            ..small(3)
        };
        let t = generate_synthetic_trace(&cfg).unwrap();
        assert!(t.oracle.values().all(|&c| c == 200));
    }

    #[test]
    fn infeasible_mixes() {
        let no_attrs = SyntheticTraceConfig {
            n_attributes: 0,
            ..small(1)
        };
        assert!(matches!(
            generate_synthetic_trace(&no_attrs),
            Err(TraceError::InfeasibleConfig(_))
        ));
        let mid_size_on_small_cluster = SyntheticTraceConfig {
            group_mix: GroupMix {
                a: 0.0,
                c: 0.1,
                unconstrained: 0.0,
            },
            ..small(1)
        };
        assert!(matches!(
            generate_synthetic_trace(&mid_size_on_small_cluster),
            Err(TraceError::InfeasibleConfig(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small(1);
        cfg.group_mix.unconstrained = 0.99;
        assert!(matches!(cfg.validate(), Err(TraceError::InvalidConfig(_))));
        let cfg = SyntheticTraceConfig {
            tasks_per_job: (3, 2),
            ..small(1)
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn task_events_are_time_ordered() {
        let t = generate_synthetic_trace(&small(11)).unwrap();
        assert!(t.task_events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        assert!(t.node_events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }
}
