//! Cluster state replay: keeps, for every live task, the set of nodes able to
//! host it and updates those sets incrementally as the trace unfolds.

mod bitset;
mod index;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bitset::Bitset;
pub use stats::{emit_interval_stats, IntervalSampler, IntervalStats, DEFAULT_INTERVAL_MICROS};

use crate::constraint::{compact, matches, CompactedConstraintSet};
use crate::trace::{EventPayload, Node, TaskId, TaskSpec, TraceEvent};
use index::NodeIndex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("event at {found} precedes clock {clock}")]
    StaleEvent { clock: u64, found: u64 },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("node {0} already present")]
    DuplicateNode(String),
    #[error("task {0} already live")]
    DuplicateTask(TaskId),
    #[error("invalid suitable-node count {0}")]
    InvalidCount(u64),
}

impl MatchError {
    pub fn kind(&self) -> &'static str {
        match self {
            MatchError::StaleEvent { .. } => "StaleEvent",
            MatchError::UnknownNode(_) => "UnknownNode",
            MatchError::UnknownTask(_) => "UnknownTask",
            MatchError::DuplicateNode(_) => "DuplicateNode",
            MatchError::DuplicateTask(_) => "DuplicateTask",
            MatchError::InvalidCount(_) => "InvalidCount",
        }
    }
}

/// Allocation-difficulty group `A`..=`Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupLabel(u8);

impl GroupLabel {
    pub fn from_letter(c: char) -> Option<Self> {
        c.is_ascii_uppercase().then_some(GroupLabel(c as u8))
    }

    pub fn letter(self) -> char {
        self.0 as char
    }

    /// Position in the alphabet, `A` = 0.
    pub fn index(self) -> usize {
        (self.0 - b'A') as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < 26).then(|| GroupLabel(b'A' + i as u8))
    }

    pub fn all() -> impl Iterator<Item = GroupLabel> {
        (b'A'..=b'Z').map(GroupLabel)
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for GroupLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => GroupLabel::from_letter(c).ok_or_else(|| format!("bad group {s:?}")),
            _ => Err(format!("bad group {s:?}")),
        }
    }
}

impl Serialize for GroupLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps a suitable-node count to its group: 1 is `A`, more than 12,000 is
/// `Z`, everything else falls into 500-wide bands starting at `B`.
pub fn classify_group(count: u64) -> Result<GroupLabel, MatchError> {
    match count {
        0 => Err(MatchError::InvalidCount(0)),
        1 => Ok(GroupLabel(b'A')),
        c if c > 12_000 => Ok(GroupLabel(b'Z')),
        c => Ok(GroupLabel(((c - 1) / 500 + 66) as u8)),
    }
}

/// Nodes for which every entry of `set` holds.
pub fn brute_force_count<'a>(
    nodes: impl IntoIterator<Item = &'a Node>,
    set: &CompactedConstraintSet,
) -> usize {
    nodes.into_iter().filter(|n| matches(n, set)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Anomalous events are counted and skipped.
    #[default]
    Lenient,
    /// Anomalous events abort the replay.
    Strict,
}

/// Counters for events the replay skipped or tasks it could not place.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stale_events: u64,
    pub unknown_nodes: u64,
    pub unknown_tasks: u64,
    pub duplicate_nodes: u64,
    pub duplicate_tasks: u64,
    /// Tasks dropped because their constraints could not be compacted.
    pub unsatisfiable_tasks: u64,
    /// Events the trace reader rejected (decode errors, timestamp regressions).
    pub rejected_lines: u64,
}

impl Diagnostics {
    fn record(&mut self, e: &MatchError) {
        match e {
            MatchError::StaleEvent { .. } => self.stale_events += 1,
            MatchError::UnknownNode(_) => self.unknown_nodes += 1,
            MatchError::UnknownTask(_) => self.unknown_tasks += 1,
            MatchError::DuplicateNode(_) => self.duplicate_nodes += 1,
            MatchError::DuplicateTask(_) => self.duplicate_tasks += 1,
            MatchError::InvalidCount(_) => {}
        }
    }

    pub fn total_warnings(&self) -> u64 {
        self.stale_events
            + self.unknown_nodes
            + self.unknown_tasks
            + self.duplicate_nodes
            + self.duplicate_tasks
            + self.unsatisfiable_tasks
            + self.rejected_lines
    }
}

#[derive(Debug, Clone)]
struct LiveTask {
    spec: TaskSpec,
    constraints: CompactedConstraintSet,
    members: Bitset,
    count: usize,
}

impl LiveTask {
    fn constrained(&self) -> bool {
        !self.spec.constraints.is_empty()
    }
}

/// One live constrained task as it feeds the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub spec: TaskSpec,
    pub constraints: CompactedConstraintSet,
    pub count: u64,
    pub group: GroupLabel,
}

/// Nodes, live tasks and their suitable-node sets at the current trace time.
///
/// Node additions re-test every live task against the new node only, node
/// updates re-test just the tasks constraining an attribute that changed,
/// and task events resolve the task's node set through an attribute index.
#[derive(Debug, Clone, Default)]
pub struct ClusterState {
    mode: Mode,
    slots: Vec<Option<Node>>,
    slot_of: HashMap<String, usize>,
    free_slots: Vec<usize>,
    index: NodeIndex,
    tasks: BTreeMap<TaskId, LiveTask>,
    /// Live tasks constraining each attribute.
    by_attr: HashMap<String, BTreeSet<TaskId>>,
    dropped: HashSet<TaskId>,
    clock: u64,
    diagnostics: Diagnostics,
    match_evaluations: u64,
}

impl ClusterState {
    pub fn new(mode: Mode) -> Self {
        ClusterState {
            mode,
            ..Default::default()
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn diagnostics_mut(&mut self) -> &mut Diagnostics {
        &mut self.diagnostics
    }

    /// Node-against-constraint-set evaluations performed so far.
    pub fn match_evaluations(&self) -> u64 {
        self.match_evaluations
    }

    pub fn node_count(&self) -> usize {
        self.slot_of.len()
    }

    pub fn live_task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.slots.iter().flatten()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.slot_of.get(id).and_then(|&s| self.slots[s].as_ref())
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.tasks.keys().copied()
    }

    pub fn task_constraints(&self, id: TaskId) -> Option<&CompactedConstraintSet> {
        self.tasks.get(&id).map(|t| &t.constraints)
    }

    /// Cached suitable-node count of a live task.
    pub fn task_count(&self, id: TaskId) -> Option<usize> {
        self.tasks.get(&id).map(|t| t.count)
    }

    /// Ids of the nodes in a live task's membership set, sorted.
    pub fn task_members(&self, id: TaskId) -> Option<Vec<&str>> {
        let task = self.tasks.get(&id)?;
        let mut ids: Vec<&str> = task
            .members
            .iter()
            .map(|s| self.slots[s].as_ref().expect("member slot is occupied").id.as_str())
            .collect();
        ids.sort_unstable();
        Some(ids)
    }

    /// Live tasks that currently fit no node.
    pub fn orphaned(&self) -> Vec<TaskId> {
        self.tasks
            .iter()
            .filter(|(_, t)| t.count == 0)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Applies one event. In lenient mode anomalies are counted in
    /// [`Diagnostics`] and `Ok` is returned; in strict mode they are errors.
    pub fn apply_event(&mut self, event: &TraceEvent) -> Result<(), MatchError> {
        match self.apply_inner(event) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.diagnostics.record(&e);
                match self.mode {
                    Mode::Lenient => Ok(()),
                    Mode::Strict => Err(e),
                }
            }
        }
    }

    fn apply_inner(&mut self, event: &TraceEvent) -> Result<(), MatchError> {
        if event.timestamp < self.clock {
            return Err(MatchError::StaleEvent {
                clock: self.clock,
                found: event.timestamp,
            });
        }
        self.clock = event.timestamp;
        match &event.payload {
            EventPayload::NodeAdd(node) => self.add_node(node),
            EventPayload::NodeUpdate(node) => self.update_node(node),
            EventPayload::NodeRemove(id) => self.remove_node(id),
            EventPayload::TaskSubmit(spec) => {
                if self.tasks.contains_key(&spec.id) {
                    return Err(MatchError::DuplicateTask(spec.id));
                }
                self.dropped.remove(&spec.id);
                self.place_task(spec);
                Ok(())
            }
            EventPayload::TaskUpdate(spec) => {
                if !self.drop_task(spec.id) && !self.dropped.remove(&spec.id) {
                    return Err(MatchError::UnknownTask(spec.id));
                }
                self.place_task(spec);
                Ok(())
            }
            EventPayload::TaskFinish(id) => {
                if !self.drop_task(*id) && !self.dropped.remove(id) {
                    return Err(MatchError::UnknownTask(*id));
                }
                Ok(())
            }
        }
    }

    fn drop_task(&mut self, id: TaskId) -> bool {
        let Some(task) = self.tasks.remove(&id) else {
            return false;
        };
        for c in task.constraints.iter() {
            if let Some(ids) = self.by_attr.get_mut(&c.attribute) {
                ids.remove(&id);
                if ids.is_empty() {
                    self.by_attr.remove(&c.attribute);
                }
            }
        }
        true
    }

    fn place_task(&mut self, spec: &TaskSpec) {
        match compact(&spec.constraints) {
            Ok(constraints) => {
                let members = self.index.matching(&constraints);
                let count = members.count();
                for c in constraints.iter() {
                    self.by_attr.entry(c.attribute.clone()).or_default().insert(spec.id);
                }
                self.tasks.insert(
                    spec.id,
                    LiveTask {
                        spec: spec.clone(),
                        constraints,
                        members,
                        count,
                    },
                );
            }
            Err(_) => {
                self.diagnostics.unsatisfiable_tasks += 1;
                self.dropped.insert(spec.id);
            }
        }
    }

    fn add_node(&mut self, node: &Node) -> Result<(), MatchError> {
        if self.slot_of.contains_key(&node.id) {
            return Err(MatchError::DuplicateNode(node.id.clone()));
        }
        let slot = match self.free_slots.pop() {
            Some(s) => s,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        self.slot_of.insert(node.id.clone(), slot);
        self.index.add(slot, node);
        for task in self.tasks.values_mut() {
            self.match_evaluations += 1;
            if matches(node, &task.constraints) {
                task.members.insert(slot);
                task.count += 1;
            }
        }
        self.slots[slot] = Some(node.clone());
        Ok(())
    }

    fn update_node(&mut self, node: &Node) -> Result<(), MatchError> {
        let slot = *self
            .slot_of
            .get(&node.id)
            .ok_or_else(|| MatchError::UnknownNode(node.id.clone()))?;
        let old = self.slots[slot].take().expect("indexed slot is occupied");
        self.index.remove(slot, &old);
        self.index.add(slot, node);
        // Tasks constraining only unchanged attributes keep their verdict.
        let mut affected = Vec::new();
        let changed = old
            .attributes
            .iter()
            .filter(|(k, v)| node.attributes.get(*k) != Some(*v))
            .chain(node.attributes.iter().filter(|(k, _)| !old.attributes.contains_key(*k)));
        for (name, _) in changed {
            if let Some(ids) = self.by_attr.get(name) {
                affected.extend(ids.iter().copied());
            }
        }
        affected.sort_unstable();
        affected.dedup();
        for id in affected {
            let task = self.tasks.get_mut(&id).expect("indexed task is live");
            self.match_evaluations += 1;
            if matches(node, &task.constraints) {
                if task.members.insert(slot) {
                    task.count += 1;
                }
            } else if task.members.remove(slot) {
                task.count -= 1;
            }
        }
        self.slots[slot] = Some(node.clone());
        Ok(())
    }

    fn remove_node(&mut self, id: &str) -> Result<(), MatchError> {
        let slot = self
            .slot_of
            .remove(id)
            .ok_or_else(|| MatchError::UnknownNode(id.to_string()))?;
        let old = self.slots[slot].take().expect("indexed slot is occupied");
        self.index.remove(slot, &old);
        for task in self.tasks.values_mut() {
            if task.members.remove(slot) {
                task.count -= 1;
            }
        }
        self.free_slots.push(slot);
        Ok(())
    }

    /// Interval statistics of the current state, stamped with `start`.
    pub fn stats_at(&self, start: u64) -> IntervalStats {
        let mut stats = IntervalStats {
            interval_start: start,
            live_tasks: self.tasks.len() as u64,
            ..Default::default()
        };
        for task in self.tasks.values() {
            if task.count == 0 {
                stats.orphaned += 1;
            } else if task.constrained() {
                stats.constrained_tasks += 1;
                let g = classify_group(task.count as u64).expect("count is positive");
                stats.histogram[g.index()] += 1;
            }
        }
        stats
    }

    /// One row per live constrained task that fits at least one node, in
    /// task-id order, using each task's latest constraints.
    pub fn snapshot_dataset_rows(&self) -> Vec<SnapshotRow> {
        self.tasks
            .values()
            .filter(|t| t.constrained() && t.count > 0)
            .map(|t| SnapshotRow {
                spec: t.spec.clone(),
                constraints: t.constraints.clone(),
                count: t.count as u64,
                group: classify_group(t.count as u64).expect("count is positive"),
            })
            .collect()
    }
}
