//! Trace domain types: nodes and their attributes, raw task constraints,
//! task specifications and the timestamped events that drive a replay.

mod format;
mod reader;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use format::{
    format_node_event, format_task_event, parse_node_event, parse_task_event, NODES_HEADER,
    TASKS_HEADER,
};
pub use reader::{read_all, EventStream};
pub use synth::{generate_synthetic_trace, GroupMix, SyntheticTrace, SyntheticTraceConfig};

/// Errors produced while decoding, reading or generating traces.
#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("value out of range: {0}")]
    ValueOutOfRange(String),
    #[error("unknown operator: {0}")]
    UnknownOperator(String),
    #[error("line {line}: timestamp {found} precedes {previous}")]
    NonMonotonicTimestamp { line: usize, previous: u64, found: u64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TraceError {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceError::MalformedLine(_) => "MalformedLine",
            TraceError::ValueOutOfRange(_) => "ValueOutOfRange",
            TraceError::UnknownOperator(_) => "UnknownOperator",
            TraceError::NonMonotonicTimestamp { .. } => "NonMonotonicTimestamp",
            TraceError::InvalidConfig(_) => "InvalidConfig",
            TraceError::InfeasibleConfig(_) => "InfeasibleConfig",
            TraceError::Io(_) => "IOFailure",
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            TraceError::MalformedLine(m) => TraceError::MalformedLine(format!("line {line}: {m}")),
            TraceError::ValueOutOfRange(m) => {
                TraceError::ValueOutOfRange(format!("line {line}: {m}"))
            }
            TraceError::UnknownOperator(m) => {
                TraceError::UnknownOperator(format!("line {line}: {m}"))
            }
            other => other,
        }
    }
}

/// A node attribute value. `Integer` and `Text` never compare equal, even
/// when the text spells the integer.
///
/// Variant order (`Integer < Text < Empty`) is the canonical sort order used
/// by not-equal arrays and category dictionaries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttrValue {
    Integer(i64),
    Text(String),
    Empty,
}

impl AttrValue {
    /// Builds a text value, rejecting the empty string and the characters the
    /// trace grammar reserves.
    pub fn text(s: impl Into<String>) -> Result<Self, TraceError> {
        let s = s.into();
        if s.is_empty() {
            return Err(TraceError::MalformedLine(
                "empty text value (use the empty tag)".into(),
            ));
        }
        if s.contains(|c| matches!(c, ';' | ',' | '\n' | '\r')) {
            return Err(TraceError::MalformedLine(format!(
                "text value {s:?} contains a reserved character"
            )));
        }
        Ok(AttrValue::Text(s))
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            AttrValue::Integer(i) => Some(*i),
            _ => None,
        }
    }

    /// Parses the `tag:value` form used in traces and canonical labels.
    pub fn parse_tagged(s: &str) -> Result<Self, TraceError> {
        let (tag, rest) = s
            .split_once(':')
            .ok_or_else(|| TraceError::MalformedLine(format!("value {s:?} lacks a tag")))?;
        match tag {
            "i" => rest
                .parse::<i64>()
                .map(AttrValue::Integer)
                .map_err(|_| TraceError::MalformedLine(format!("bad integer {rest:?}"))),
            "s" => AttrValue::text(rest),
            "e" if rest.is_empty() => Ok(AttrValue::Empty),
            "e" => Err(TraceError::MalformedLine(format!(
                "empty tag carries a payload {rest:?}"
            ))),
            _ => Err(TraceError::MalformedLine(format!("unknown value tag {tag:?}"))),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Integer(i) => write!(f, "i:{i}"),
            AttrValue::Text(s) => write!(f, "s:{s}"),
            AttrValue::Empty => f.write_str("e:"),
        }
    }
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_valid_attr_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_valid_node_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(|c| matches!(c, ';' | ',' | '\n' | '\r'))
}

/// A machine and its attribute mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub attributes: BTreeMap<String, AttrValue>,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: AttrValue) -> Self {
        self.attributes.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.attributes.get(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RawOp {
    Equal,
    NotEqual,
    LessThan,
    GreaterEqual,
    /// Strict `>`; rewritten to `GreaterEqual` by normalization.
    GreaterThan,
    /// `<=`; rewritten to `LessThan` by normalization.
    LessEqual,
}

impl RawOp {
    pub fn code(self) -> &'static str {
        match self {
            RawOp::Equal => "EQ",
            RawOp::NotEqual => "NE",
            RawOp::LessThan => "LT",
            RawOp::GreaterEqual => "GE",
            RawOp::GreaterThan => "GT",
            RawOp::LessEqual => "LE",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "EQ" => RawOp::Equal,
            "NE" => RawOp::NotEqual,
            "LT" => RawOp::LessThan,
            "GE" => RawOp::GreaterEqual,
            "GT" => RawOp::GreaterThan,
            "LE" => RawOp::LessEqual,
            _ => return None,
        })
    }
}

/// A single placement predicate as it appears in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawConstraint {
    pub attribute: String,
    pub op: RawOp,
    pub value: AttrValue,
}

impl RawConstraint {
    pub fn new(attribute: impl Into<String>, op: RawOp, value: AttrValue) -> Self {
        RawConstraint {
            attribute: attribute.into(),
            op,
            value,
        }
    }
}

/// Task identity: parent job id plus index within the job.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct TaskId {
    pub job: u64,
    pub index: u32,
}

impl TaskId {
    pub fn new(job: u64, index: u32) -> Self {
        TaskId { job, index }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.job, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: TaskId,
    pub cpu: f64,
    pub mem: f64,
    pub constraints: Vec<RawConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    NodeAdd(Node),
    /// Replaces the node's whole attribute mapping.
    NodeUpdate(Node),
    NodeRemove(String),
    TaskSubmit(TaskSpec),
    TaskUpdate(TaskSpec),
    TaskFinish(TaskId),
}

impl EventPayload {
    pub fn is_node_event(&self) -> bool {
        matches!(
            self,
            EventPayload::NodeAdd(_) | EventPayload::NodeUpdate(_) | EventPayload::NodeRemove(_)
        )
    }
}

/// A payload stamped with microseconds of trace time.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub timestamp: u64,
    pub payload: EventPayload,
}

impl TraceEvent {
    pub fn new(timestamp: u64, payload: EventPayload) -> Self {
        TraceEvent { timestamp, payload }
    }
}
