//! Line grammar for the nodes and tasks trace CSV files.
//!
//! ```text
//! nodes: timestamp,event,node_id,attributes
//!        10,ADD,n1,A=i:4;B=s:x
//! tasks: timestamp,event,job_id,task_index,cpu,mem,constraints
//!        10,SUBMIT,42,0,0.25,0.5,E,GE,i:0;D,EQ,e:
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    is_valid_attr_name, is_valid_node_id, AttrValue, EventPayload, Node, RawConstraint, RawOp,
    TaskId, TaskSpec, TraceError, TraceEvent,
};

pub const NODES_HEADER: &str = "timestamp,event,node_id,attributes";
pub const TASKS_HEADER: &str = "timestamp,event,job_id,task_index,cpu,mem,constraints";

fn malformed(msg: impl Into<String>) -> TraceError {
    TraceError::MalformedLine(msg.into())
}

fn parse_timestamp(field: &str) -> Result<u64, TraceError> {
    field
        .parse::<u64>()
        .map_err(|_| malformed(format!("bad timestamp {field:?}")))
}

fn parse_attributes(field: &str) -> Result<BTreeMap<String, AttrValue>, TraceError> {
    let mut attributes = BTreeMap::new();
    if field.is_empty() {
        return Ok(attributes);
    }
    for item in field.split(';') {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| malformed(format!("attribute item {item:?} lacks '='")))?;
        if !is_valid_attr_name(name) {
            return Err(malformed(format!("bad attribute name {name:?}")));
        }
        let value = AttrValue::parse_tagged(value)?;
        if attributes.insert(name.to_string(), value).is_some() {
            return Err(malformed(format!("duplicate attribute {name:?}")));
        }
    }
    Ok(attributes)
}

/// Decodes one data line of a nodes trace.
pub fn parse_node_event(line: &str) -> Result<TraceEvent, TraceError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(malformed(format!(
            "expected 4 fields, found {}",
            fields.len()
        )));
    }
    let timestamp = parse_timestamp(fields[0])?;
    let node_id = fields[2];
    if !is_valid_node_id(node_id) {
        return Err(malformed(format!("bad node id {node_id:?}")));
    }
    let payload = match fields[1] {
        "ADD" | "UPDATE" => {
            let node = Node {
                id: node_id.to_string(),
                attributes: parse_attributes(fields[3])?,
            };
            if fields[1] == "ADD" {
                EventPayload::NodeAdd(node)
            } else {
                EventPayload::NodeUpdate(node)
            }
        }
        "REMOVE" => {
            if !fields[3].is_empty() {
                return Err(malformed("REMOVE carries attributes"));
            }
            EventPayload::NodeRemove(node_id.to_string())
        }
        other => return Err(malformed(format!("unknown node event {other:?}"))),
    };
    Ok(TraceEvent { timestamp, payload })
}

fn parse_fraction(field: &str, what: &str) -> Result<f64, TraceError> {
    let v: f64 = field
        .parse()
        .map_err(|_| malformed(format!("bad {what} {field:?}")))?;
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(TraceError::ValueOutOfRange(format!(
            "{what} {field} outside [0,1]"
        )));
    }
    Ok(v)
}

fn parse_constraints(field: &str) -> Result<Vec<RawConstraint>, TraceError> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|item| {
            let parts: Vec<&str> = item.split(',').collect();
            if parts.len() != 3 {
                return Err(malformed(format!("constraint {item:?} is not a triplet")));
            }
            if !is_valid_attr_name(parts[0]) {
                return Err(malformed(format!("bad attribute name {:?}", parts[0])));
            }
            let op = RawOp::from_code(parts[1])
                .ok_or_else(|| TraceError::UnknownOperator(parts[1].to_string()))?;
            let value = AttrValue::parse_tagged(parts[2])?;
            Ok(RawConstraint::new(parts[0], op, value))
        })
        .collect()
}

/// Decodes one data line of a tasks trace. Constraints keep input order.
pub fn parse_task_event(line: &str) -> Result<TraceEvent, TraceError> {
    let fields: Vec<&str> = line.splitn(7, ',').collect();
    if fields.len() != 7 {
        return Err(malformed(format!(
            "expected 7 fields, found {}",
            fields.len()
        )));
    }
    let timestamp = parse_timestamp(fields[0])?;
    let job = fields[2]
        .parse::<u64>()
        .map_err(|_| malformed(format!("bad job id {:?}", fields[2])))?;
    let index = fields[3]
        .parse::<u32>()
        .map_err(|_| malformed(format!("bad task index {:?}", fields[3])))?;
    let id = TaskId::new(job, index);
    let payload = match fields[1] {
        "SUBMIT" | "UPDATE" => {
            let spec = TaskSpec {
                id,
                cpu: parse_fraction(fields[4], "cpu")?,
                mem: parse_fraction(fields[5], "mem")?,
                constraints: parse_constraints(fields[6])?,
            };
            if fields[1] == "SUBMIT" {
                EventPayload::TaskSubmit(spec)
            } else {
                EventPayload::TaskUpdate(spec)
            }
        }
        "FINISH" => {
            if fields[4..].iter().any(|f| !f.is_empty()) {
                return Err(malformed("FINISH carries resources or constraints"));
            }
            EventPayload::TaskFinish(id)
        }
        other => return Err(malformed(format!("unknown task event {other:?}"))),
    };
    Ok(TraceEvent { timestamp, payload })
}

/// Canonical nodes-trace line for a node event. Panics on task events.
pub fn format_node_event(event: &TraceEvent) -> String {
    let (tag, id, attrs) = match &event.payload {
        EventPayload::NodeAdd(n) => ("ADD", n.id.as_str(), Some(&n.attributes)),
        EventPayload::NodeUpdate(n) => ("UPDATE", n.id.as_str(), Some(&n.attributes)),
        EventPayload::NodeRemove(id) => ("REMOVE", id.as_str(), None),
        _ => panic!("format_node_event called with a task event"),
    };
    let mut line = format!("{},{},{},", event.timestamp, tag, id);
    if let Some(attrs) = attrs {
        for (i, (name, value)) in attrs.iter().enumerate() {
            if i > 0 {
                line.push(';');
            }
            let _ = write!(line, "{name}={value}");
        }
    }
    line
}

/// Canonical tasks-trace line for a task event. Panics on node events.
pub fn format_task_event(event: &TraceEvent) -> String {
    let (tag, spec) = match &event.payload {
        EventPayload::TaskSubmit(s) => ("SUBMIT", s),
        EventPayload::TaskUpdate(s) => ("UPDATE", s),
        EventPayload::TaskFinish(id) => {
            return format!("{},FINISH,{},{},,,", event.timestamp, id.job, id.index);
        }
        _ => panic!("format_task_event called with a node event"),
    };
    let mut line = format!(
        "{},{},{},{},{},{},",
        event.timestamp, tag, spec.id.job, spec.id.index, spec.cpu, spec.mem
    );
    for (i, c) in spec.constraints.iter().enumerate() {
        if i > 0 {
            line.push(';');
        }
        let _ = write!(line, "{},{},{}", c.attribute, c.op.code(), c.value);
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_add_line() {
        let e = parse_node_event("10,ADD,n1,A=i:4;B=s:x").unwrap();
        assert_eq!(e.timestamp, 10);
        let EventPayload::NodeAdd(node) = e.payload else {
            panic!("expected add")
        };
        assert_eq!(node.id, "n1");
        assert_eq!(node.get("A"), Some(&AttrValue::Integer(4)));
        assert_eq!(node.get("B"), Some(&AttrValue::text("x").unwrap()));
    }

    #[test]
    fn attribute_order_does_not_matter() {
        let a = parse_node_event("10,ADD,n1,A=i:4;B=s:x").unwrap();
        let b = parse_node_event("10,ADD,n1,B=s:x;A=i:4").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn node_remove_line() {
        let e = parse_node_event("20,REMOVE,n1,").unwrap();
        assert_eq!(e.timestamp, 20);
        assert_eq!(e.payload, EventPayload::NodeRemove("n1".into()));
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let err = parse_node_event("10,ADD,n1,A=i:4;A=i:5").unwrap_err();
        assert!(matches!(err, TraceError::MalformedLine(_)));
    }

    #[test]
    fn node_line_errors() {
        for bad in [
            "10,ADD,n1",
            "x,ADD,n1,",
            "10,MOVE,n1,",
            "10,ADD,n1,1A=i:3",
            "10,ADD,n1,A=q:3",
            "10,ADD,n1,A=e:3",
            "10,ADD,n1,A=s:",
            "10,ADD,,A=i:1",
            "10,REMOVE,n1,A=i:1",
            "10,ADD,n1,A=i:1,B=i:2",
        ] {
            assert!(parse_node_event(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn task_submit_line() {
        let e = parse_task_event("10,SUBMIT,42,0,0.25,0.50,E,GE,i:0;D,EQ,e:").unwrap();
        let EventPayload::TaskSubmit(spec) = e.payload else {
            panic!("expected submit")
        };
        assert_eq!(spec.id, TaskId::new(42, 0));
        assert_eq!(spec.cpu, 0.25);
        assert_eq!(spec.mem, 0.5);
        assert_eq!(
            spec.constraints,
            vec![
                RawConstraint::new("E", RawOp::GreaterEqual, AttrValue::Integer(0)),
                RawConstraint::new("D", RawOp::Equal, AttrValue::Empty),
            ]
        );
    }

    #[test]
    fn task_finish_line() {
        let e = parse_task_event("11,FINISH,42,0,,,").unwrap();
        assert_eq!(e.payload, EventPayload::TaskFinish(TaskId::new(42, 0)));
    }

    #[test]
    fn cpu_out_of_range() {
        let err = parse_task_event("10,SUBMIT,1,0,1.5,0.1,").unwrap_err();
        assert!(matches!(err, TraceError::ValueOutOfRange(_)));
        let err = parse_task_event("10,SUBMIT,1,0,NaN,0.1,").unwrap_err();
        assert!(matches!(err, TraceError::ValueOutOfRange(_)));
    }

    #[test]
    fn unknown_operator() {
        let err = parse_task_event("10,SUBMIT,1,0,0.1,0.1,A,XX,i:1").unwrap_err();
        assert!(matches!(err, TraceError::UnknownOperator(_)));
    }

    #[test]
    fn canonical_task_line() {
        let e = parse_task_event("10,SUBMIT,42,0,0.25,0.50,E,GE,i:+0;D,EQ,e:").unwrap();
        assert_eq!(
            format_task_event(&e),
            "10,SUBMIT,42,0,0.25,0.5,E,GE,i:0;D,EQ,e:"
        );
    }

    #[test]
    fn canonical_node_line_sorts_attributes() {
        let e = parse_node_event("10,UPDATE,n1,Z=e:;A=i:-3").unwrap();
        assert_eq!(format_node_event(&e), "10,UPDATE,n1,A=i:-3;Z=e:");
    }
}
