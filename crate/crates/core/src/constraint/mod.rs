//! Constraint normalization, per-attribute compaction and node evaluation.
//!
//! Evaluation rules shared by raw and compacted constraints:
//!
//! * `Equal(v)` needs the attribute present with exactly `v`; `Equal(Empty)`
//!   needs it present with the empty value.
//! * `NotEqual(v)` holds when the attribute is absent or differs from `v`.
//! * Range operators read the node's *numeric view*: an integer value is
//!   itself, an absent attribute or an empty value reads as `0`, and a text
//!   value has no numeric view and fails.
//! * On an attribute that also carries a range bound, an integer `NotEqual`
//!   is a numeric exclusion and is tested against the numeric view. This is
//!   what lets `{B} >= 0, {B} != 0` collapse to `{B} >= 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::trace::{AttrValue, Node, RawConstraint, RawOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unsatisfiable constraints on attribute {0}")]
    Unsatisfiable(String),
}

impl ConstraintError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintError::TypeMismatch(_) => "TypeMismatch",
            ConstraintError::Unsatisfiable(_) => "Unsatisfiable",
        }
    }
}

/// Integer the range operators compare against, if the value has one.
pub fn numeric_view(value: Option<&AttrValue>) -> Option<i64> {
    match value {
        None | Some(AttrValue::Empty) => Some(0),
        Some(AttrValue::Integer(i)) => Some(*i),
        Some(AttrValue::Text(_)) => None,
    }
}

/// Rewrites strict `>` and `<=` into the canonical `>=` / `<` forms.
pub fn normalize(constraints: &[RawConstraint]) -> Result<Vec<RawConstraint>, ConstraintError> {
    constraints
        .iter()
        .map(|c| {
            let (op, value) = match c.op {
                RawOp::Equal | RawOp::NotEqual => return Ok(c.clone()),
                op => {
                    let v = c.value.as_integer().ok_or_else(|| {
                        ConstraintError::TypeMismatch(format!(
                            "{} {} {} needs an integer value",
                            c.attribute,
                            c.op.code(),
                            c.value
                        ))
                    })?;
                    match op {
                        RawOp::LessThan | RawOp::GreaterEqual => (op, v),
                        // > MAX admits no integer: same set as < MIN.
                        RawOp::GreaterThan => match v.checked_add(1) {
                            Some(w) => (RawOp::GreaterEqual, w),
                            None => (RawOp::LessThan, i64::MIN),
                        },
                        // <= MAX admits every integer: same set as >= MIN.
                        RawOp::LessEqual => match v.checked_add(1) {
                            Some(w) => (RawOp::LessThan, w),
                            None => (RawOp::GreaterEqual, i64::MIN),
                        },
                        RawOp::Equal | RawOp::NotEqual => unreachable!(),
                    }
                }
            };
            Ok(RawConstraint::new(c.attribute.clone(), op, AttrValue::Integer(value)))
        })
        .collect()
}

/// The single operator left on an attribute after compaction.
///
/// Range forms carry an exclusion set holding integers strictly inside the
/// range (tested against the numeric view) and possibly `Empty` (tested
/// against the stored value).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintForm {
    Equal(AttrValue),
    NotEqualArray(BTreeSet<AttrValue>),
    GreaterEqual {
        lo: i64,
        excluded: BTreeSet<AttrValue>,
    },
    LessThan {
        hi: i64,
        excluded: BTreeSet<AttrValue>,
    },
    /// `lo <= x < hi`
    Between {
        lo: i64,
        hi: i64,
        excluded: BTreeSet<AttrValue>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompactedConstraint {
    pub attribute: String,
    pub form: ConstraintForm,
}

impl CompactedConstraint {
    pub fn new(attribute: impl Into<String>, form: ConstraintForm) -> Self {
        CompactedConstraint {
            attribute: attribute.into(),
            form,
        }
    }

    /// Whether `value` (the node's value for this attribute, `None` when the
    /// attribute is absent) satisfies the constraint.
    pub fn admits(&self, value: Option<&AttrValue>) -> bool {
        let (lo, hi, excluded) = match &self.form {
            ConstraintForm::Equal(v) => return value == Some(v),
            ConstraintForm::NotEqualArray(set) => return value.is_none_or(|v| !set.contains(v)),
            ConstraintForm::GreaterEqual { lo, excluded } => (Some(*lo), None, excluded),
            ConstraintForm::LessThan { hi, excluded } => (None, Some(*hi), excluded),
            ConstraintForm::Between { lo, hi, excluded } => (Some(*lo), Some(*hi), excluded),
        };
        if value == Some(&AttrValue::Empty) && excluded.contains(&AttrValue::Empty) {
            return false;
        }
        let Some(x) = numeric_view(value) else {
            return false;
        };
        lo.is_none_or(|lo| x >= lo)
            && hi.is_none_or(|hi| x < hi)
            && !excluded.contains(&AttrValue::Integer(x))
    }

    /// Raw constraints with the same satisfying set.
    pub fn to_raw(&self) -> Vec<RawConstraint> {
        let attr = &self.attribute;
        let mut out = Vec::new();
        let excluded = match &self.form {
            ConstraintForm::Equal(v) => {
                out.push(RawConstraint::new(attr.clone(), RawOp::Equal, v.clone()));
                return out;
            }
            ConstraintForm::NotEqualArray(set) => {
                for v in set {
                    out.push(RawConstraint::new(attr.clone(), RawOp::NotEqual, v.clone()));
                }
                return out;
            }
            ConstraintForm::GreaterEqual { lo, excluded } => {
                out.push(RawConstraint::new(attr.clone(), RawOp::GreaterEqual, AttrValue::Integer(*lo)));
                excluded
            }
            ConstraintForm::LessThan { hi, excluded } => {
                out.push(RawConstraint::new(attr.clone(), RawOp::LessThan, AttrValue::Integer(*hi)));
                excluded
            }
            ConstraintForm::Between { lo, hi, excluded } => {
                out.push(RawConstraint::new(attr.clone(), RawOp::GreaterEqual, AttrValue::Integer(*lo)));
                out.push(RawConstraint::new(attr.clone(), RawOp::LessThan, AttrValue::Integer(*hi)));
                excluded
            }
        };
        for v in excluded {
            out.push(RawConstraint::new(attr.clone(), RawOp::NotEqual, v.clone()));
        }
        out
    }
}

/// One compacted constraint per attribute.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompactedConstraintSet {
    entries: BTreeMap<String, CompactedConstraint>,
}

impl CompactedConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, attribute: &str) -> Option<&CompactedConstraint> {
        self.entries.get(attribute)
    }

    /// Entries in attribute-name order.
    pub fn iter(&self) -> impl Iterator<Item = &CompactedConstraint> {
        self.entries.values()
    }

    pub fn insert(&mut self, c: CompactedConstraint) {
        self.entries.insert(c.attribute.clone(), c);
    }

    pub fn labels(&self) -> Vec<String> {
        self.iter().map(canonical_label).collect()
    }
}

/// Whether a raw constraint admits `value`, given whether its attribute also
/// carries a range bound.
fn raw_admits(c: &RawConstraint, value: Option<&AttrValue>, ranged: bool) -> bool {
    match c.op {
        RawOp::Equal => value == Some(&c.value),
        RawOp::NotEqual => match (&c.value, ranged) {
            (AttrValue::Integer(v), true) => numeric_view(value) != Some(*v),
            _ => value != Some(&c.value),
        },
        RawOp::LessThan | RawOp::LessEqual | RawOp::GreaterEqual | RawOp::GreaterThan => {
            let (Some(x), Some(k)) = (numeric_view(value), c.value.as_integer()) else {
                return false;
            };
            match c.op {
                RawOp::LessThan => x < k,
                RawOp::LessEqual => x <= k,
                RawOp::GreaterEqual => x >= k,
                _ => x > k,
            }
        }
    }
}

fn compact_attribute(
    attribute: &str,
    group: &[&RawConstraint],
) -> Result<CompactedConstraint, ConstraintError> {
    let unsat = || ConstraintError::Unsatisfiable(attribute.to_string());
    let ranged = group
        .iter()
        .any(|c| matches!(c.op, RawOp::LessThan | RawOp::GreaterEqual));

    let mut equal: Option<&AttrValue> = None;
    for c in group.iter().filter(|c| c.op == RawOp::Equal) {
        match equal {
            Some(v) if *v != c.value => return Err(unsat()),
            _ => equal = Some(&c.value),
        }
    }
    if let Some(v) = equal {
        if group.iter().all(|c| raw_admits(c, Some(v), ranged)) {
            return Ok(CompactedConstraint::new(attribute, ConstraintForm::Equal(v.clone())));
        }
        return Err(unsat());
    }

    if !ranged {
        let set: BTreeSet<AttrValue> = group.iter().map(|c| c.value.clone()).collect();
        return Ok(CompactedConstraint::new(attribute, ConstraintForm::NotEqualArray(set)));
    }

    let mut lo: Option<i128> = None;
    let mut hi: Option<i128> = None;
    let mut excluded_ints = BTreeSet::new();
    let mut empty_excluded = false;
    for c in group {
        match (c.op, &c.value) {
            (RawOp::GreaterEqual, AttrValue::Integer(v)) => {
                lo = Some(lo.map_or(*v as i128, |l| l.max(*v as i128)))
            }
            (RawOp::LessThan, AttrValue::Integer(v)) => {
                hi = Some(hi.map_or(*v as i128, |h| h.min(*v as i128)))
            }
            (RawOp::NotEqual, AttrValue::Integer(v)) => {
                excluded_ints.insert(*v as i128);
            }
            (RawOp::NotEqual, AttrValue::Empty) => empty_excluded = true,
            // Text never passes a range bound, so excluding a text is moot.
            (RawOp::NotEqual, AttrValue::Text(_)) => {}
            _ => {
                return Err(ConstraintError::TypeMismatch(format!(
                    "{} {} {} (normalize first)",
                    c.attribute,
                    c.op.code(),
                    c.value
                )))
            }
        }
    }
    let inside = |x: i128, lo: Option<i128>, hi: Option<i128>| {
        lo.is_none_or(|l| x >= l) && hi.is_none_or(|h| x < h)
    };
    excluded_ints.retain(|x| inside(*x, lo, hi));
    if let Some(l) = lo.as_mut() {
        while excluded_ints.remove(l) {
            *l += 1;
        }
    }
    if let Some(h) = hi.as_mut() {
        while excluded_ints.remove(&(*h - 1)) {
            *h -= 1;
        }
    }
    let empty = match (lo, hi) {
        (Some(l), Some(h)) => l >= h,
        (Some(l), None) => l > i64::MAX as i128,
        (None, Some(h)) => h <= i64::MIN as i128,
        (None, None) => unreachable!("ranged group without a bound"),
    };
    if empty {
        return Err(unsat());
    }

    let mut excluded: BTreeSet<AttrValue> = excluded_ints
        .into_iter()
        .map(|x| AttrValue::Integer(x as i64))
        .collect();
    if empty_excluded && inside(0, lo, hi) && !excluded.contains(&AttrValue::Integer(0)) {
        excluded.insert(AttrValue::Empty);
    }
    let form = match (lo, hi) {
        (Some(lo), Some(hi)) => ConstraintForm::Between {
            lo: lo as i64,
            hi: hi as i64,
            excluded,
        },
        (Some(lo), None) => ConstraintForm::GreaterEqual {
            lo: lo as i64,
            excluded,
        },
        (None, Some(hi)) => ConstraintForm::LessThan {
            hi: hi as i64,
            excluded,
        },
        (None, None) => unreachable!(),
    };
    Ok(CompactedConstraint::new(attribute, form))
}

/// Collapses a task's constraints to one canonical operator per attribute.
///
/// Input is normalized first, so strict and `<=` forms are accepted.
pub fn compact(constraints: &[RawConstraint]) -> Result<CompactedConstraintSet, ConstraintError> {
    let normalized = normalize(constraints)?;
    let mut groups: BTreeMap<&str, Vec<&RawConstraint>> = BTreeMap::new();
    for c in &normalized {
        groups.entry(c.attribute.as_str()).or_default().push(c);
    }
    let mut set = CompactedConstraintSet::new();
    for (attribute, group) in groups {
        set.insert(compact_attribute(attribute, &group)?);
    }
    Ok(set)
}

pub fn satisfies(node: &Node, c: &CompactedConstraint) -> bool {
    c.admits(node.get(&c.attribute))
}

/// Conjunction over all entries; the empty set matches every node.
pub fn matches(node: &Node, set: &CompactedConstraintSet) -> bool {
    set.iter().all(|c| satisfies(node, c))
}

fn join_values<'a>(out: &mut String, values: impl IntoIterator<Item = &'a AttrValue>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
}

/// Text rendering used as the one-hot category of a constraint:
/// `E|GE|i:0`, `AK|NEQ|s:qe,s:qg`, `C|BW|3:5`, `D|EQ|e:`, with an optional
/// `!v,...` exclusion suffix on range forms.
pub fn canonical_label(c: &CompactedConstraint) -> String {
    let mut out = format!("{}|", c.attribute);
    let excluded = match &c.form {
        ConstraintForm::Equal(v) => {
            let _ = write!(out, "EQ|{v}");
            return out;
        }
        ConstraintForm::NotEqualArray(set) => {
            out.push_str("NEQ|");
            join_values(&mut out, set);
            return out;
        }
        ConstraintForm::GreaterEqual { lo, excluded } => {
            let _ = write!(out, "GE|i:{lo}");
            excluded
        }
        ConstraintForm::LessThan { hi, excluded } => {
            let _ = write!(out, "LT|i:{hi}");
            excluded
        }
        ConstraintForm::Between { lo, hi, excluded } => {
            let _ = write!(out, "BW|{lo}:{hi}");
            excluded
        }
    };
    if !excluded.is_empty() {
        out.push('!');
        join_values(&mut out, excluded);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> AttrValue {
        AttrValue::Integer(i)
    }
    fn txt(s: &str) -> AttrValue {
        AttrValue::text(s).unwrap()
    }
    fn rc(a: &str, op: RawOp, v: AttrValue) -> RawConstraint {
        RawConstraint::new(a, op, v)
    }
    fn only(set: CompactedConstraintSet) -> CompactedConstraint {
        assert_eq!(set.len(), 1);
        set.iter().next().unwrap().clone()
    }

    #[test]
    fn normalize_strict_forms() {
        let out = normalize(&[rc("A", RawOp::GreaterThan, int(3))]).unwrap();
        assert_eq!(out, vec![rc("A", RawOp::GreaterEqual, int(4))]);
        let out = normalize(&[rc("A", RawOp::GreaterEqual, int(0))]).unwrap();
        assert_eq!(out, vec![rc("A", RawOp::GreaterEqual, int(0))]);
        let out = normalize(&[rc("A", RawOp::LessEqual, int(7))]).unwrap();
        assert_eq!(out, vec![rc("A", RawOp::LessThan, int(8))]);
    }

    #[test]
    fn normalize_rejects_text_ranges() {
        let err = normalize(&[rc("N", RawOp::LessThan, txt("ho"))]).unwrap_err();
        assert!(matches!(err, ConstraintError::TypeMismatch(_)));
        let err = normalize(&[rc("N", RawOp::GreaterThan, AttrValue::Empty)]).unwrap_err();
        assert!(matches!(err, ConstraintError::TypeMismatch(_)));
    }

    #[test]
    fn normalize_overflow_edges() {
        let out = normalize(&[rc("A", RawOp::GreaterThan, int(i64::MAX))]).unwrap();
        assert_eq!(out, vec![rc("A", RawOp::LessThan, int(i64::MIN))]);
        assert!(compact(&out).is_err());
        let out = normalize(&[rc("A", RawOp::LessEqual, int(i64::MAX))]).unwrap();
        assert_eq!(out, vec![rc("A", RawOp::GreaterEqual, int(i64::MIN))]);
    }

    #[test]
    fn not_equals_merge_into_array() {
        let c = only(
            compact(&[
                rc("A", RawOp::NotEqual, txt("x")),
                rc("A", RawOp::NotEqual, txt("y")),
                rc("A", RawOp::NotEqual, txt("z")),
            ])
            .unwrap(),
        );
        let set = [txt("x"), txt("y"), txt("z")].into_iter().collect();
        assert_eq!(c.form, ConstraintForm::NotEqualArray(set));
    }

    #[test]
    fn edge_exclusion_tightens_bound() {
        let c = only(
            compact(&[
                rc("B", RawOp::GreaterEqual, int(0)),
                rc("B", RawOp::NotEqual, int(0)),
            ])
            .unwrap(),
        );
        assert_eq!(
            c.form,
            ConstraintForm::GreaterEqual {
                lo: 1,
                excluded: BTreeSet::new()
            }
        );
    }

    #[test]
    fn bounds_merge_into_between() {
        let c = only(
            compact(&[
                rc("C", RawOp::GreaterEqual, int(3)),
                rc("C", RawOp::LessThan, int(5)),
            ])
            .unwrap(),
        );
        assert_eq!(
            c.form,
            ConstraintForm::Between {
                lo: 3,
                hi: 5,
                excluded: BTreeSet::new()
            }
        );
    }

    #[test]
    fn equal_dominates_not_equal() {
        let c = only(
            compact(&[
                rc("D", RawOp::Equal, txt("x")),
                rc("D", RawOp::NotEqual, txt("y")),
                rc("D", RawOp::NotEqual, txt("z")),
            ])
            .unwrap(),
        );
        assert_eq!(c.form, ConstraintForm::Equal(txt("x")));
    }

    #[test]
    fn unsatisfiable_cases() {
        let cases = [
            vec![rc("D", RawOp::Equal, txt("x")), rc("D", RawOp::NotEqual, txt("x"))],
            vec![rc("D", RawOp::Equal, txt("x")), rc("D", RawOp::Equal, txt("y"))],
            vec![rc("D", RawOp::Equal, int(9)), rc("D", RawOp::LessThan, int(5))],
            vec![rc("D", RawOp::Equal, txt("x")), rc("D", RawOp::GreaterEqual, int(0))],
            vec![rc("D", RawOp::GreaterEqual, int(5)), rc("D", RawOp::LessThan, int(5))],
            vec![
                rc("D", RawOp::GreaterEqual, int(3)),
                rc("D", RawOp::LessThan, int(5)),
                rc("D", RawOp::NotEqual, int(3)),
                rc("D", RawOp::NotEqual, int(4)),
            ],
        ];
        for case in cases {
            assert_eq!(
                compact(&case).unwrap_err(),
                ConstraintError::Unsatisfiable("D".into()),
                "{case:?}"
            );
        }
    }

    #[test]
    fn greater_and_less_keep_tightest() {
        let c = only(
            compact(&[
                rc("A", RawOp::GreaterEqual, int(1)),
                rc("A", RawOp::GreaterEqual, int(4)),
                rc("A", RawOp::GreaterEqual, int(2)),
            ])
            .unwrap(),
        );
        assert_eq!(canonical_label(&c), "A|GE|i:4");
        let c = only(
            compact(&[
                rc("A", RawOp::LessThan, int(1)),
                rc("A", RawOp::LessThan, int(0)),
            ])
            .unwrap(),
        );
        assert_eq!(canonical_label(&c), "A|LT|i:0");
    }

    #[test]
    fn interior_exclusion_kept() {
        let c = only(
            compact(&[
                rc("A", RawOp::GreaterEqual, int(0)),
                rc("A", RawOp::NotEqual, int(5)),
                rc("A", RawOp::NotEqual, int(-3)),
                rc("A", RawOp::NotEqual, txt("q")),
            ])
            .unwrap(),
        );
        assert_eq!(canonical_label(&c), "A|GE|i:0!i:5");
        let n = |v: Option<AttrValue>| {
            let node = Node::new("n");
            match v {
                Some(v) => node.with("A", v),
                None => node,
            }
        };
        assert!(satisfies(&n(Some(int(4))), &c));
        assert!(!satisfies(&n(Some(int(5))), &c));
        assert!(satisfies(&n(None), &c));
        assert!(!satisfies(&n(Some(txt("q"))), &c));
    }

    #[test]
    fn empty_exclusion_in_range() {
        let c = only(
            compact(&[
                rc("A", RawOp::LessThan, int(3)),
                rc("A", RawOp::NotEqual, AttrValue::Empty),
            ])
            .unwrap(),
        );
        assert_eq!(canonical_label(&c), "A|LT|i:3!e:");
        assert!(!c.admits(Some(&AttrValue::Empty)));
        assert!(c.admits(None));
        assert!(c.admits(Some(&int(0))));
        // Empty exclusion outside the range is dropped.
        let c = only(
            compact(&[
                rc("A", RawOp::GreaterEqual, int(3)),
                rc("A", RawOp::NotEqual, AttrValue::Empty),
            ])
            .unwrap(),
        );
        assert_eq!(canonical_label(&c), "A|GE|i:3");
    }

    #[test]
    fn satisfies_examples() {
        let ge3 = CompactedConstraint::new(
            "A",
            ConstraintForm::GreaterEqual {
                lo: 3,
                excluded: BTreeSet::new(),
            },
        );
        assert!(satisfies(&Node::new("n").with("A", int(4)), &ge3));

        let neq = CompactedConstraint::new(
            "A",
            ConstraintForm::NotEqualArray([txt("x")].into_iter().collect()),
        );
        assert!(satisfies(&Node::new("n"), &neq));

        let ge1 = CompactedConstraint::new(
            "A",
            ConstraintForm::GreaterEqual {
                lo: 1,
                excluded: BTreeSet::new(),
            },
        );
        let lt1 = CompactedConstraint::new(
            "A",
            ConstraintForm::LessThan {
                hi: 1,
                excluded: BTreeSet::new(),
            },
        );
        assert!(!satisfies(&Node::new("n"), &ge1));
        assert!(satisfies(&Node::new("n"), &lt1));

        let bw = CompactedConstraint::new(
            "A",
            ConstraintForm::Between {
                lo: 3,
                hi: 5,
                excluded: BTreeSet::new(),
            },
        );
        assert!(!satisfies(&Node::new("n").with("A", txt("4")), &bw));
    }

    #[test]
    fn matches_examples() {
        let any = Node::new("n").with("Q", int(1));
        assert!(matches(&any, &CompactedConstraintSet::new()));

        let set = compact(&[
            rc("E", RawOp::GreaterEqual, int(0)),
            rc("D", RawOp::Equal, AttrValue::Empty),
        ])
        .unwrap();
        let with_d = Node::new("n").with("E", int(2)).with("D", AttrValue::Empty);
        assert!(matches(&with_d, &set));
        let without_d = Node::new("n").with("E", int(2));
        assert!(!matches(&without_d, &set));
    }

    #[test]
    fn labels() {
        let ge = CompactedConstraint::new(
            "E",
            ConstraintForm::GreaterEqual {
                lo: 0,
                excluded: BTreeSet::new(),
            },
        );
        assert_eq!(canonical_label(&ge), "E|GE|i:0");
        let neq = CompactedConstraint::new(
            "AK",
            ConstraintForm::NotEqualArray([txt("qh"), txt("qe"), txt("qg")].into_iter().collect()),
        );
        assert_eq!(canonical_label(&neq), "AK|NEQ|s:qe,s:qg,s:qh");
        let bw = CompactedConstraint::new(
            "W",
            ConstraintForm::Between {
                lo: 0,
                hi: 3,
                excluded: BTreeSet::new(),
            },
        );
        assert_eq!(canonical_label(&bw), "W|BW|0:3");
        let eq = CompactedConstraint::new("D", ConstraintForm::Equal(AttrValue::Empty));
        assert_eq!(canonical_label(&eq), "D|EQ|e:");
    }

    #[test]
    fn to_raw_recompacts_to_itself() {
        let raws = [
            rc("A", RawOp::GreaterEqual, int(0)),
            rc("A", RawOp::LessThan, int(10)),
            rc("A", RawOp::NotEqual, int(5)),
            rc("A", RawOp::NotEqual, AttrValue::Empty),
            rc("B", RawOp::NotEqual, txt("x")),
        ];
        let set = compact(&raws).unwrap();
        let back: Vec<RawConstraint> = set.iter().flat_map(|c| c.to_raw()).collect();
        assert_eq!(compact(&back).unwrap(), set);
    }
}
