//! Inverted index from attribute values to node slots. Task submissions
//! resolve their suitable-node set from here with bitset algebra instead of
//! scanning every node.

use std::collections::{BTreeMap, HashMap};

use super::bitset::Bitset;
use crate::constraint::{CompactedConstraint, CompactedConstraintSet, ConstraintForm};
use crate::trace::{AttrValue, Node};

#[derive(Debug, Default, Clone)]
struct AttrIndex {
    present: Bitset,
    empty: Bitset,
    ints: BTreeMap<i64, Bitset>,
    texts: HashMap<String, Bitset>,
}

impl AttrIndex {
    fn slots_with(&self, value: &AttrValue) -> Option<&Bitset> {
        match value {
            AttrValue::Integer(i) => self.ints.get(i),
            AttrValue::Text(s) => self.texts.get(s),
            AttrValue::Empty => Some(&self.empty),
        }
    }
}

#[derive(Debug, Default, Clone)]
pub(crate) struct NodeIndex {
    alive: Bitset,
    attrs: HashMap<String, AttrIndex>,
}

impl NodeIndex {
    pub(crate) fn add(&mut self, slot: usize, node: &Node) {
        self.alive.insert(slot);
        for (name, value) in &node.attributes {
            let idx = self.attrs.entry(name.clone()).or_default();
            idx.present.insert(slot);
            match value {
                AttrValue::Integer(i) => {
                    idx.ints.entry(*i).or_default().insert(slot);
                }
                AttrValue::Text(s) => {
                    idx.texts.entry(s.clone()).or_default().insert(slot);
                }
                AttrValue::Empty => {
                    idx.empty.insert(slot);
                }
            }
        }
    }

    pub(crate) fn remove(&mut self, slot: usize, node: &Node) {
        self.alive.remove(slot);
        for (name, value) in &node.attributes {
            let Some(idx) = self.attrs.get_mut(name) else {
                continue;
            };
            idx.present.remove(slot);
            match value {
                AttrValue::Integer(i) => {
                    if let Some(b) = idx.ints.get_mut(i) {
                        b.remove(slot);
                        if b.count() == 0 {
                            idx.ints.remove(i);
                        }
                    }
                }
                AttrValue::Text(s) => {
                    if let Some(b) = idx.texts.get_mut(s) {
                        b.remove(slot);
                        if b.count() == 0 {
                            idx.texts.remove(s);
                        }
                    }
                }
                AttrValue::Empty => {
                    idx.empty.remove(slot);
                }
            }
        }
    }

    fn candidates(&self, c: &CompactedConstraint) -> Bitset {
        let idx = self.attrs.get(&c.attribute);
        let (lo, hi, excluded) = match &c.form {
            ConstraintForm::Equal(v) => {
                return idx
                    .and_then(|i| i.slots_with(v))
                    .cloned()
                    .unwrap_or_default();
            }
            ConstraintForm::NotEqualArray(set) => {
                let mut out = self.alive.clone();
                if let Some(idx) = idx {
                    for v in set {
                        if let Some(b) = idx.slots_with(v) {
                            out.difference_with(b);
                        }
                    }
                }
                return out;
            }
            ConstraintForm::GreaterEqual { lo, excluded } => (Some(*lo), None, excluded),
            ConstraintForm::LessThan { hi, excluded } => (None, Some(*hi), excluded),
            ConstraintForm::Between { lo, hi, excluded } => (Some(*lo), Some(*hi), excluded),
        };
        if let (Some(l), Some(h)) = (lo, hi) {
            if l >= h {
                return Bitset::new();
            }
        }
        let zero_admitted = lo.is_none_or(|l| l <= 0)
            && hi.is_none_or(|h| 0 < h)
            && !excluded.contains(&AttrValue::Integer(0));
        let mut out = Bitset::new();
        if zero_admitted {
            // Absent attributes and empty values read as 0.
            out = self.alive.clone();
            if let Some(idx) = idx {
                out.difference_with(&idx.present);
                if !excluded.contains(&AttrValue::Empty) {
                    out.union_with(&idx.empty);
                }
            }
        }
        if let Some(idx) = idx {
            let lower = lo.map_or(std::ops::Bound::Unbounded, std::ops::Bound::Included);
            let upper = hi.map_or(std::ops::Bound::Unbounded, std::ops::Bound::Excluded);
            for (value, slots) in idx.ints.range((lower, upper)) {
                if !excluded.contains(&AttrValue::Integer(*value)) {
                    out.union_with(slots);
                }
            }
        }
        out
    }

    /// Slots of all nodes matching every entry of `set`.
    pub(crate) fn matching(&self, set: &CompactedConstraintSet) -> Bitset {
        let mut out = self.alive.clone();
        for c in set.iter() {
            out.intersect_with(&self.candidates(c));
        }
        out
    }
}
