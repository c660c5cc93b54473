//! CART with Gini impurity and class weights inversely proportional to
//! class frequency.

use serde::{Deserialize, Serialize};

use crate::features::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Weighted class totals of the training rows that reach the leaf.
    Leaf { distribution: Vec<f64> },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Longest root-to-leaf path, counted in edges.
pub fn depth(nodes: &[TreeNode]) -> usize {
    fn walk(nodes: &[TreeNode], i: usize) -> usize {
        match &nodes[i] {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
        }
    }
    walk(nodes, 0)
}

pub(super) fn leaf<'a>(nodes: &'a [TreeNode], x: &SparseVec) -> &'a [f64] {
    let mut i = 0;
    loop {
        match &nodes[i] {
            TreeNode::Leaf { distribution } => return distribution,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => i = if x.get(*feature) <= *threshold { *left } else { *right },
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Builder<'a> {
    y: &'a [usize],
    weight: Vec<f64>,
    n_classes: usize,
    /// Per feature, the `(row, value)` entries that are nonzero.
    columns: Vec<Vec<(usize, f64)>>,
    /// Node currently owning each row.
    owner: Vec<usize>,
}

impl Builder<'_> {
    fn totals(&self, rows: &[usize]) -> Vec<f64> {
        let mut t = vec![0.0; self.n_classes];
        for &r in rows {
            t[self.y[r]] += self.weight[r];
        }
        t
    }

    /// `Σ w_c² / W`; a larger sum over both children means lower weighted Gini.
    fn purity(t: &[f64]) -> f64 {
        let w: f64 = t.iter().sum();
        if w <= 0.0 {
            0.0
        } else {
            t.iter().map(|x| x * x).sum::<f64>() / w
        }
    }

    fn best_split(&self, node: usize, rows: &[usize], totals: &[f64]) -> Option<Split> {
        let parent = Self::purity(totals);
        let scale: f64 = totals.iter().sum();
        let mut best: Option<Split> = None;
        for (feature, column) in self.columns.iter().enumerate() {
            let mut entries: Vec<(f64, usize)> = column
                .iter()
                .filter(|&&(r, _)| self.owner[r] == node)
                .map(|&(r, v)| (v, r))
                .collect();
            if entries.is_empty() {
                continue;
            }
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // Groups of equal value, with the implicit zeros merged in at 0.
            let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut zero = totals.to_vec();
            for &(_, r) in &entries {
                zero[self.y[r]] -= self.weight[r];
            }
            let n_zero = rows.len() - entries.len();
            let mut zero_pending = n_zero > 0;
            for &(v, r) in &entries {
                if zero_pending && v > 0.0 {
                    groups.push((0.0, std::mem::take(&mut zero)));
                    zero_pending = false;
                }
                match groups.last_mut() {
                    Some((gv, t)) if *gv == v => t[self.y[r]] += self.weight[r],
                    _ => {
                        let mut t = vec![0.0; self.n_classes];
                        t[self.y[r]] += self.weight[r];
                        groups.push((v, t));
                    }
                }
            }
            if zero_pending {
                groups.push((0.0, zero));
            }
            let mut left = vec![0.0; self.n_classes];
            for pair in groups.windows(2) {
                let (lo, ref t) = pair[0];
                let hi = pair[1].0;
                left.iter_mut().zip(t).for_each(|(l, x)| *l += x);
                let right: Vec<f64> = totals.iter().zip(&left).map(|(a, b)| a - b).collect();
                let score = Self::purity(&left) + Self::purity(&right);
                if score > parent + 1e-12 * scale && best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some(Split {
                        feature,
                        threshold: if mid < hi { mid } else { lo },
                        score,
                    });
                }
            }
        }
        best
    }
}

pub(super) fn fit(xs: &[&SparseVec], y: &[usize], n_classes: usize, width: usize, max_depth: usize) -> Vec<TreeNode> {
    let mut counts = vec![0usize; n_classes];
    y.iter().for_each(|&c| counts[c] += 1);
    let n = y.len() as f64;
    let class_weight: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { n / (n_classes as f64 * c as f64) })
        .collect();
    let mut columns = vec![Vec::new(); width];
    for (r, x) in xs.iter().enumerate() {
        for (f, v) in x.iter() {
            if v != 0.0 {
                columns[f].push((r, v));
            }
        }
    }
    let mut b = Builder {
        y,
        weight: y.iter().map(|&c| class_weight[c]).collect(),
        n_classes,
        columns,
        owner: vec![0; y.len()],
    };
    let mut nodes = vec![TreeNode::Leaf {
        distribution: Vec::new(),
    }];
    let mut stack = vec![(0usize, (0..y.len()).collect::<Vec<usize>>(), 0usize)];
    while let Some((id, rows, depth)) = stack.pop() {
        let totals = b.totals(&rows);
        let pure = totals.iter().filter(|&&t| t > 0.0).count() <= 1;
        let split = if depth >= max_depth || pure || rows.len() < 2 {
            None
        } else {
            rows.iter().for_each(|&r| b.owner[r] = id);
            b.best_split(id, &rows, &totals)
        };
        let Some(split) = split else {
            nodes[id] = TreeNode::Leaf { distribution: totals };
            continue;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| xs[r].get(split.feature) <= split.threshold);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        let placeholder = || TreeNode::Leaf {
            distribution: Vec::new(),
        };
        nodes.push(placeholder());
        nodes.push(placeholder());
        nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, r_rows, depth + 1));
        stack.push((left, l_rows, depth + 1));
    }
    nodes
}
