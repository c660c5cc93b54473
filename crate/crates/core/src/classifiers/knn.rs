use crate::features::SparseVec;

/// Indices of the `k` nearest rows, nearest first; equal distances keep
/// training order. Distances are squared.
pub(super) fn nearest(rows: &[SparseVec], k: usize, x: &SparseVec) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, r) in rows.iter().enumerate() {
        let d = r.squared_distance(x);
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(pos, (d, i));
        best.truncate(k);
    }
    best
}

/// Per-class vote weights among the `k` nearest rows. Weights are inverse
/// distances; when some neighbours coincide with `x`, only they vote, with
/// weight 1 each.
pub(super) fn votes(rows: &[SparseVec], labels: &[usize], n_classes: usize, k: usize, x: &SparseVec) -> Vec<f64> {
    let neighbours = nearest(rows, k, x);
    let mut votes = vec![0.0; n_classes];
    let exact = neighbours.iter().any(|&(d, _)| d == 0.0);
    for (d, i) in neighbours {
        let w = match (exact, d == 0.0) {
            (true, true) => 1.0,
            (true, false) => 0.0,
            _ => 1.0 / d.sqrt(),
        };
        votes[labels[i]] += w;
    }
    votes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::*;
    use crate::classifiers::{fit, ClassifierKind, ClassifierSpec};

    #[test]
    fn exact_match_wins() {
        let rows = vec![
            row('A', &[(0, 1.0)]),
            row('B', &[(0, 1.1)]),
            row('B', &[(0, 0.9)]),
        ];
        let m = fit(&ClassifierSpec::new(ClassifierKind::Knn, 0), &rows, 1).unwrap();
        assert_eq!(m.predict_one(&rows[0].features), label('A'));
        assert_eq!(m.predict_one(&SparseVec::from_pairs([(0, 1.06)]).unwrap()), label('B'));
    }

    #[test]
    fn nearest_keeps_training_order_on_ties() {
        let rows: Vec<SparseVec> = [1.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|&v| SparseVec::from_pairs([(0, v)]).unwrap())
            .collect();
        let got = nearest(&rows, 3, &SparseVec::new());
        assert_eq!(got.iter().map(|p| p.1).collect::<Vec<_>>(), [0, 1, 2]);
    }
}
