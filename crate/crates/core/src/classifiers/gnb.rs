use crate::features::SparseVec;

/// Per-class log priors, feature means and variances. Every variance gets
/// `1e-9` times the largest overall feature variance added.
pub(super) fn fit(xs: &[&SparseVec], y: &[usize], n_classes: usize, width: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = xs.len() as f64;
    let mut counts = vec![0.0; n_classes];
    let mut sums = vec![vec![0.0; width]; n_classes];
    let mut all_sum = vec![0.0; width];
    for (x, &c) in xs.iter().zip(y) {
        counts[c] += 1.0;
        for (f, v) in x.iter() {
            sums[c][f] += v;
            all_sum[f] += v;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &nc)| s.iter().map(|v| if nc > 0.0 { v / nc } else { 0.0 }).collect())
        .collect();
    let all_mean: Vec<f64> = all_sum.iter().map(|s| s / n).collect();
    // Squared deviations: rows with x_f = 0 contribute mean², added in bulk.
    let mut sq = vec![vec![0.0; width]; n_classes];
    let mut nz = vec![vec![0.0; width]; n_classes];
    let mut all_sq = vec![0.0; width];
    let mut all_nz = vec![0.0; width];
    for (x, &c) in xs.iter().zip(y) {
        for (f, v) in x.iter() {
            sq[c][f] += (v - means[c][f]).powi(2);
            nz[c][f] += 1.0;
            all_sq[f] += (v - all_mean[f]).powi(2);
            all_nz[f] += 1.0;
        }
    }
    let max_var = (0..width)
        .map(|f| (all_sq[f] + (n - all_nz[f]) * all_mean[f].powi(2)) / n)
        .fold(0.0, f64::max);
    let floor = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
    let variances = (0..n_classes)
        .map(|c| {
            (0..width)
                .map(|f| {
                    let nc = counts[c];
                    let var = if nc > 0.0 {
                        (sq[c][f] + (nc - nz[c][f]) * means[c][f].powi(2)) / nc
                    } else {
                        0.0
                    };
                    var + floor
                })
                .collect()
        })
        .collect();
    let log_prior = counts
        .iter()
        .map(|&c| if c > 0.0 { (c / n).ln() } else { f64::MIN })
        .collect();
    (log_prior, means, variances)
}

pub(super) fn log_posterior(log_prior: &[f64], means: &[Vec<f64>], variances: &[Vec<f64>], x: &SparseVec) -> Vec<f64> {
    log_prior
        .iter()
        .zip(means.iter().zip(variances))
        .map(|(lp, (mu, var))| {
            // Start from x = 0 everywhere, then correct the nonzero features.
            let mut s = *lp;
            for (m, v) in mu.iter().zip(var) {
                s -= 0.5 * (2.0 * std::f64::consts::PI * v).ln() + m * m / (2.0 * v);
            }
            for (f, xf) in x.iter() {
                s += (mu[f] * mu[f] - (xf - mu[f]).powi(2)) / (2.0 * var[f]);
            }
            s
        })
        .collect()
}
