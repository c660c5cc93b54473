//! One-vs-rest linear models without intercept: ridge via the normal
//! equations and hinge-loss SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ClassifierError, ClassifierSpec};
use crate::features::SparseVec;

/// Widths up to this use a Cholesky factorization of `XᵀX + αI`.
const DIRECT_MAX_WIDTH: usize = 2000;
const CG_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidgeSolver {
    Cholesky,
    ConjugateGradient,
}

fn targets(y: &[usize], class: usize) -> Vec<f64> {
    y.iter().map(|&c| if c == class { 1.0 } else { -1.0 }).collect()
}

fn xt_times(xs: &[&SparseVec], u: &[f64], width: usize) -> Vec<f64> {
    let mut out = vec![0.0; width];
    for (x, &ui) in xs.iter().zip(u) {
        for (j, v) in x.iter() {
            out[j] += v * ui;
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(XᵀX + αI)v`
fn normal_apply(xs: &[&SparseVec], alpha: f64, v: &[f64]) -> Vec<f64> {
    let xv: Vec<f64> = xs.iter().map(|x| x.dot(v)).collect();
    let mut out = xt_times(xs, &xv, v.len());
    for (o, vi) in out.iter_mut().zip(v) {
        *o += alpha * vi;
    }
    out
}

/// `‖(XᵀX + αI)w − Xᵀt‖` and `‖Xᵀt‖` for ±1 targets of `class`.
pub fn ridge_normal_residual(
    xs: &[&SparseVec],
    y: &[usize],
    class: usize,
    weights: &[f64],
    alpha: f64,
) -> (f64, f64) {
    let rhs = xt_times(xs, &targets(y, class), weights.len());
    let lhs = normal_apply(xs, alpha, weights);
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    (norm(&diff), norm(&rhs))
}

pub(super) fn fit_ridge(
    xs: &[&SparseVec],
    y: &[usize],
    n_classes: usize,
    width: usize,
    alpha: f64,
) -> Vec<Vec<f64>> {
    let solver = if width <= DIRECT_MAX_WIDTH {
        RidgeSolver::Cholesky
    } else {
        RidgeSolver::ConjugateGradient
    };
    fit_ridge_with(solver, xs, y, n_classes, width, alpha)
}

pub(super) fn fit_ridge_with(
    solver: RidgeSolver,
    xs: &[&SparseVec],
    y: &[usize],
    n_classes: usize,
    width: usize,
    alpha: f64,
) -> Vec<Vec<f64>> {
    let rhs: Vec<Vec<f64>> = (0..n_classes)
        .map(|c| xt_times(xs, &targets(y, c), width))
        .collect();
    match solver {
        RidgeSolver::Cholesky => {
            let l = cholesky(gram(xs, width, alpha), width);
            rhs.par_iter().map(|b| cholesky_solve(&l, width, b)).collect()
        }
        RidgeSolver::ConjugateGradient => rhs
            .par_iter()
            .map(|b| conjugate_gradient(xs, alpha, b))
            .collect(),
    }
}

/// Dense row-major `XᵀX + αI`.
fn gram(xs: &[&SparseVec], n: usize, alpha: f64) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for x in xs {
        for (i, a) in x.iter() {
            for (j, b) in x.iter() {
                g[i * n + j] += a * b;
            }
        }
    }
    for i in 0..n {
        g[i * n + i] += alpha;
    }
    g
}

/// Lower Cholesky factor of a symmetric positive definite matrix, in place.
fn cholesky(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &mut head[j * n..];
        let d = row_j[j] - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        let pivot = d.sqrt();
        row_j[j] = pivot;
        let row_j = &head[j * n..j * n + j];
        tail.par_chunks_mut(n).for_each(|row_i| {
            let dot: f64 = row_i[..j].iter().zip(row_j).map(|(p, q)| p * q).sum();
            row_i[j] = (row_i[j] - dot) / pivot;
        });
    }
    for i in 0..n {
        a[i * n + i + 1..(i + 1) * n].fill(0.0);
    }
    a
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = l[i * n..i * n + i].iter().zip(&z).map(|(p, q)| p * q).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * w[k]).sum();
        w[i] = (z[i] - s) / l[i * n + i];
    }
    w
}

fn conjugate_gradient(xs: &[&SparseVec], alpha: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut w = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|x| x * x).sum();
    let stop = CG_TOLERANCE * (1.0 + norm(b));
    for _ in 0..10 * n.max(10) {
        if rr.sqrt() <= stop {
            break;
        }
        let ap = normal_apply(xs, alpha, &p);
        let step = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            w[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next: f64 = r.iter().map(|x| x * x).sum();
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    w
}

/// Returns per-class weights and the mean regularized hinge loss.
pub(super) fn fit_sgd_hinge(
    xs: &[&SparseVec],
    y: &[usize],
    n_classes: usize,
    width: usize,
    spec: &ClassifierSpec,
) -> Result<(Vec<Vec<f64>>, f64), ClassifierError> {
    let (alpha, eta0) = (spec.alpha, spec.eta0);
    if eta0 * alpha >= 1.0 {
        return Err(ClassifierError::InvalidSpec(
            "eta0 * alpha must stay below 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let orders: Vec<Vec<u32>> = (0..spec.epochs)
        .map(|_| {
            let mut o: Vec<u32> = (0..xs.len() as u32).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    let fits: Vec<(Vec<f64>, f64)> = (0..n_classes)
        .into_par_iter()
        .map(|class| {
            let t = targets(y, class);
            // w = scale * v keeps the shrink step O(1).
            let mut v = vec![0.0; width];
            let mut scale = 1.0;
            let mut step = 0u64;
            for order in &orders {
                for &i in order {
                    let i = i as usize;
                    let eta = eta0 / (1.0 + eta0 * alpha * step as f64);
                    let margin = t[i] * scale * xs[i].dot(&v);
                    scale *= 1.0 - eta * alpha;
                    if margin < 1.0 {
                        let g = eta * t[i] / scale;
                        for (j, xj) in xs[i].iter() {
                            v[j] += g * xj;
                        }
                    }
                    if scale < 1e-9 {
                        v.iter_mut().for_each(|x| *x *= scale);
                        scale = 1.0;
                    }
                    step += 1;
                }
            }
            v.iter_mut().for_each(|x| *x *= scale);
            let hinge: f64 = xs
                .iter()
                .zip(&t)
                .map(|(x, ti)| (1.0 - ti * x.dot(&v)).max(0.0))
                .sum::<f64>()
                / xs.len() as f64;
            let loss = hinge + 0.5 * alpha * v.iter().map(|x| x * x).sum::<f64>();
            (v, loss)
        })
        .collect();
    let loss = fits.iter().map(|(_, l)| l).sum::<f64>() / n_classes as f64;
    if !loss.is_finite() || fits.iter().any(|(w, _)| w.iter().any(|x| !x.is_finite())) {
        return Err(ClassifierError::NonFiniteLoss(format!("SGD diverged (loss {loss})")));
    }
    Ok((fits.into_iter().map(|(w, _)| w).collect(), loss))
}
