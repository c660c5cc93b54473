//! Feed-forward network: ReLU hidden layers, softmax output, mean
//! cross-entropy, Adam updates on shuffled mini-batches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, ClassifierSpec};
use crate::features::SparseVec;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; its weight
/// for input `i` and output `j` sits at `weights[l][i * sizes[l + 1] + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Self {
        MlpParams {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` for weights and biases.
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let mut p = MlpParams::zeros(sizes);
        for (l, w) in sizes.windows(2).enumerate() {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            for x in p.weights[l].iter_mut().chain(p.biases[l].iter_mut()) {
                *x = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    pub fn n_params(&self) -> usize {
        self.values().count()
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .flatten()
            .chain(self.biases.iter_mut().flatten())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn from_flat(sizes: &[usize], flat: &[f64]) -> Self {
        let mut p = MlpParams::zeros(sizes);
        assert_eq!(flat.len(), p.n_params(), "flat parameter count");
        for (dst, src) in p.values_mut().zip(flat) {
            *dst = *src;
        }
        p
    }

    /// Activations of every layer after the input: ReLU outputs for hidden
    /// layers, raw logits for the last.
    fn forward(&self, x: &SparseVec) -> Vec<Vec<f64>> {
        let layers = self.weights.len();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let out = self.sizes[l + 1];
            let mut z = self.biases[l].clone();
            let w = &self.weights[l];
            let mut accumulate = |i: usize, a: f64| {
                if a != 0.0 {
                    let row = &w[i * out..(i + 1) * out];
                    for (zj, wij) in z.iter_mut().zip(row) {
                        *zj += a * wij;
                    }
                }
            };
            if l == 0 {
                x.iter().for_each(|(i, a)| accumulate(i, a));
            } else {
                acts[l - 1].iter().enumerate().for_each(|(i, &a)| accumulate(i, a));
            }
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict_proba(&self, x: &SparseVec) -> Vec<f64> {
        softmax(self.forward(x).last().expect("at least one layer"))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy of `params` on the batch and its analytic gradient,
/// laid out like `params`.
pub fn mlp_loss_and_gradient<X: AsRef<SparseVec>>(
    params: &MlpParams,
    xs: &[X],
    ys: &[usize],
) -> Result<(f64, MlpParams), ClassifierError> {
    assert_eq!(xs.len(), ys.len(), "batch inputs and labels differ in length");
    if xs.is_empty() {
        return Err(ClassifierError::DegenerateData("empty batch".into()));
    }
    let n = xs.len() as f64;
    let layers = params.weights.len();
    let mut grad = MlpParams::zeros(&params.sizes);
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let x = x.as_ref();
        let acts = params.forward(x);
        let logits = &acts[layers - 1];
        loss += log_sum_exp(logits) - logits[y];
        let mut delta = softmax(logits);
        delta[y] -= 1.0;
        delta.iter_mut().for_each(|d| *d /= n);
        for l in (0..layers).rev() {
            let out = params.sizes[l + 1];
            for (b, d) in grad.biases[l].iter_mut().zip(&delta) {
                *b += d;
            }
            let gw = &mut grad.weights[l];
            if l == 0 {
                for (i, a) in x.iter() {
                    for (g, d) in gw[i * out..(i + 1) * out].iter_mut().zip(&delta) {
                        *g += a * d;
                    }
                }
                break;
            }
            let input = &acts[l - 1];
            let w = &params.weights[l];
            let mut prev = vec![0.0; params.sizes[l]];
            for (i, &a) in input.iter().enumerate() {
                let row = i * out..(i + 1) * out;
                if a != 0.0 {
                    for (g, d) in gw[row.clone()].iter_mut().zip(&delta) {
                        *g += a * d;
                    }
                }
                // ReLU passes gradient only where its output is positive.
                if a > 0.0 {
                    prev[i] = w[row].iter().zip(&delta).map(|(wij, d)| wij * d).sum();
                }
            }
            delta = prev;
        }
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(ClassifierError::NonFiniteLoss(format!("cross-entropy {loss}")));
    }
    Ok((loss, grad))
}

/// Returns the fitted parameters, epochs run and the last epoch's loss.
pub(super) fn fit(
    xs: &[&SparseVec],
    y: &[usize],
    n_classes: usize,
    width: usize,
    spec: &ClassifierSpec,
) -> Result<(MlpParams, usize, f64), ClassifierError> {
    let mut sizes = vec![width];
    sizes.extend(&spec.hidden);
    sizes.push(n_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut params = MlpParams::init(&sizes, &mut rng);
    let n_params = params.n_params();
    let (mut m, mut v) = (vec![0.0; n_params], vec![0.0; n_params]);
    let batch = spec.batch_size.min(xs.len());
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut step = 0i32;
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut epoch_loss = f64::NAN;
    let mut epochs = 0;
    while epochs < spec.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let bx: Vec<&SparseVec> = chunk.iter().map(|&i| xs[i]).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grad) = mlp_loss_and_gradient(&params, &bx, &by)?;
            total += loss * chunk.len() as f64;
            step += 1;
            let lr = spec.learning_rate * (1.0 - BETA2.powi(step)).sqrt() / (1.0 - BETA1.powi(step));
            for (((p, g), mi), vi) in params.values_mut().zip(grad.values()).zip(&mut m).zip(&mut v) {
                *mi = BETA1 * *mi + (1.0 - BETA1) * g;
                *vi = BETA2 * *vi + (1.0 - BETA2) * g * g;
                *p -= lr * *mi / (vi.sqrt() + EPSILON);
            }
        }
        epochs += 1;
        epoch_loss = total / xs.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(ClassifierError::NonFiniteLoss(format!(
                "epoch {epochs} loss {epoch_loss}"
            )));
        }
        if epoch_loss > best - spec.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best = best.min(epoch_loss);
        if stale >= spec.patience {
            break;
        }
    }
    Ok((params, epochs, epoch_loss))
}
