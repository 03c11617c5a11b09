//! Linear models: multinomial logistic regression (with and without an inner
//! grid search), ridge, and the one-vs-rest online learners.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use super::{argmax, Params};
use crate::error::{Error, Result};
use crate::represent::{Row, Samples};
use crate::seed::{derive_seed, rng};

/// Per-class weight vectors and biases; prediction is the arg-max score.
#[derive(Debug, Clone)]
pub struct LinearScores {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub probabilistic: bool,
    pub selected_l2: Option<f64>,
}

impl LinearScores {
    pub fn scores(&self, row: Row<'_>) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| row.dot(w) + b)
            .collect()
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        argmax(&self.scores(row))
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2` (biases unpenalized) and its
/// gradient. `params` holds the `n_classes x width` weights row-major,
/// followed by the `n_classes` biases.
pub fn softmax_loss_grad(
    x: &Samples,
    y: &[usize],
    n_classes: usize,
    l2: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let d = x.width();
    let n = x.len() as f64;
    let (w, b) = params.split_at(n_classes * d);
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let scores: Vec<f64> = (0..n_classes)
            .map(|c| row.dot(&w[c * d..(c + 1) * d]) + b[c])
            .collect();
        let p = softmax(&scores);
        loss -= p[label].max(f64::MIN_POSITIVE).ln();
        for c in 0..n_classes {
            let residual = p[c] - if c == label { 1.0 } else { 0.0 };
            row.axpy(residual / n, &mut grad[c * d..(c + 1) * d]);
            grad[n_classes * d + c] += residual / n;
        }
    }
    loss /= n;
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for (g, v) in grad[..n_classes * d].iter_mut().zip(w) {
        *g += l2 * v;
    }
    (loss, grad)
}

/// Full-batch gradient descent with Armijo backtracking. The trial step
/// doubles after each accepted step and halves on rejection.
pub fn fit_softmax(
    x: &Samples,
    y: &[usize],
    n_classes: usize,
    l2: f64,
    max_epochs: usize,
    tolerance: f64,
) -> LinearScores {
    let d = x.width();
    let mut params = vec![0.0; n_classes * (d + 1)];
    let (mut loss, mut grad) = softmax_loss_grad(x, y, n_classes, l2, &params);
    let mut step = 1.0;
    for _ in 0..max_epochs {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 {
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let (trial_loss, trial_grad) = softmax_loss_grad(x, y, n_classes, l2, &trial);
            if trial_loss <= loss - 1e-4 * step * g2 {
                accepted = Some((trial, trial_loss, trial_grad));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss, next_grad)) = accepted else {
            break;
        };
        let delta = (loss - next_loss).abs();
        params = next;
        loss = next_loss;
        grad = next_grad;
        step *= 2.0;
        if delta < tolerance {
            break;
        }
    }
    let (w, b) = params.split_at(n_classes * d);
    LinearScores {
        weights: w
            .chunks(d.max(1))
            .take(n_classes)
            .map(|c| c[..d].to_vec())
            .collect(),
        bias: b.to_vec(),
        probabilistic: true,
        selected_l2: None,
    }
}

/// Picks `l2` from the grid by mean accuracy over inner stratified folds
/// (earlier grid entries win ties), then refits on all rows.
pub fn fit_softmax_cv(
    x: &Samples,
    y: &[usize],
    n_classes: usize,
    params: &Params,
    seed: u64,
) -> LinearScores {
    let k = params.cv_folds.min(x.len()).max(2);
    let folds = crate::evaluate::stratified_folds(y, k, derive_seed(seed, 0xC5));
    let mut best: Option<(f64, f64)> = None;
    for &l2 in &params.l2_grid {
        let mut accuracies = Vec::new();
        for fold in 0..k {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| folds[i] != fold);
            if train.is_empty() || test.is_empty() {
                continue;
            }
            let ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let model = fit_softmax(
                &x.select(&train),
                &ytr,
                n_classes,
                l2,
                params.max_epochs,
                params.tolerance,
            );
            let correct = test
                .iter()
                .filter(|&&i| model.predict_row(x.row(i)) == y[i])
                .count();
            accuracies.push(correct as f64 / test.len() as f64);
        }
        let mean = accuracies.iter().sum::<f64>() / accuracies.len().max(1) as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((l2, mean));
        }
    }
    let l2 = best.map_or(params.l2, |(l2, _)| l2);
    let mut model = fit_softmax(x, y, n_classes, l2, params.max_epochs, params.tolerance);
    model.selected_l2 = Some(l2);
    model
}

fn row_dot(a: Row<'_>, b: Row<'_>) -> f64 {
    match (a, b) {
        (Row::Dense(a), Row::Dense(b)) => a.iter().zip(b).map(|(u, v)| u * v).sum(),
        (Row::Sparse(a), Row::Sparse(b)) => {
            let (mut i, mut k, mut total) = (0, 0, 0.0);
            while i < a.len() && k < b.len() {
                match a[i].0.cmp(&b[k].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => k += 1,
                    std::cmp::Ordering::Equal => {
                        total += a[i].1 * b[k].1;
                        i += 1;
                        k += 1;
                    }
                }
            }
            total
        }
        (sparse @ Row::Sparse(_), Row::Dense(d)) | (Row::Dense(d), sparse @ Row::Sparse(_)) => sparse.dot(d),
    }
}

/// One-vs-rest least squares on `+1 / -1` targets with an unpenalized
/// intercept (data are centered first). Solves the `d x d` primal system
/// when `d <= n`, otherwise the `n x n` dual.
pub fn fit_ridge(x: &Samples, y: &[usize], n_classes: usize, l2: f64) -> Result<LinearScores> {
    let n = x.len();
    let d = x.width();
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        row.axpy(1.0 / n as f64, &mut mean);
    }
    let targets = DMatrix::from_fn(n, n_classes, |i, c| if y[i] == c { 1.0 } else { -1.0 });
    let target_mean: Vec<f64> = (0..n_classes).map(|c| targets.column(c).mean()).collect();
    let centered_targets = DMatrix::from_fn(n, n_classes, |i, c| targets[(i, c)] - target_mean[c]);

    let weights: DMatrix<f64> = if d <= n {
        let xc = DMatrix::from_fn(n, d, |i, j| x.row(i).get(j) - mean[j]);
        let mut gram = xc.transpose() * &xc;
        for j in 0..d {
            gram[(j, j)] += l2;
        }
        let rhs = xc.transpose() * &centered_targets;
        gram.cholesky()
            .ok_or_else(|| Error::Data("ridge system is not positive definite".into()))?
            .solve(&rhs)
    } else {
        let mean_row = Row::Dense(&mean);
        let mean_sq = mean_row.squared_norm();
        let proj: Vec<f64> = x.rows().map(|r| r.dot(&mean)).collect();
        let mut kernel = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                let v = row_dot(x.row(i), x.row(k)) - proj[i] - proj[k] + mean_sq;
                kernel[(i, k)] = v;
                kernel[(k, i)] = v;
            }
            kernel[(i, i)] += l2;
        }
        let alpha = kernel
            .cholesky()
            .ok_or_else(|| Error::Data("ridge dual system is not positive definite".into()))?
            .solve(&centered_targets);
        let mut w = DMatrix::zeros(d, n_classes);
        for c in 0..n_classes {
            let mut col = vec![0.0; d];
            let mut alpha_sum = 0.0;
            for i in 0..n {
                x.row(i).axpy(alpha[(i, c)], &mut col);
                alpha_sum += alpha[(i, c)];
            }
            for j in 0..d {
                w[(j, c)] = col[j] - alpha_sum * mean[j];
            }
        }
        w
    };

    let mean_v = DVector::from_vec(mean);
    let mut out_w = Vec::with_capacity(n_classes);
    let mut out_b = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let col = weights.column(c);
        out_b.push(target_mean[c] - col.dot(&mean_v));
        out_w.push(col.iter().copied().collect());
    }
    Ok(LinearScores {
        weights: out_w,
        bias: out_b,
        probabilistic: false,
        selected_l2: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineRule {
    Perceptron,
    /// PA-I with aggressiveness `pa_c`.
    PassiveAggressive,
    /// Hinge loss, constant learning rate, L2 shrinkage.
    HingeSgd,
}

/// One binary learner per class, all sharing the same per-epoch shuffle.
pub fn fit_online(
    rule: OnlineRule,
    x: &Samples,
    y: &[usize],
    n_classes: usize,
    params: &Params,
    seed: u64,
) -> LinearScores {
    let d = x.width();
    let n = x.len();
    // w = scale * v, so the SGD shrinkage is O(1) on sparse rows
    let mut v = vec![vec![0.0; d]; n_classes];
    let mut scale = vec![1.0; n_classes];
    let mut bias = vec![0.0; n_classes];
    let norms: Vec<f64> = x.rows().map(|r| r.squared_norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..params.max_epochs {
        order.shuffle(&mut rng(derive_seed(seed, epoch as u64)));
        for &i in &order {
            let row = x.row(i);
            for c in 0..n_classes {
                let target = if y[i] == c { 1.0 } else { -1.0 };
                let margin = target * (scale[c] * row.dot(&v[c]) + bias[c]);
                let step = match rule {
                    OnlineRule::Perceptron => {
                        if margin <= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    OnlineRule::PassiveAggressive => {
                        let loss = (1.0 - margin).max(0.0);
                        params.pa_c.min(loss / (norms[i] + 1.0))
                    }
                    OnlineRule::HingeSgd => {
                        scale[c] *= 1.0 - params.learning_rate * params.l2;
                        if margin < 1.0 {
                            params.learning_rate
                        } else {
                            0.0
                        }
                    }
                };
                if step > 0.0 {
                    row.axpy(step * target / scale[c], &mut v[c]);
                    bias[c] += step * target;
                }
                if scale[c] < 1e-9 {
                    for w in &mut v[c] {
                        *w *= scale[c];
                    }
                    scale[c] = 1.0;
                }
            }
        }
    }
    let weights = v
        .into_iter()
        .zip(&scale)
        .map(|(w, s)| w.into_iter().map(|x| x * s).collect())
        .collect();
    LinearScores {
        weights,
        bias,
        probabilistic: false,
        selected_l2: None,
    }
}
