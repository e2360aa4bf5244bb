use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// L2 penalty weight (lambda in `lambda/2 |w|^2 + mean hinge`).
    pub regularization: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            regularization: 1e-3,
            epochs: 50,
        }
    }
}

/// Linear decision function `w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Logistic squashing of the decision value; `> 0.5` iff the margin is positive.
    pub fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }
}

/// Pegasos-style stochastic subgradient descent on the primal hinge loss.
///
/// The bias is treated as a weight on a constant input (so it is
/// regularized too). The returned model averages the iterates of the second
/// half of training.
pub fn train_linear_svm(data: &Dataset, params: &SvmParams, seed: u64) -> Result<LinearModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(params.regularization > 0.0) || params.epochs == 0 {
        return Err(Error::param("svm needs regularization > 0 and epochs >= 1"));
    }
    let lambda = params.regularization;
    let d = data.n_features();
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seeded_rng(seed);
    let mut t = 0usize;
    let avg_from = params.epochs / 2;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = data.row(i);
            let y = if data.label(i) { 1.0 } else { -1.0 };
            let margin = y * (w[d] + w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w[..d].iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[d] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if epoch >= avg_from {
                averaged += 1;
                let k = averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / k;
                }
            }
        }
    }
    Ok(LinearModel {
        weights: avg[..d].to_vec(),
        bias: avg[d],
    })
}
