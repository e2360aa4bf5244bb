//! Second-order gradient boosting on logistic loss.
//!
//! Each round fits a regression tree to the gradient/hessian of the log loss
//! at the current margins. Split gain and leaf weights follow the usual
//! regularized form:
//!
//! ```text
//! gain = 1/2 * (G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)) - gamma
//! w    = -G / (H + lambda)
//! ```
//!
//! The gain of every split is stored on the node for importance reporting.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, walk, Node, TIE_EPS};
use super::{seeded_rng, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum gain required to split.
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Row fraction sampled per round.
    pub subsample: f64,
    /// Column fraction sampled per tree.
    pub colsample: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub base_margin: f64,
    pub n_features: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl BoostedEnsemble {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_margin
            + self.learning_rate * self.trees.iter().map(|t| walk(&t.nodes, x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// Every split as `(feature, gain)`, in tree order.
    pub fn split_gains(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.trees.iter().flat_map(|t| {
            t.nodes.iter().filter_map(|n| match n {
                Node::Split { feature, gain, .. } => Some((*feature, *gain)),
                _ => None,
            })
        })
    }
}

struct RegBuilder<'a> {
    data: &'a Dataset,
    grad: &'a [f64],
    hess: &'a [f64],
    features: Vec<usize>,
    params: &'a GbdtParams,
    nodes: Vec<Node>,
}

struct RegSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegBuilder<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn best_split(&self, indices: &[usize], g_total: f64, h_total: f64) -> Option<RegSplit> {
        let n = indices.len();
        let parent = self.score(g_total, h_total);
        let mut order = indices.to_vec();
        let mut best: Option<RegSplit> = None;
        for &f in &self.features {
            order.sort_by(|&a, &b| {
                self.data
                    .value(a, f)
                    .total_cmp(&self.data.value(b, f))
                    .then(a.cmp(&b))
            });
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                gl += self.grad[order[k]];
                hl += self.hess[order[k]];
                let v = self.data.value(order[k], f);
                let next = self.data.value(order[k + 1], f);
                if v >= next {
                    continue;
                }
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain =
                    0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent) - self.params.gamma;
                if best.as_ref().is_none_or(|b| gain > b.gain + TIE_EPS) {
                    best = Some(RegSplit {
                        feature: f,
                        threshold: midpoint(v, next),
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let g: f64 = indices.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = indices.iter().map(|&i| self.hess[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_weight(g, h),
        });
        if depth >= self.params.max_depth || indices.len() < 2 {
            return id;
        }
        let Some(split) = self.best_split(&indices, g, h) else {
            return id;
        };
        if split.gain <= TIE_EPS {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.data.value(i, split.feature) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            left,
            right,
        };
        id
    }
}

fn check(params: &GbdtParams) -> Result<()> {
    if params.n_rounds == 0 {
        return Err(Error::param("n_rounds must be at least 1"));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::param("learning_rate must be positive"));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0)
        || !(params.colsample > 0.0 && params.colsample <= 1.0)
    {
        return Err(Error::param("subsample and colsample must lie in (0, 1]"));
    }
    if params.lambda < 0.0 || params.min_child_weight < 0.0 {
        return Err(Error::param(
            "lambda and min_child_weight must be non-negative",
        ));
    }
    Ok(())
}

pub fn train_gbdt(data: &Dataset, params: &GbdtParams, seed: u64) -> Result<BoostedEnsemble> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check(params)?;
    let n = data.len();
    let d = data.n_features();
    let mut rng = seeded_rng(seed);
    let mut margins = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let n_rows = ((n as f64 * params.subsample).round() as usize).clamp(1, n);
    let n_cols = ((d as f64 * params.colsample).round() as usize).clamp(1, d);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let y = if data.label(i) { 1.0 } else { 0.0 };
            grad[i] = p - y;
            hess[i] = p * (1.0 - p);
        }
        let rows: Vec<usize> = if n_rows < n {
            let mut r = index::sample(&mut rng, n, n_rows).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let features: Vec<usize> = if n_cols < d {
            let mut f = index::sample(&mut rng, d, n_cols).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..d).collect()
        };
        let mut b = RegBuilder {
            data,
            grad: &grad,
            hess: &hess,
            features,
            params,
            nodes: Vec::new(),
        };
        b.grow(rows, 0);
        let tree = RegressionTree { nodes: b.nodes };
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * walk(&tree.nodes, data.row(i));
        }
        trees.push(tree);
    }
    Ok(BoostedEnsemble {
        trees,
        learning_rate: params.learning_rate,
        base_margin: 0.0,
        n_features: d,
    })
}
