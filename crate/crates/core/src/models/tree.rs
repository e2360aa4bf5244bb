use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Relative slack under which two candidate splits count as equally good.
pub(crate) const TIE_EPS: f64 = 1e-9;

/// Flat tree node; children are indices into the owning node vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Loss reduction achieved by this split.
        gain: f64,
        left: usize,
        right: usize,
    },
    /// Fake probability for classification trees, raw margin for boosted trees.
    Leaf { value: f64 },
}

pub(crate) fn walk(nodes: &[Node], x: &[f64]) -> f64 {
    let mut i = 0;
    loop {
        match &nodes[i] {
            Node::Leaf { value } => return *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                i = if x[*feature] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
        }
    }
}

/// Number of splits on the longest root-to-leaf path.
pub(crate) fn tree_depth(nodes: &[Node]) -> usize {
    fn go(nodes: &[Node], i: usize) -> usize {
        match &nodes[i] {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
        }
    }
    if nodes.is_empty() {
        0
    } else {
        go(nodes, 0)
    }
}

/// Threshold between two consecutive distinct sorted values.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub max_depth: Option<usize>,
    pub n_features: usize,
}

impl DecisionTree {
    pub fn score(&self, x: &[f64]) -> f64 {
        walk(&self.nodes, x)
    }

    pub fn depth(&self) -> usize {
        tree_depth(&self.nodes)
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Sum over both children of `n_child * gini(child)`.
    pub score: f64,
    /// Parent weighted impurity minus `score`.
    pub decrease: f64,
}

fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64;
    let q = (n - pos) as f64;
    n as f64 - (p * p + q * q) / n as f64
}

/// Best Gini split of `indices` over `features`.
///
/// Features are scanned in the given order and thresholds ascending; a later
/// candidate replaces the incumbent only if strictly better.
pub fn best_gini_split(
    data: &Dataset,
    indices: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let total_pos = indices.iter().filter(|&&i| data.label(i)).count();
    let parent = weighted_gini(total_pos, n);
    let mut order = indices.to_vec();
    let mut best: Option<SplitChoice> = None;
    for &f in features {
        order.sort_by(|&a, &b| {
            data.value(a, f)
                .total_cmp(&data.value(b, f))
                .then(a.cmp(&b))
        });
        let mut left_pos = 0;
        for k in 0..n - 1 {
            if data.label(order[k]) {
                left_pos += 1;
            }
            let v = data.value(order[k], f);
            let next = data.value(order[k + 1], f);
            if v >= next {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let score = weighted_gini(left_pos, nl) + weighted_gini(total_pos - left_pos, nr);
            if best.is_none_or(|b| score < b.score - TIE_EPS) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(v, next),
                    score,
                    decrease: parent - score,
                });
            }
        }
    }
    best
}

pub(crate) struct CartBuilder<'a> {
    data: &'a Dataset,
    max_depth: Option<usize>,
    min_leaf: usize,
    max_features: Option<usize>,
    rng: Option<ChaCha8Rng>,
    nodes: Vec<Node>,
}

impl<'a> CartBuilder<'a> {
    pub(crate) fn new(data: &'a Dataset, params: &TreeParams) -> Self {
        Self {
            data,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf.max(1),
            max_features: None,
            rng: None,
            nodes: Vec::new(),
        }
    }

    /// Restricts each split to a random subset of `k` features.
    pub(crate) fn with_feature_sampling(mut self, k: usize, rng: ChaCha8Rng) -> Self {
        self.max_features = Some(k.clamp(1, self.data.n_features()));
        self.rng = Some(rng);
        self
    }

    pub(crate) fn build(mut self, indices: Vec<usize>) -> Vec<Node> {
        self.grow(indices, 0);
        self.nodes
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.n_features();
        match (self.max_features, self.rng.as_mut()) {
            (Some(k), Some(rng)) if k < d => {
                let mut f = index::sample(rng, d, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let n = indices.len();
        let pos = indices.iter().filter(|&&i| self.data.label(i)).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: pos as f64 / n as f64,
        });
        let pure = pos == 0 || pos == n;
        let depth_ok = self.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || n < 2 * self.min_leaf {
            return id;
        }
        let features = self.candidate_features();
        let Some(split) = best_gini_split(self.data, &indices, &features, self.min_leaf) else {
            return id;
        };
        if split.decrease <= TIE_EPS {
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
            gain: split.decrease,
            left,
            right,
        };
        id
    }
}

/// CART with Gini impurity. Deterministic: ties go to the lower feature
/// index, then the lower threshold.
pub fn train_decision_tree(data: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let nodes = CartBuilder::new(data, params).build((0..data.len()).collect());
    Ok(DecisionTree {
        nodes,
        max_depth: params.max_depth,
        n_features: data.n_features(),
    })
}
