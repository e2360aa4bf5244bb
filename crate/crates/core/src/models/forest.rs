use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{walk, CartBuilder, DecisionTree, TreeParams};
use super::{seeded_rng, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(n_features))`, at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Seed each tree was grown from, derived from the run seed.
    pub seeds: Vec<u64>,
    pub n_features: usize,
}

impl RandomForest {
    /// Share of trees voting fake.
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| walk(&t.nodes, x) > 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Per-tree seeds derived from the run seed; independent of thread scheduling.
pub(crate) fn derive_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn train_random_forest(
    data: &Dataset,
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if params.n_trees == 0 {
        return Err(Error::param("n_trees must be at least 1"));
    }
    let seeds = derive_seeds(seed, params.n_trees);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let k = params.max_features.resolve(data.n_features());
    let n = data.len();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seeded_rng(s);
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let nodes = CartBuilder::new(data, &tree_params)
                .with_feature_sampling(k, rng)
                .build(indices);
            DecisionTree {
                nodes,
                max_depth: params.max_depth,
                n_features: data.n_features(),
            }
        })
        .collect();
    Ok(RandomForest {
        trees,
        seeds,
        n_features: data.n_features(),
    })
}
