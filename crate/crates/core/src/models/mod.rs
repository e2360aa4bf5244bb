//! Classifiers over numeric feature vectors.
//!
//! Five trainers share one [`Dataset`] layout and return a [`TrainedModel`]:
//! a CART decision tree, a bagged random forest, a gradient-boosted ensemble
//! on logistic loss, a linear SVM, and a GELU multilayer perceptron. Every
//! trainer is deterministic given its seed.
//!
//! All models emit a fake-news score in `[0, 1]`; the label is `score > 0.5`,
//! so an exact tie is classified as not fake.

mod file;
mod forest;
mod gbdt;
mod importance;
pub mod mlp;
mod rule;
mod svm;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexfeat::FeatureVector;

pub use file::{ModelFile, MODEL_FILE_VERSION};
pub use forest::{train_random_forest, ForestParams, MaxFeatures, RandomForest};
pub use gbdt::{train_gbdt, BoostedEnsemble, GbdtParams};
pub use importance::{gain_importance, ImportanceReport};
pub use mlp::{train_mlp, EvalSchedule, MlpConfig, MlpModel, TrainLog};
pub use rule::{export_rule, RuleOptions};
pub use svm::{train_linear_svm, LinearModel, SvmParams};
pub use tree::{best_gini_split, train_decision_tree, DecisionTree, Node, SplitChoice, TreeParams};

/// The crate-wide RNG, seeded deterministically.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major feature matrix with boolean labels (`true` = fake).
/// Train, validation and test partitions sharing one column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        Ok(Self {
            train: self.train.select_columns(columns)?,
            validation: self.validation.select_columns(columns)?,
            test: self.test.select_columns(columns)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    n_features: usize,
    y: Vec<bool>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, n_features: usize, y: Vec<bool>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::param("dataset needs at least one feature"));
        }
        if x.len() != n_features * y.len() {
            return Err(Error::Dimension {
                expected: n_features * y.len(),
                got: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite value in row {} column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        Ok(Self { x, n_features, y })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: &[bool]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let n_features = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut x = Vec::with_capacity(rows.len() * n_features);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_features {
                return Err(Error::Dimension {
                    expected: n_features,
                    got: r.len(),
                });
            }
            x.extend_from_slice(r);
        }
        Self::new(x, n_features, labels.to_vec())
    }

    pub fn from_features(vectors: &[FeatureVector], labels: &[bool]) -> Result<Self> {
        let rows: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
        Self::from_rows(&rows, labels)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> bool {
        self.y[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.y
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks(self.n_features)
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.n_features) {
            return Err(Error::param(format!("column {c} out of range")));
        }
        let mut x = Vec::with_capacity(self.len() * columns.len());
        for r in self.rows() {
            x.extend(columns.iter().map(|&c| r[c]));
        }
        Self::new(x, columns.len(), self.y.clone())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut x = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        Self {
            x,
            n_features: self.n_features,
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<bool>) -> Result<Self> {
        Self::new(self.x.clone(), self.n_features, labels)
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    /// Estimated probability (or vote share) that the document is fake.
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Self {
            label: score > 0.5,
            score,
        }
    }
}

/// A fitted classifier of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    BoostedEnsemble(BoostedEnsemble),
    LinearModel(LinearModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::DecisionTree(m) => m.n_features,
            TrainedModel::RandomForest(m) => m.n_features,
            TrainedModel::BoostedEnsemble(m) => m.n_features,
            TrainedModel::LinearModel(m) => m.weights.len(),
            TrainedModel::Mlp(m) => m.architecture.input,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::DecisionTree(_) => "decision_tree",
            TrainedModel::RandomForest(_) => "random_forest",
            TrainedModel::BoostedEnsemble(_) => "boosted_ensemble",
            TrainedModel::LinearModel(_) => "linear_model",
            TrainedModel::Mlp(_) => "mlp",
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        if features.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: features.len(),
            });
        }
        let score = match self {
            TrainedModel::DecisionTree(m) => m.score(features),
            TrainedModel::RandomForest(m) => m.score(features),
            TrainedModel::BoostedEnsemble(m) => m.score(features),
            TrainedModel::LinearModel(m) => m.score(features),
            TrainedModel::Mlp(m) => m.score(features),
        };
        Ok(Prediction::from_score(score))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Prediction>> {
        data.rows().map(|r| self.predict(r)).collect()
    }

    /// Misclassified fraction of `data`, in percent.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let preds = self.predict_dataset(data)?;
        let wrong = preds
            .iter()
            .zip(data.labels())
            .filter(|(p, &y)| p.label != y)
            .count();
        Ok(100.0 * wrong as f64 / data.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Svm(SvmParams),
    Tree(TreeParams),
    Forest(ForestParams),
    Gbdt(GbdtParams),
    Mlp(MlpConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Svm(_) => "svm",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Gbdt(_) => "gbdt",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    /// Default hyperparameters for a family name (`svm`, `tree`, `forest`, `gbdt`, `mlp`).
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "svm" => ModelSpec::Svm(SvmParams::default()),
            "tree" | "dt" => ModelSpec::Tree(TreeParams::default()),
            "forest" | "rf" => ModelSpec::Forest(ForestParams::default()),
            "gbdt" | "xgboost" => ModelSpec::Gbdt(GbdtParams::default()),
            "mlp" | "nn" => ModelSpec::Mlp(MlpConfig::default()),
            other => return Err(Error::param(format!("unknown model kind {other:?}"))),
        })
    }

    /// Size key used to break validation ties in favor of smaller models.
    pub fn complexity(&self) -> (u64, u64) {
        let depth = |d: Option<usize>| d.map(|d| d as u64).unwrap_or(u64::MAX);
        match self {
            ModelSpec::Svm(p) => (p.epochs as u64, 0),
            ModelSpec::Tree(p) => (depth(p.max_depth), 0),
            ModelSpec::Forest(p) => (p.n_trees as u64, depth(p.max_depth)),
            ModelSpec::Gbdt(p) => (p.n_rounds as u64, p.max_depth as u64),
            ModelSpec::Mlp(c) => (c.hidden.iter().sum::<usize>() as u64, c.max_epochs as u64),
        }
    }

    pub fn needs_validation(&self) -> bool {
        matches!(self, ModelSpec::Mlp(_))
    }

    pub fn train(
        &self,
        train: &Dataset,
        validation: Option<&Dataset>,
        seed: u64,
    ) -> Result<TrainedModel> {
        match self {
            ModelSpec::Svm(p) => train_linear_svm(train, p, seed).map(TrainedModel::LinearModel),
            ModelSpec::Tree(p) => train_decision_tree(train, p).map(TrainedModel::DecisionTree),
            ModelSpec::Forest(p) => {
                train_random_forest(train, p, seed).map(TrainedModel::RandomForest)
            }
            ModelSpec::Gbdt(p) => train_gbdt(train, p, seed).map(TrainedModel::BoostedEnsemble),
            ModelSpec::Mlp(c) => {
                let valid = validation
                    .ok_or_else(|| Error::param("mlp training requires a validation split"))?;
                train_mlp(train, valid, c, seed).map(|(m, _)| TrainedModel::Mlp(m))
            }
        }
    }
}
