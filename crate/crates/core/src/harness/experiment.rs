use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::dataset::Delimited;
use super::report::{Provenance, RunReport};
use crate::error::{Error, Result};
use crate::models::{Dataset, ModelSpec, Prediction, Splits, TrainedModel};

/// Hyperparameter name → candidate values. Expanded as a cartesian product
/// in key order, the last key varying fastest.
pub type Grid = BTreeMap<String, Vec<Value>>;

/// Per-model grids, as stored in a grids file.
pub type GridFile = BTreeMap<String, Grid>;

pub fn load_grid_file(path: &Path) -> Result<GridFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Applies `overrides` to the default spec of `model`.
pub fn spec_with(model: &str, overrides: &serde_json::Map<String, Value>) -> Result<ModelSpec> {
    let base = ModelSpec::default_for(model)?;
    let mut obj = match serde_json::to_value(&base)? {
        Value::Object(o) => o,
        _ => unreachable!("specs serialize to objects"),
    };
    for (k, v) in overrides {
        if k == "model" || !obj.contains_key(k) {
            return Err(Error::param(format!(
                "{} has no hyperparameter {k:?}",
                base.name()
            )));
        }
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(Value::Object(obj))
        .map_err(|e| Error::param(format!("{}: {e}", base.name())))
}

/// Every grid point applied on top of `params`, in expansion order.
pub fn expand_grid(model: &str, params: Option<&Value>, grid: &Grid) -> Result<Vec<ModelSpec>> {
    let base = match params {
        None | Some(Value::Null) => serde_json::Map::new(),
        Some(Value::Object(o)) => o.clone(),
        Some(_) => return Err(Error::param("params must be a JSON object")),
    };
    let mut points = vec![base];
    for (key, values) in grid {
        if values.is_empty() {
            return Err(Error::param(format!("grid entry {key:?} has no values")));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    points.iter().map(|p| spec_with(model, p)).collect()
}

/// Tallies of predicted vs. true labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_fake: usize,
    pub false_fake: usize,
    pub true_real: usize,
    pub false_real: usize,
}

impl Confusion {
    pub fn tally(predictions: &[Prediction], labels: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (p, &y) in predictions.iter().zip(labels) {
            match (p.label, y) {
                (true, true) => c.true_fake += 1,
                (true, false) => c.false_fake += 1,
                (false, false) => c.true_real += 1,
                (false, true) => c.false_real += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_fake + self.false_fake + self.true_real + self.false_real
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_fake + self.true_real) as f64 / self.total() as f64
    }

    pub fn error_rate(&self) -> f64 {
        100.0 * (1.0 - self.accuracy())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Delimited>,
    pub lexicons: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub model: String,
    /// Overrides applied to the model's default hyperparameters.
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `i` trains with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split_seed: u64,
    /// Honor the corpus' split column when present.
    #[serde(default = "yes")]
    pub use_given_split: bool,
    #[serde(default)]
    pub raw_text: bool,
    /// Restrict training to these feature names.
    #[serde(default)]
    pub feature_subset: Option<Vec<String>>,
    pub embeddings: Option<PathBuf>,
}

fn default_runs() -> usize {
    5
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            dataset: None,
            format: None,
            lexicons: None,
            rules: None,
            model: model.into(),
            params: None,
            grid: Grid::new(),
            runs: default_runs(),
            seed: 0,
            split_seed: 0,
            use_given_split: true,
            raw_text: false,
            feature_subset: None,
            embeddings: None,
        }
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"))
        {
            toml::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed + i).collect()
    }

    pub fn candidates(&self) -> Result<Vec<ModelSpec>> {
        expand_grid(&self.model, self.params.as_ref(), &self.grid)
    }
}

/// One seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub spec: ModelSpec,
    pub validation_error: f64,
    pub test_error: f64,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub report: RunReport,
    pub runs: Vec<RunOutcome>,
}

fn error_rate(model: &TrainedModel, data: &Dataset) -> Result<f64> {
    let preds = model.predict_dataset(data)?;
    Ok(Confusion::tally(&preds, data.labels()).error_rate())
}

/// Trains every candidate on `train`, scores it on `validation`, and keeps
/// the lowest error (ties: smaller model, then earlier candidate).
pub fn grid_search(
    candidates: &[ModelSpec],
    splits: &Splits,
    seed: u64,
) -> Result<(ModelSpec, TrainedModel, f64)> {
    let mut best: Option<(ModelSpec, TrainedModel, f64)> = None;
    for spec in candidates {
        let model = spec.train(&splits.train, Some(&splits.validation), seed)?;
        let err = error_rate(&model, &splits.validation)?;
        let better = match &best {
            None => true,
            Some((bs, _, be)) => err < *be || (err == *be && spec.complexity() < bs.complexity()),
        };
        if better {
            best = Some((spec.clone(), model, err));
        }
    }
    best.ok_or_else(|| Error::param("empty candidate list"))
}

/// Runs `config.runs` seeded trainings on fixed splits.
pub fn run_experiment(config: &ExperimentConfig, splits: &Splits) -> Result<Experiment> {
    if config.runs == 0 {
        return Err(Error::param("runs must be at least 1"));
    }
    let candidates = config.candidates().map_err(|e| e.at_stage("grid"))?;
    let runs = config
        .seeds()
        .par_iter()
        .map(|&seed| {
            let (spec, model, validation_error) = grid_search(&candidates, splits, seed)
                .map_err(|e| e.at_stage(&format!("train (seed {seed})")))?;
            let test_error =
                error_rate(&model, &splits.test).map_err(|e| e.at_stage("evaluate"))?;
            Ok(RunOutcome {
                seed,
                spec,
                validation_error,
                test_error,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = runs
        .iter()
        .map(|r| serde_json::to_string(&r.spec).expect("spec serializes"))
        .collect();
    let report = RunReport::from_errors(
        config.model.clone(),
        runs.iter().map(|r| r.test_error).collect(),
        runs.iter().map(|r| r.seed).collect(),
    )?
    .with_provenance(Provenance {
        config_hash: config.hash(),
        split_seed: config.split_seed,
        selected,
    });
    Ok(Experiment { report, runs })
}
