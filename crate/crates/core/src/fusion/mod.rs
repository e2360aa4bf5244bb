//! Late fusion of pooled sentence embeddings with the linguistic features.
//!
//! Embeddings come from an external encoder (see [`embeddings`] for the file
//! format) or from the built-in hashing [`toy_encode`]. A fused example is the
//! embedding followed by the 18 normalized features; an MLP head is trained
//! on top.

pub mod embeddings;

use rayon::prelude::*;

pub use embeddings::{
    load_embeddings, read_embeddings, write_embeddings, EmbeddingManifest, EmbeddingRecord,
    EmbeddingTable, Pooling,
};

use crate::error::{Error, Result};
use crate::harness::{DatasetSplit, FeatureTable, RunReport};
use crate::lexfeat::{tokenize_words, FeatureVector, Normalizer, N_FEATURES};
use crate::models::{train_mlp, Dataset, MlpConfig, Splits, TrainLog, TrainedModel};
use crate::textprep::CleanDocument;

pub const TOY_MIN_DIM: usize = 8;
pub const TOY_MODEL_NAME: &str = "toy-hash";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Signed feature-hashed bag of words, L2-normalized. Empty text maps to the
/// zero vector.
pub fn toy_encode(text: &str, dim: usize) -> Result<Vec<f64>> {
    if dim < TOY_MIN_DIM {
        return Err(Error::param(format!(
            "toy encoder dim must be at least {TOY_MIN_DIM}"
        )));
    }
    let mut v = vec![0.0; dim];
    for w in tokenize_words(text) {
        let h = fnv1a(w.to_lowercase().as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

pub fn toy_encoder(doc: &CleanDocument, dim: usize) -> Result<EmbeddingRecord> {
    Ok(EmbeddingRecord {
        id: doc.id.clone(),
        vec: toy_encode(&doc.text, dim)?,
    })
}

/// Toy embeddings for a whole corpus, with a matching manifest.
pub fn toy_embeddings(docs: &[CleanDocument], dim: usize) -> Result<EmbeddingTable> {
    let records = docs
        .par_iter()
        .map(|d| toy_encoder(d, dim))
        .collect::<Result<Vec<_>>>()?;
    EmbeddingTable::new(
        EmbeddingManifest {
            model: TOY_MODEL_NAME.into(),
            dim,
            pooling: Pooling::Mean,
        },
        records,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedExample {
    pub id: String,
    pub fused: Vec<f64>,
    pub label: bool,
}

impl FusedExample {
    pub fn embedding(&self) -> &[f64] {
        &self.fused[..self.fused.len() - N_FEATURES]
    }

    pub fn features(&self) -> &[f64] {
        &self.fused[self.fused.len() - N_FEATURES..]
    }
}

/// Concatenates `embedding` and `features` (embedding first).
pub fn fuse(
    embedding: &EmbeddingRecord,
    id: &str,
    features: &FeatureVector,
    label: bool,
) -> Result<FusedExample> {
    if embedding.id != id {
        return Err(Error::Embedding {
            id: id.to_string(),
            message: format!("paired with embedding of {:?}", embedding.id),
        });
    }
    let mut fused = Vec::with_capacity(embedding.vec.len() + N_FEATURES);
    fused.extend_from_slice(&embedding.vec);
    fused.extend_from_slice(features.as_slice());
    Ok(FusedExample {
        id: id.to_string(),
        fused,
        label,
    })
}

/// One labeled document ready for fusion: id, normalized features, label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: FeatureVector,
    pub label: bool,
}

fn lookup<'a>(table: &'a EmbeddingTable, id: &str) -> Result<&'a EmbeddingRecord> {
    table.get(id).ok_or_else(|| Error::Embedding {
        id: id.to_string(),
        message: "no embedding for document".into(),
    })
}

/// Embedding-only design matrix for `rows`.
pub fn embedding_dataset(table: &EmbeddingTable, rows: &[FeatureRow]) -> Result<Dataset> {
    let dim = table.manifest.dim;
    let mut x = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        x.extend_from_slice(&lookup(table, &r.id)?.vec);
    }
    Dataset::new(x, dim, rows.iter().map(|r| r.label).collect())
}

/// Fused design matrix for `rows`.
pub fn fused_dataset(table: &EmbeddingTable, rows: &[FeatureRow]) -> Result<Dataset> {
    let width = table.manifest.dim + N_FEATURES;
    let mut x = Vec::with_capacity(rows.len() * width);
    for r in rows {
        x.extend(fuse(lookup(table, &r.id)?, &r.id, &r.features, r.label)?.fused);
    }
    Dataset::new(x, width, rows.iter().map(|r| r.label).collect())
}

/// Embedding-only and fused splits for a split corpus.
///
/// Features are z-scored with statistics of the training rows. With
/// `null_features` every feature is replaced by zero.
pub fn fusion_splits(
    table: &EmbeddingTable,
    features: &FeatureTable,
    split: &DatasetSplit,
    null_features: bool,
) -> Result<(Splits, Splits)> {
    let labels = features.labels_required()?;
    let train_rows: Vec<FeatureVector> =
        split.train.iter().map(|&i| features.features[i]).collect();
    let normalizer = Normalizer::fit(&train_rows)?;
    let rows = |idx: &[usize]| -> Vec<FeatureRow> {
        idx.iter()
            .map(|&i| FeatureRow {
                id: features.ids[i].clone(),
                features: if null_features {
                    FeatureVector::zeros()
                } else {
                    normalizer.apply(&features.features[i])
                },
                label: labels[i],
            })
            .collect()
    };
    let (tr, va, te) = (
        rows(&split.train),
        rows(&split.validation),
        rows(&split.test),
    );
    let plain = Splits {
        train: embedding_dataset(table, &tr)?,
        validation: embedding_dataset(table, &va)?,
        test: embedding_dataset(table, &te)?,
    };
    let fused = Splits {
        train: fused_dataset(table, &tr)?,
        validation: fused_dataset(table, &va)?,
        test: fused_dataset(table, &te)?,
    };
    Ok((plain, fused))
}

/// Trains the MLP head on fused (or embedding-only) vectors.
pub fn train_fusion_head(
    train: &Dataset,
    validation: &Dataset,
    config: &MlpConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainLog)> {
    if validation.n_features() != train.n_features() {
        return Err(Error::Dimension {
            expected: train.n_features(),
            got: validation.n_features(),
        });
    }
    let (model, log) = train_mlp(train, validation, config, seed)?;
    Ok((TrainedModel::Mlp(model), log))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionComparison {
    pub plain: RunReport,
    pub fused: RunReport,
    /// Relative mean-error reduction in percent.
    pub improvement: f64,
}

fn run_head(splits: &Splits, config: &MlpConfig, seed: u64) -> Result<f64> {
    let (model, _) = train_fusion_head(&splits.train, &splits.validation, config, seed)?;
    model.error_rate(&splits.test)
}

/// Trains the head on embedding-only and fused inputs for every seed.
///
/// Seeds run in parallel; each training run is single-threaded.
pub fn compare_fusion(
    plain: &Splits,
    fused: &Splits,
    config: &MlpConfig,
    seeds: &[u64],
) -> Result<FusionComparison> {
    if seeds.len() < 2 {
        return Err(Error::param("fusion comparison needs at least two runs"));
    }
    let pairs = seeds
        .par_iter()
        .map(|&s| Ok((run_head(plain, config, s)?, run_head(fused, config, s)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let plain = RunReport::from_errors(
        "embedding",
        pairs.iter().map(|p| p.0).collect(),
        seeds.to_vec(),
    )?;
    let fused = RunReport::from_errors(
        "embedding+features",
        pairs.iter().map(|p| p.1).collect(),
        seeds.to_vec(),
    )?;
    let improvement = crate::harness::improvement(plain.mean, fused.mean);
    Ok(FusionComparison {
        plain,
        fused,
        improvement,
    })
}
