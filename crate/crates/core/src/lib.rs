//! Lexicon-feature fake news detection.
//!
//! The pipeline runs in four layers:
//!
//! * [`textprep`] rewrites raw social-media posts into a canonical form
//!   (lowercase, placeholder tokens, textual emoji names).
//! * [`lexfeat`] counts category lexicon hits and structural statistics,
//!   producing an 18-value [`FeatureVector`] per document, and z-scores them.
//! * [`models`] trains small interpretable classifiers on those vectors and
//!   reports gain importance and exportable decision rules.
//! * [`fusion`] concatenates pooled sentence embeddings with the normalized
//!   features and trains an MLP head on top.
//!
//! [`harness`] ties everything together into seeded multi-run experiments.

pub mod error;
pub mod fusion;
pub mod harness;
pub mod lexfeat;
pub mod models;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
pub use lexfeat::{FeatureVector, Normalizer, FEATURE_NAMES, N_FEATURES};
pub use models::{Dataset, ModelSpec, Prediction, Splits, TrainedModel};
pub use textprep::{CleanDocument, RawDocument, RewriteRules};
