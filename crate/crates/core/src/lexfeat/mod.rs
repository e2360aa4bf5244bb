//! Lexicon-based linguistic features.
//!
//! Each document maps to 18 values: 15 lexical categories (percentage of
//! words found in the category's lexicon), words per sentence, and the
//! exclamation / question mark rates (percentage of words).

mod features;
mod lexicon;
mod normalize;
mod tokenize;

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

pub use features::{extract_features, extract_from_text, Extraction};
pub use lexicon::{load_lexicons, CategoryLexicon, LexiconEntry, LexiconSet};
pub use normalize::{Normalizer, NORMALIZER_EPSILON};
pub use tokenize::{split_sentences, tokenize_words};

pub const N_FEATURES: usize = 18;

/// Feature names in column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "feeling",
    "assent",
    "perception",
    "discrep",
    "certitude",
    "cause",
    "wps",
    "space",
    "auditory",
    "allnone",
    "motion",
    "tone_neg",
    "swear",
    "tone_pos",
    "exclam",
    "qmark",
    "netspeak",
    "conversation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Feeling,
    Assent,
    Perception,
    Discrep,
    Certitude,
    Cause,
    Wps,
    Space,
    Auditory,
    Allnone,
    Motion,
    ToneNeg,
    Swear,
    TonePos,
    Exclam,
    Qmark,
    Netspeak,
    Conversation,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::Feeling,
        Feature::Assent,
        Feature::Perception,
        Feature::Discrep,
        Feature::Certitude,
        Feature::Cause,
        Feature::Wps,
        Feature::Space,
        Feature::Auditory,
        Feature::Allnone,
        Feature::Motion,
        Feature::ToneNeg,
        Feature::Swear,
        Feature::TonePos,
        Feature::Exclam,
        Feature::Qmark,
        Feature::Netspeak,
        Feature::Conversation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Feature::ALL[i])
    }

    /// Whether the feature is backed by a lexicon file.
    pub fn is_lexical(self) -> bool {
        !matches!(self, Feature::Wps | Feature::Exclam | Feature::Qmark)
    }

    pub fn lexical() -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(|f| f.is_lexical())
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 18 feature values of one document, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn zeros() -> Self {
        Self([0.0; N_FEATURES])
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: Feature, v: f64) {
        self.0[f.index()] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(values: &[f64]) -> crate::Result<Self> {
        let arr: [f64; N_FEATURES] = values.try_into().map_err(|_| crate::Error::Dimension {
            expected: N_FEATURES,
            got: values.len(),
        })?;
        Ok(Self(arr))
    }
}

impl Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, f: Feature) -> &f64 {
        &self.0[f.index()]
    }
}
