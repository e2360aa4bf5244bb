use super::tokenize::{split_sentences, tokenize_words};
use super::{Feature, FeatureVector, LexiconSet};
use crate::textprep::CleanDocument;

/// Raw counts behind a feature vector, useful for audits.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub words: usize,
    pub sentences: usize,
}

fn is_placeholder(w: &str) -> bool {
    w.starts_with('[')
}

/// Computes the feature vector of arbitrary text.
pub fn extract_from_text(text: &str, lexicons: &LexiconSet) -> Extraction {
    let tokens = tokenize_words(text);
    let words = tokens.len();
    let sentences = split_sentences(text).len();
    let mut fv = FeatureVector::zeros();
    if words == 0 {
        return Extraction {
            features: fv,
            words,
            sentences,
        };
    }
    let lowered: Vec<String> = tokens
        .iter()
        .map(|w| {
            if is_placeholder(w) {
                w.to_string()
            } else {
                w.to_lowercase()
            }
        })
        .collect();
    // Placeholders are replaced by an empty slot so they never match but still count.
    let matchable: Vec<&str> = lowered
        .iter()
        .map(|w| if is_placeholder(w) { "" } else { w.as_str() })
        .collect();
    let total = words as f64;
    for (feature, lex) in lexicons.iter() {
        let hits = lex.count_matches(&matchable);
        fv.set(feature, 100.0 * hits as f64 / total);
    }
    let bangs = text.chars().filter(|&c| c == '!').count();
    let questions = text.chars().filter(|&c| c == '?').count();
    fv.set(Feature::Exclam, 100.0 * bangs as f64 / total);
    fv.set(Feature::Qmark, 100.0 * questions as f64 / total);
    fv.set(Feature::Wps, total / sentences as f64);
    Extraction {
        features: fv,
        words,
        sentences,
    }
}

pub fn extract_features(doc: &CleanDocument, lexicons: &LexiconSet) -> FeatureVector {
    extract_from_text(&doc.text, lexicons).features
}
