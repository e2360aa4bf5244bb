//! Benchmark fixtures.

use std::path::Path;

use lexdetect::harness::{prepare_splits, split_dataset, FeatureTable};
use lexdetect::lexfeat::{load_lexicons, LexiconSet};
use lexdetect::textprep::preprocess_corpus;
use lexdetect::{synth, CleanDocument, RewriteRules, Splits};

pub fn lexicons() -> LexiconSet {
    load_lexicons(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/lexicons"))
        .expect("shipped lexicons")
}

/// Preprocessed synthetic posts.
pub fn clean_corpus(n: usize) -> Vec<CleanDocument> {
    preprocess_corpus(&synth::complementary_corpus(n, 1), &RewriteRules::default())
}

/// Normalized feature splits of [`clean_corpus`].
pub fn feature_splits(n: usize) -> Splits {
    let table = FeatureTable::from_clean(&clean_corpus(n), &lexicons(), None);
    let split = split_dataset(table.len(), 0, None).expect("corpus is large enough");
    prepare_splits(&table, &split).expect("labelled corpus").0
}
