//! Corpus I/O, splitting, seeded multi-run experiments and report tables.

mod dataset;
mod experiment;
mod features;
mod io;
mod report;
mod split;

pub use dataset::{
    label_name, load_dataset, parse_label, read_dataset, write_corpus, Corpus, Delimited, SplitTag,
};
pub use experiment::{
    expand_grid, grid_search, load_grid_file, run_experiment, spec_with, Confusion, Experiment,
    ExperimentConfig, Grid, GridFile, RunOutcome,
};
pub use features::{feature_columns, prepare_splits, FeatureTable};
pub use io::write_atomic;
pub use report::{improvement, render_paired, render_reports, Provenance, RunReport, Table};
pub use split::{split_dataset, split_sizes, DatasetSplit, MIN_SPLIT_DOCS};
