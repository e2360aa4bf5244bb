use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use lexdetect::fusion::{
    self, compare_fusion, fusion_splits, load_embeddings, toy_embeddings, write_embeddings,
};
use lexdetect::harness::{
    feature_columns, load_dataset, load_grid_file, prepare_splits, render_paired, render_reports,
    run_experiment, split_dataset, write_atomic, write_corpus, Confusion, Corpus, DatasetSplit,
    Delimited, ExperimentConfig, FeatureTable, Table,
};
use lexdetect::lexfeat::{load_lexicons, LexiconSet};
use lexdetect::models::{
    export_rule, gain_importance, EvalSchedule, MlpConfig, ModelFile, RuleOptions,
};
use lexdetect::textprep::{preprocess_corpus, CleanDocument, Placeholder};
use lexdetect::{Normalizer, RewriteRules, TrainedModel, FEATURE_NAMES};

use crate::{
    Cli, Command, CorpusArgs, EvalArgs, ExplainArgs, ExtractArgs, FuseArgs, ImportanceArgs,
    PreprocessArgs, TrainArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(cli, a),
        Command::Eval(a) => eval(a),
        Command::Importance(a) => importance(a),
        Command::Explain(a) => explain(a),
        Command::Fuse(a) => fuse(cli, a),
    }
}

fn format_for(path: &Path, flag: Option<&str>) -> Result<Delimited> {
    Ok(match flag {
        Some(f) => Delimited::from_str(f)?,
        None => Delimited::from_path(path),
    })
}

fn load_rules(path: Option<&Path>) -> Result<RewriteRules> {
    Ok(match path {
        Some(p) => RewriteRules::from_path(p)?,
        None => RewriteRules::default(),
    })
}

fn load_corpus(a: &CorpusArgs) -> Result<(Corpus, Delimited)> {
    let format = format_for(&a.input, a.in_format.as_deref())?;
    Ok((load_dataset(&a.input, format)?, format))
}

fn clean_corpus(a: &CorpusArgs) -> Result<(Corpus, Vec<CleanDocument>, Delimited)> {
    let (corpus, format) = load_corpus(a)?;
    let rules = load_rules(a.rules.as_deref())?;
    let clean = preprocess_corpus(&corpus.docs, &rules);
    Ok((corpus, clean, format))
}

fn lexicons(dir: &Path) -> Result<LexiconSet> {
    load_lexicons(dir).with_context(|| format!("loading lexicons from {}", dir.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    write_atomic(path, bytes.as_ref())?;
    Ok(())
}

fn split_for(
    n: usize,
    given: Option<&[lexdetect::harness::SplitTag]>,
    seed: u64,
) -> Result<DatasetSplit> {
    Ok(split_dataset(n, seed, given)?)
}

fn preprocess(a: &PreprocessArgs) -> Result<()> {
    let (corpus, clean, in_format) = clean_corpus(&a.corpus)?;
    let out_format = match &a.out_format {
        Some(f) => Delimited::from_str(f)?,
        None => in_format,
    };
    let bytes = write_corpus(
        out_format,
        clean
            .iter()
            .map(|d| (d.id.as_str(), d.text.as_str(), d.label)),
        corpus.splits.as_deref(),
    );
    write(&a.output, bytes)?;
    let mut totals: BTreeMap<Placeholder, usize> = BTreeMap::new();
    for d in &clean {
        for (k, v) in &d.placeholder_counts {
            *totals.entry(*k).or_default() += v;
        }
    }
    println!(
        "preprocessed {} documents -> {}",
        clean.len(),
        a.output.display()
    );
    for p in Placeholder::ALL {
        println!(
            "  {:<10}{}",
            p.token(),
            totals.get(&p).copied().unwrap_or(0)
        );
    }
    let unknown: usize = clean.iter().map(|d| d.unknown_emoji).sum();
    if unknown > 0 {
        eprintln!("warning: {unknown} unrecognized emoji replaced by \"unknown\"");
    }
    Ok(())
}

fn featurize(corpus: &CorpusArgs, lexicon_dir: &Path, raw: bool) -> Result<FeatureTable> {
    let lex = lexicons(lexicon_dir)?;
    if raw {
        let (c, _) = load_corpus(corpus)?;
        Ok(FeatureTable::from_raw(&c.docs, &lex, c.splits))
    } else {
        let (c, clean, _) = clean_corpus(corpus)?;
        Ok(FeatureTable::from_clean(&clean, &lex, c.splits))
    }
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let mut table = featurize(&a.corpus, &a.lexicons, a.raw)?;
    if let Some(path) = &a.fit_normalizer {
        let split = split_for(table.len(), table.splits.as_deref(), a.split_seed)?;
        let train: Vec<_> = split.train.iter().map(|&i| table.features[i]).collect();
        let n = Normalizer::fit(&train).context("fitting normalizer on the training split")?;
        write(path, n.to_json())?;
        table.splits = Some(split.tags(table.len()));
        println!(
            "normalizer fitted on {} training documents -> {}",
            split.train.len(),
            path.display()
        );
    }
    if let Some(path) = &a.normalize {
        table = table.normalized(&Normalizer::load(path)?);
    }
    write(&a.output, table.to_csv())?;
    println!(
        "extracted {} features for {} documents -> {}",
        FEATURE_NAMES.len(),
        table.len(),
        a.output.display()
    );
    Ok(())
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    write(path, table.to_text())?;
    write(&path.with_extension("csv"), table.to_csv())
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    if let Some(p) = &a.report {
        for sibling in [p.clone(), p.with_extension("csv"), p.with_extension("json")] {
            if sibling == a.output {
                bail!(
                    "report file {} would overwrite the model output",
                    sibling.display()
                );
            }
        }
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(a.model.clone().unwrap_or_else(|| "gbdt".into())),
    };
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.split_seed {
        cfg.split_seed = s;
    }
    if let Some(fs) = &a.feature_subset {
        cfg.feature_subset = Some(fs.clone());
    }
    if let Some(p) = &a.params {
        let v: Value = serde_json::from_str(p).context("--params must be a JSON object")?;
        cfg.params = Some(v);
    }
    if let Some(d) = a.max_depth {
        let mut obj = match cfg.params.take() {
            Some(Value::Object(o)) => o,
            None | Some(Value::Null) => serde_json::Map::new(),
            Some(_) => bail!("params must be a JSON object"),
        };
        obj.insert("max_depth".into(), Value::from(d));
        cfg.params = Some(Value::Object(obj));
    }
    if let Some(g) = &a.grid {
        let grids = load_grid_file(g)?;
        let key = lexdetect::ModelSpec::default_for(&cfg.model)?
            .name()
            .to_string();
        if let Some(grid) = grids.get(&key) {
            cfg.grid = grid.clone();
        }
    }
    if a.max_depth.is_some() {
        cfg.grid.remove("max_depth");
    }

    let table = FeatureTable::load(&a.features)?;
    let given = if cfg.use_given_split {
        table.splits.as_deref()
    } else {
        None
    };
    let split = split_for(table.len(), given, cfg.split_seed)?;
    let (mut splits, normalizer) = prepare_splits(&table, &split)?;
    let names: Vec<String> = match &cfg.feature_subset {
        Some(fs) => fs.clone(),
        None => FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let columns = feature_columns(&names)?;
    if cfg.feature_subset.is_some() {
        splits = splits.select_columns(&columns)?;
    }
    let experiment = run_experiment(&cfg, &splits)?;
    let first = &experiment.runs[0];
    let file = ModelFile::new(
        first.spec.clone(),
        first.seed,
        names,
        columns.iter().map(|c| c + 1).collect(),
        Some(normalizer),
        first.model.clone(),
    );
    write(&a.output, file.to_json())?;
    let table = render_reports(std::slice::from_ref(&experiment.report))?;
    print!("{}", table.to_text());
    for r in &experiment.runs {
        println!(
            "seed {}: validation {:.2}%, test {:.2}%",
            r.seed, r.validation_error, r.test_error
        );
    }
    if let Some(p) = &a.report {
        write_table(p, &table)?;
        write(
            &p.with_extension("json"),
            serde_json::to_string_pretty(&experiment.report)?,
        )?;
    }
    println!(
        "model ({}, seed {}) -> {}",
        first.spec.name(),
        first.seed,
        a.output.display()
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let table = match (&a.features, &a.input) {
        (Some(f), _) => FeatureTable::load(f)?,
        (None, Some(input)) => {
            let corpus = CorpusArgs {
                input: input.clone(),
                in_format: a.in_format.clone(),
                rules: a.rules.clone(),
            };
            featurize(
                &corpus,
                a.lexicons.as_deref().expect("clap enforces --lexicons"),
                false,
            )?
        }
        (None, None) => bail!("either --features or --input is required"),
    };
    let table = match &file.normalizer {
        Some(n) => table.normalized(n),
        None => table,
    };
    let columns = feature_columns(&file.features)?;
    let mut out = String::from("id,score,prediction\n");
    let mut preds = Vec::with_capacity(table.len());
    for (id, fv) in table.ids.iter().zip(&table.features) {
        let x: Vec<f64> = columns.iter().map(|&c| fv.0[c]).collect();
        let p = file.model.predict(&x)?;
        out.push_str(&format!(
            "{id},{},{}\n",
            p.score,
            if p.label { "fake" } else { "real" }
        ));
        preds.push(p);
    }
    if let Some(o) = &a.output {
        write(o, &out)?;
    }
    let labeled: Vec<(usize, bool)> = table
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|l| (i, l)))
        .collect();
    println!(
        "scored {} documents with {} model",
        table.len(),
        file.model.kind()
    );
    if !labeled.is_empty() {
        let p: Vec<_> = labeled.iter().map(|&(i, _)| preds[i]).collect();
        let y: Vec<bool> = labeled.iter().map(|&(_, l)| l).collect();
        let c = Confusion::tally(&p, &y);
        println!("error rate: {:.2}% ({} labeled)", c.error_rate(), c.total());
        println!(
            "confusion: fake->fake {}, real->fake {}, real->real {}, fake->real {}",
            c.true_fake, c.false_fake, c.true_real, c.false_real
        );
    }
    Ok(())
}

fn importance(a: &ImportanceArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let TrainedModel::BoostedEnsemble(ens) = &file.model else {
        bail!(
            "gain importance needs a gbdt model, {} is {}",
            a.model.display(),
            file.model.kind()
        );
    };
    let report = gain_importance(ens, &file.features)?;
    write(&a.output, report.to_csv())?;
    let chart = a
        .chart
        .clone()
        .unwrap_or_else(|| a.output.with_extension("dat"));
    write(&chart, report.to_chart_data())?;
    for e in &report.entries {
        println!("{:<14}{:>8.2}%", e.feature, e.importance);
    }
    println!(
        "total {:.6}% -> {} (chart data {})",
        report.total(),
        a.output.display(),
        chart.display()
    );
    Ok(())
}

fn explain(a: &ExplainArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let TrainedModel::DecisionTree(tree) = &file.model else {
        bail!(
            "explain needs a tree model, {} is {}",
            a.model.display(),
            file.model.kind()
        );
    };
    let opts = RuleOptions {
        max_depth: a.max_depth,
        feature_names: file.features.clone(),
        feature_numbers: file.feature_numbers.clone(),
    };
    print!("{}", export_rule(tree, &opts)?);
    Ok(())
}

fn fuse(cli: &Cli, a: &FuseArgs) -> Result<()> {
    let (corpus, clean, _) = clean_corpus(&a.corpus)?;
    let lex = lexicons(&a.lexicons)?;
    let features = FeatureTable::from_clean(&clean, &lex, corpus.splits.clone());
    let table = match &a.embeddings {
        Some(p) => load_embeddings(p)?,
        None => toy_embeddings(&clean, a.toy_dim.unwrap_or(64))?,
    };
    if let Some(p) = &a.write_embeddings {
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &table)?;
        write(p, buf)?;
    }
    let split = split_for(features.len(), features.splits.as_deref(), a.split_seed)?;
    let (plain, fused) = fusion_splits(&table, &features, &split, a.null_features)?;
    let mut config = MlpConfig::fusion_head();
    if let Some(e) = a.max_epochs {
        config.max_epochs = e;
    }
    if let Some(s) = a.eval_steps {
        config.eval = EvalSchedule::Steps(s);
    }
    if let Some(h) = &a.hidden {
        config.hidden = h.clone();
    }
    let base = cli.seed.unwrap_or(0);
    let seeds: Vec<u64> = (0..a.runs as u64).map(|i| base + i).collect();
    let cmp = compare_fusion(&plain, &fused, &config, &seeds)?;
    let t = render_paired(&cmp.plain, &cmp.fused);
    print!("{}", t.to_text());
    println!(
        "embeddings: {} (dim {}, {} pooling), {} runs",
        table.manifest.model,
        table.manifest.dim,
        match table.manifest.pooling {
            fusion::Pooling::Mean => "mean",
            fusion::Pooling::Cls => "cls",
        },
        seeds.len()
    );
    if let Some(p) = &a.report {
        write_table(p, &t)?;
    }
    Ok(())
}
