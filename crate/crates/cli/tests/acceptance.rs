//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lexdetect::fusion::{compare_fusion, fusion_splits, toy_embeddings};
use lexdetect::harness::{
    load_dataset, prepare_splits, render_paired, run_experiment, split_dataset, Delimited,
    ExperimentConfig, FeatureTable, RunReport,
};
use lexdetect::lexfeat::{extract_from_text, load_lexicons, Feature, LexiconSet};
use lexdetect::models::{
    export_rule, gain_importance, train_decision_tree, train_gbdt, EvalSchedule, GbdtParams,
    MlpConfig, Node, RuleOptions, TreeParams,
};
use lexdetect::synth;
use lexdetect::textprep::preprocess_corpus;
use lexdetect::{
    CleanDocument, Dataset, ModelSpec, RewriteRules, Splits, TrainedModel, FEATURE_NAMES,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn lexicons() -> LexiconSet {
    load_lexicons(&data_dir().join("lexicons")).expect("shipped lexicons load")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn feature_oracle() -> Check {
    let lex = lexicons();
    let corpus = load_dataset(&fixtures().join("oracle_corpus.tsv"), Delimited::Tsv).map_err(e)?;
    let expected = std::fs::read_to_string(fixtures().join("oracle_expected.csv")).map_err(e)?;
    let mut rdr = csv::Reader::from_reader(expected.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(e)?.iter().map(String::from).collect();
    let mut rows: HashMap<String, HashMap<String, String>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(e)?;
        let row = header
            .iter()
            .cloned()
            .zip(rec.iter().map(String::from))
            .collect::<HashMap<_, _>>();
        rows.insert(row["id"].clone(), row);
    }
    ensure(corpus.docs.len() == 50 && rows.len() == 50, || {
        "fixture must hold 50 documents".into()
    })?;
    let mut worst = 0.0f64;
    for raw in &corpus.docs {
        let doc = CleanDocument::from_clean_text(raw.id.clone(), raw.text.clone(), raw.label);
        let got = extract_from_text(&doc.text, &lex);
        let want = rows
            .get(&doc.id)
            .ok_or_else(|| format!("{} missing from oracle", doc.id))?;
        let int = |k: &str| want[k].parse::<usize>().map_err(e);
        ensure(got.words == int("words")?, || {
            format!("{}: words {} vs {}", doc.id, got.words, want["words"])
        })?;
        ensure(got.sentences == int("sentences")?, || {
            format!(
                "{}: sentences {} vs {}",
                doc.id, got.sentences, want["sentences"]
            )
        })?;
        for f in Feature::ALL {
            let w: f64 = want[f.name()].parse().map_err(e)?;
            let g = got.features.get(f);
            if f.is_lexical() {
                worst = worst.max((g - w).abs());
                ensure((g - w).abs() <= 1e-9, || {
                    format!("{}: {} = {g} vs oracle {w}", doc.id, f.name())
                })?;
            } else {
                ensure(g == w, || {
                    format!("{}: {} = {g} vs hand count {w}", doc.id, f.name())
                })?;
            }
        }
    }
    Ok(format!("50 documents, max lexical deviation {worst:.1e}"))
}

fn normalization() -> Check {
    let rules = RewriteRules::default();
    let docs = preprocess_corpus(&synth::feeling_corpus(600, 3), &rules);
    let table = FeatureTable::from_clean(&docs, &lexicons(), None);
    let mut worst = 0.0f64;
    let mut constant = 0;
    for seed in 0..5 {
        let split = split_dataset(table.len(), seed, None).map_err(e)?;
        let (splits, norm) = prepare_splits(&table, &split).map_err(e)?;
        for f in 0..FEATURE_NAMES.len() {
            let mean = splits.train.rows().map(|r| r[f]).sum::<f64>() / splits.train.len() as f64;
            worst = worst.max(mean.abs());
            ensure(mean.abs() < 1e-9, || {
                format!("{}: train mean {mean:e}", FEATURE_NAMES[f])
            })?;
            let c = table.features[split.train[0]].0[f];
            if split.train.iter().all(|&i| table.features[i].0[f] == c) {
                constant += 1;
                let parts = [
                    (&split.train, &splits.train),
                    (&split.validation, &splits.validation),
                    (&split.test, &splits.test),
                ];
                for (idx, data) in parts {
                    for (k, &i) in idx.iter().enumerate() {
                        if table.features[i].0[f] == c {
                            ensure(data.value(k, f) == 0.0, || {
                                format!(
                                    "{}: constant value maps to {}",
                                    FEATURE_NAMES[f],
                                    data.value(k, f)
                                )
                            })?;
                        }
                    }
                }
                ensure(norm.sd[f] == 0.0, || {
                    format!("{}: sd {}", FEATURE_NAMES[f], norm.sd[f])
                })?;
            }
        }
    }
    ensure(constant > 0, || {
        "corpus has no constant feature to check".into()
    })?;
    Ok(format!(
        "max |train mean| {worst:.1e}, {constant} constant column checks"
    ))
}

fn brute_force_root(data: &Dataset) -> Option<(usize, f64, f64)> {
    let n = data.len();
    let gini = |pos: usize, n: usize| {
        if n == 0 {
            0.0
        } else {
            let p = pos as f64 / n as f64;
            n as f64 * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        }
    };
    let total_pos = data.positives();
    let parent = gini(total_pos, n);
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for f in 0..data.n_features() {
        let mut values: Vec<f64> = (0..n).map(|i| data.value(i, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let left: Vec<usize> = (0..n).filter(|&i| data.value(i, f) <= t).collect();
            let lp = left.iter().filter(|&&i| data.label(i)).count();
            let score = gini(lp, left.len()) + gini(total_pos - lp, n - left.len());
            candidates.push((f, t, score));
        }
    }
    let min = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let (f, t, score) = *candidates.iter().find(|c| c.2 <= min + 1e-9)?;
    Some((f, t, parent - score))
}

fn split_search() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut splits, mut leaves) = (0, 0);
    for case in 0..300 {
        let n = rng.random_range(2..=12usize);
        let d = rng.random_range(1..=3usize);
        let x: Vec<f64> = (0..n * d)
            .map(|_| rng.random_range(0..5) as f64 * 0.5)
            .collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let data = Dataset::new(x, d, y).map_err(e)?;
        let tree = train_decision_tree(
            &data,
            &TreeParams {
                max_depth: Some(1),
                min_leaf: 1,
            },
        )
        .map_err(e)?;
        match (brute_force_root(&data), tree.root()) {
            (
                Some((bf, bt, dec)),
                Node::Split {
                    feature, threshold, ..
                },
            ) if dec > 1e-9 => {
                ensure(*feature == bf && *threshold == bt, || {
                    format!("case {case}: tree split x{feature} <= {threshold}, brute force x{bf} <= {bt}")
                })?;
                splits += 1;
            }
            (best, Node::Leaf { .. }) if best.is_none_or(|b| b.2 <= 1e-9) => leaves += 1,
            (best, root) => {
                return Err(format!(
                    "case {case}: brute force {best:?}, tree root {root:?}"
                ))
            }
        }
    }
    Ok(format!(
        "300 datasets: {splits} splits and {leaves} leaves agree"
    ))
}

fn importance() -> Check {
    let data = synth::one_informative(1000, 6, 9);
    let model = train_gbdt(&data, &GbdtParams::default(), 0).map_err(e)?;
    let names: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
    let rep = gain_importance(&model, &names).map_err(e)?;
    ensure((rep.total() - 100.0).abs() <= 1e-6, || {
        format!("sum {}", rep.total())
    })?;
    let share = rep.get("f0").unwrap_or(0.0);
    ensure(share >= 95.0, || format!("informative feature {share:.2}%"))?;

    let planted = synth::planted_signal_splits(1);
    let model = train_gbdt(&planted.train, &GbdtParams::default(), 0).map_err(e)?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let rep18 = gain_importance(&model, &names).map_err(e)?;
    ensure((rep18.total() - 100.0).abs() <= 1e-6, || {
        format!("planted sum {}", rep18.total())
    })?;
    Ok(format!(
        "sums {:.9} and {:.9}; informative feature {share:.2}%",
        rep.total(),
        rep18.total()
    ))
}

fn single_feature_rule() -> Check {
    let docs = preprocess_corpus(&synth::feeling_corpus(3000, 11), &RewriteRules::default());
    let table = FeatureTable::from_clean(&docs, &lexicons(), None);
    let split = split_dataset(table.len(), 0, None).map_err(e)?;
    let (splits, _) = prepare_splits(&table, &split).map_err(e)?;
    let col = Feature::from_name("feeling").unwrap().index();
    let s = splits.select_columns(&[col]).map_err(e)?;
    let tree = train_decision_tree(
        &s.train,
        &TreeParams {
            max_depth: Some(1),
            min_leaf: 1,
        },
    )
    .map_err(e)?;
    let rule = export_rule(&tree, &RuleOptions::new(&["feeling".to_string()])).map_err(e)?;
    let lines: Vec<&str> = rule.lines().collect();
    ensure(lines.len() == 7, || {
        format!("rule has {} lines:\n{rule}", lines.len())
    })?;
    ensure(lines[0] == "input: a news t", || {
        format!("line 1: {:?}", lines[0])
    })?;
    ensure(
        lines[1] == "x1 <- the value of the linguistic feeling feature of t",
        || format!("line 2: {:?}", lines[1]),
    )?;
    let threshold: f64 = lines[2]
        .strip_prefix("if x1 <= ")
        .and_then(|r| r.strip_suffix(" then"))
        .ok_or_else(|| format!("line 3: {:?}", lines[2]))?
        .parse()
        .map_err(e)?;
    ensure(
        lines[3] == "    return true;   // this is a fake news",
        || format!("line 4: {:?}", lines[3]),
    )?;
    ensure(lines[4] == "else", || format!("line 5: {:?}", lines[4]))?;
    ensure(
        lines[5] == "    return false;  // this is not a fake news",
        || format!("line 6: {:?}", lines[5]),
    )?;
    ensure(lines[6] == "end", || format!("line 7: {:?}", lines[6]))?;
    let err = TrainedModel::DecisionTree(tree)
        .error_rate(&s.test)
        .map_err(e)?;
    ensure(err < 35.0 && (err - 28.4).abs() <= 10.0, || {
        format!("held-out error {err:.2}%")
    })?;
    Ok(format!(
        "threshold {threshold:.3}, held-out error {err:.2}% (reference 28.4 +/- 10)"
    ))
}

const MODELS: [&str; 5] = ["svm", "tree", "forest", "gbdt", "mlp"];

fn planted_signal() -> Check {
    let planted = synth::planted_signal_splits(0);
    let random = Splits {
        train: synth::random_labels(2000, 18, 101),
        validation: synth::random_labels(600, 18, 102),
        test: synth::random_labels(2000, 18, 103),
    };
    let mut parts = Vec::new();
    for name in MODELS {
        let spec = ModelSpec::default_for(name).map_err(e)?;
        let m = spec
            .train(&planted.train, Some(&planted.validation), 0)
            .map_err(e)?;
        let planted_err = m.error_rate(&planted.test).map_err(e)?;
        let m = spec
            .train(&random.train, Some(&random.validation), 0)
            .map_err(e)?;
        let random_err = m.error_rate(&random.test).map_err(e)?;
        ensure(planted_err <= 5.0, || {
            format!("{name}: planted error {planted_err:.2}%")
        })?;
        ensure((45.0..=55.0).contains(&random_err), || {
            format!("{name}: random-label error {random_err:.2}%")
        })?;
        parts.push(format!("{name} {planted_err:.1}/{random_err:.1}"));
    }
    Ok(format!("planted/random error: {}", parts.join(", ")))
}

/// Head config for the small synthetic fusion corpus.
fn fusion_config() -> MlpConfig {
    MlpConfig {
        max_epochs: 40,
        eval: EvalSchedule::Steps(15),
        ..MlpConfig::fusion_head()
    }
}

fn fusion_inputs(n: usize, null_features: bool) -> Result<(Splits, Splits), String> {
    let docs = preprocess_corpus(&synth::complementary_corpus(n, 5), &RewriteRules::default());
    let table = FeatureTable::from_clean(&docs, &lexicons(), None);
    let emb = toy_embeddings(&docs, 64).map_err(e)?;
    let split = split_dataset(table.len(), 0, None).map_err(e)?;
    fusion_splits(&emb, &table, &split, null_features).map_err(e)
}

fn fusion() -> Check {
    let (plain, fused) = fusion_inputs(1500, false)?;
    let cmp = compare_fusion(&plain, &fused, &fusion_config(), &[0, 1, 2, 3, 4]).map_err(e)?;
    let msg = format!(
        "embedding {:.2}%, fused {:.2}%, improvement {:.1}%",
        cmp.plain.mean, cmp.fused.mean, cmp.improvement
    );
    ensure(
        cmp.fused.mean < cmp.plain.mean && cmp.improvement >= 5.0,
        || msg.clone(),
    )?;
    Ok(msg)
}

fn tiny_corpus_outputs() -> Result<String, String> {
    let mut out = String::new();
    let sample = load_dataset(&data_dir().join("sample_corpus.tsv"), Delimited::Tsv).map_err(e)?;
    let rules = RewriteRules::from_path(&data_dir().join("rewrite_rules.json")).map_err(e)?;
    let clean = preprocess_corpus(&sample.docs, &rules);
    for d in &clean {
        out.push_str(&format!("{}\t{}\n", d.id, d.text));
    }
    let table = FeatureTable::from_clean(&clean, &lexicons(), None);
    out.push_str(&table.to_csv());

    let planted = synth::planted_signal_splits(4);
    for name in ["forest", "gbdt"] {
        let m = ModelSpec::default_for(name)
            .map_err(e)?
            .train(&planted.train, None, 3)
            .map_err(e)?;
        out.push_str(&m.to_json());
    }
    let mlp = ModelSpec::Mlp(MlpConfig {
        hidden: vec![16, 16],
        max_epochs: 5,
        ..MlpConfig::default()
    });
    out.push_str(
        &mlp.train(&planted.train, Some(&planted.validation), 3)
            .map_err(e)?
            .to_json(),
    );
    for name in ["svm", "forest", "gbdt"] {
        let exp = run_experiment(&ExperimentConfig::new(name), &planted).map_err(e)?;
        out.push_str(&serde_json::to_string(&exp.report).map_err(e)?);
        for r in &exp.runs {
            let preds = r.model.predict_dataset(&planted.test).map_err(e)?;
            out.push_str(&format!(
                "{:?}",
                preds.iter().map(|p| p.score).collect::<Vec<_>>()
            ));
        }
    }
    let (plain, fused) = fusion_inputs(300, false)?;
    let cfg = MlpConfig {
        hidden: vec![32],
        max_epochs: 3,
        ..fusion_config()
    };
    let cmp = compare_fusion(&plain, &fused, &cfg, &[7, 8]).map_err(e)?;
    out.push_str(&format!("{:?}{:?}", cmp.plain, cmp.fused));
    Ok(out)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn determinism() -> Check {
    let max = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .max(2);
    let one = in_pool(1, tiny_corpus_outputs)?;
    let many = in_pool(max, tiny_corpus_outputs)?;
    let again = in_pool(max, tiny_corpus_outputs)?;
    ensure(one == many, || {
        format!("outputs differ between 1 and {max} threads")
    })?;
    ensure(many == again, || {
        "outputs differ between identical runs".into()
    })?;

    let dir = tempfile::tempdir().map_err(e)?;
    let feats = dir.path().join("f.csv");
    cli(&[
        "extract",
        "--input",
        &data_dir().join("sample_corpus.tsv").display().to_string(),
        "--lexicons",
        &data_dir().join("lexicons").display().to_string(),
        "--output",
        &feats.display().to_string(),
    ])?;
    let mut models = Vec::new();
    for threads in ["1", &max.to_string()] {
        let out = dir.path().join(format!("m{threads}.json"));
        let report = dir.path().join(format!("r{threads}.txt"));
        cli(&[
            "--threads",
            threads,
            "train",
            "--features",
            &feats.display().to_string(),
            "--model",
            "forest",
            "--output",
            &out.display().to_string(),
            "--report",
            &report.display().to_string(),
        ])?;
        models.push((
            std::fs::read(&out).map_err(e)?,
            std::fs::read(&report).map_err(e)?,
        ));
    }
    ensure(models[0] == models[1], || {
        "CLI model or report differs across thread counts".into()
    })?;
    Ok(format!(
        "{} bytes identical across 1/{max} threads and reruns; CLI outputs identical",
        one.len()
    ))
}

fn report_arithmetic() -> Check {
    let r =
        RunReport::from_errors("m", vec![2.0, 1.9, 1.8, 1.7, 1.6], (0..5).collect()).map_err(e)?;
    let (mean, best) = (format!("{:.2}", r.mean), format!("{:.2}", r.best));
    ensure(mean == "1.80" && best == "1.60", || {
        format!("mean {mean}, best {best}")
    })?;
    ensure((r.sd - 0.1581).abs() <= 1e-4, || format!("sd {}", r.sd))?;
    let plain = RunReport::from_errors("encoder", vec![2.11, 2.11], vec![0, 1]).map_err(e)?;
    let fused =
        RunReport::from_errors("encoder+features", vec![1.81, 1.81], vec![0, 1]).map_err(e)?;
    let table = render_paired(&plain, &fused);
    let cell = &table.rows[1][4];
    ensure(cell == "14.2", || format!("improvement cell {cell:?}"))?;
    Ok(format!(
        "mean {mean}, best {best}, sd {:.4}, improvement {cell}",
        r.sd
    ))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lexdetect"))
        .args(args)
        .output()
        .map_err(e)?;
    if !out.status.success() {
        return Err(format!(
            "`lexdetect {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    let corpus = data_dir().join("sample_corpus.tsv").display().to_string();
    let lex = data_dir().join("lexicons").display().to_string();
    let rules = data_dir().join("rewrite_rules.json").display().to_string();
    let grids = data_dir().join("grids.json").display().to_string();

    cli(&[
        "preprocess",
        "--input",
        &corpus,
        "--rules",
        &rules,
        "--output",
        &p("clean.tsv"),
    ])?;
    cli(&[
        "extract",
        "--input",
        &p("clean.tsv"),
        "--lexicons",
        &lex,
        "--output",
        &p("features.csv"),
    ])?;
    let train = cli(&[
        "--seed",
        "0",
        "train",
        "--features",
        &p("features.csv"),
        "--model",
        "gbdt",
        "--grid",
        &grids,
        "--output",
        &p("gbdt.json"),
        "--report",
        &p("report.txt"),
    ])?;
    ensure(train.contains("gbdt"), || {
        format!("train output lacks the model row:\n{train}")
    })?;
    cli(&[
        "importance",
        "--model",
        &p("gbdt.json"),
        "--output",
        &p("importance.csv"),
    ])?;
    let imp = std::fs::read_to_string(p("importance.csv")).map_err(e)?;
    let total: f64 = imp
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(2)?.parse::<f64>().ok())
        .sum();
    ensure((total - 100.0).abs() < 1e-3, || {
        format!("importance CSV sums to {total}")
    })?;
    cli(&[
        "train",
        "--features",
        &p("features.csv"),
        "--model",
        "tree",
        "--max-depth",
        "1",
        "--feature-subset",
        "feeling",
        "--runs",
        "1",
        "--output",
        &p("tree.json"),
    ])?;
    let rule = cli(&["explain", "--model", &p("tree.json")])?;
    ensure(rule.contains("x1 <= ") && rule.contains("end"), || {
        format!("unexpected rule:\n{rule}")
    })?;
    Ok("preprocess, extract, train, importance, explain all exited 0".into())
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "feature-extraction oracle",
            budget: Duration::from_secs(1),
            run: feature_oracle,
        },
        Criterion {
            name: "normalization contract",
            budget: Duration::from_secs(1),
            run: normalization,
        },
        Criterion {
            name: "split-search oracle",
            budget: Duration::from_secs(10),
            run: split_search,
        },
        Criterion {
            name: "importance contract",
            budget: Duration::from_secs(10),
            run: importance,
        },
        Criterion {
            name: "single-feature rule shape",
            budget: Duration::from_secs(60),
            run: single_feature_rule,
        },
        Criterion {
            name: "planted-signal classification",
            budget: Duration::from_secs(120),
            run: planted_signal,
        },
        Criterion {
            name: "fusion improvement",
            budget: Duration::from_secs(120),
            run: fusion,
        },
        Criterion {
            name: "determinism",
            budget: Duration::from_secs(300),
            run: determinism,
        },
        Criterion {
            name: "report arithmetic",
            budget: Duration::from_secs(1),
            run: report_arithmetic,
        },
        Criterion {
            name: "end-to-end CLI",
            budget: Duration::from_secs(30),
            run: end_to_end,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let result = match result {
            Ok(m) if took > c.budget => Err(format!("{m}; over the {:?} budget", c.budget)),
            other => other,
        };
        match result {
            Ok(m) => println!("PASS  {:<30} {:>8.2}s  {m}", c.name, took.as_secs_f64()),
            Err(m) => {
                failed += 1;
                println!("FAIL  {:<30} {:>8.2}s  {m}", c.name, took.as_secs_f64());
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
