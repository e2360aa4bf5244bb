use std::path::Path;

use rayon::prelude::*;

use super::dataset::{label_name, parse_label, SplitTag};
use super::split::DatasetSplit;
use crate::error::{Error, Result};
use crate::lexfeat::{
    extract_features, extract_from_text, Feature, FeatureVector, LexiconSet, Normalizer,
    FEATURE_NAMES,
};
use crate::models::{Dataset, Splits};
use crate::textprep::{CleanDocument, RawDocument};

/// Per-document feature vectors as stored in a features CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub labels: Vec<Option<bool>>,
    pub features: Vec<FeatureVector>,
    pub splits: Option<Vec<SplitTag>>,
}

impl FeatureTable {
    pub fn from_clean(
        docs: &[CleanDocument],
        lexicons: &LexiconSet,
        splits: Option<Vec<SplitTag>>,
    ) -> Self {
        Self {
            ids: docs.iter().map(|d| d.id.clone()).collect(),
            labels: docs.iter().map(|d| d.label).collect(),
            features: docs
                .par_iter()
                .map(|d| extract_features(d, lexicons))
                .collect(),
            splits,
        }
    }

    /// Features computed on the unprocessed text.
    pub fn from_raw(
        docs: &[RawDocument],
        lexicons: &LexiconSet,
        splits: Option<Vec<SplitTag>>,
    ) -> Self {
        Self {
            ids: docs.iter().map(|d| d.id.clone()).collect(),
            labels: docs.iter().map(|d| d.label).collect(),
            features: docs
                .par_iter()
                .map(|d| extract_from_text(&d.text, lexicons).features)
                .collect(),
            splits,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn normalized(&self, n: &Normalizer) -> Self {
        Self {
            features: n.apply_all(&self.features),
            ..self.clone()
        }
    }

    /// Header `id,label,feeling,...,conversation` (plus `split` when present).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = vec!["id", "label"];
        header.extend(FEATURE_NAMES);
        if self.splits.is_some() {
            header.push("split");
        }
        w.write_record(&header).expect("in-memory write");
        for i in 0..self.len() {
            let mut rec = vec![self.ids[i].clone(), label_name(self.labels[i]).to_string()];
            rec.extend(self.features[i].0.iter().map(|v| v.to_string()));
            if let Some(s) = &self.splits {
                rec.push(s[i].as_str().to_string());
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let err = |row: u64, m: String| Error::Parse {
            path: source.to_string(),
            row: row as usize,
            message: m,
        };
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
        let names: Vec<&str> = header.iter().collect();
        let expected: Vec<&str> = ["id", "label"].into_iter().chain(FEATURE_NAMES).collect();
        let has_split = match names.len() {
            n if n == expected.len() => false,
            n if n == expected.len() + 1 && names[n - 1] == "split" => true,
            _ => return Err(err(1, format!("expected header {}", expected.join(",")))),
        };
        if names[..expected.len()] != expected[..] {
            return Err(err(1, format!("expected header {}", expected.join(","))));
        }
        let mut t = FeatureTable {
            ids: Vec::new(),
            labels: Vec::new(),
            features: Vec::new(),
            splits: has_split.then(Vec::new),
        };
        for rec in rdr.records() {
            let rec =
                rec.map_err(|e| err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
            let row = rec.position().map(|p| p.line()).unwrap_or(0);
            t.ids.push(rec[0].to_string());
            t.labels.push(
                parse_label(&rec[1])
                    .ok_or_else(|| err(row, format!("unknown label {:?}", &rec[1])))?,
            );
            let mut v = FeatureVector::zeros();
            for (j, f) in Feature::ALL.iter().enumerate() {
                let cell = &rec[2 + j];
                let x: f64 = cell
                    .parse()
                    .map_err(|_| err(row, format!("{}: not a number: {cell:?}", f.name())))?;
                if !x.is_finite() {
                    return Err(err(row, format!("{}: non-finite value", f.name())));
                }
                v.0[j] = x;
            }
            t.features.push(v);
            if let Some(s) = &mut t.splits {
                let raw = &rec[2 + FEATURE_NAMES.len()];
                s.push(
                    SplitTag::parse(raw)
                        .ok_or_else(|| err(row, format!("unknown split {raw:?}")))?,
                );
            }
        }
        if t.is_empty() {
            return Err(err(1, "no rows".into()));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }

    pub fn labels_required(&self) -> Result<Vec<bool>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::param(format!("document {id:?} has no label"))))
            .collect()
    }

    fn rows(&self, indices: &[usize]) -> Vec<FeatureVector> {
        indices.iter().map(|&i| self.features[i]).collect()
    }
}

/// Fits the normalizer on the training rows and builds normalized splits.
pub fn prepare_splits(table: &FeatureTable, split: &DatasetSplit) -> Result<(Splits, Normalizer)> {
    let labels = table.labels_required()?;
    let normalizer = Normalizer::fit(&table.rows(&split.train))?;
    let make = |idx: &[usize]| {
        let xs = normalizer.apply_all(&table.rows(idx));
        let ys: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        Dataset::from_features(&xs, &ys)
    };
    Ok((
        Splits {
            train: make(&split.train)?,
            validation: make(&split.validation)?,
            test: make(&split.test)?,
        },
        normalizer,
    ))
}

/// Column indices for feature names, in the order given.
pub fn feature_columns(names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            Feature::from_name(n)
                .map(|f| f.index())
                .ok_or_else(|| Error::param(format!("unknown feature {n:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::split_dataset;

    fn table(n: usize) -> FeatureTable {
        FeatureTable {
            ids: (0..n).map(|i| format!("d{i}")).collect(),
            labels: (0..n).map(|i| Some(i % 3 == 0)).collect(),
            features: (0..n)
                .map(|i| {
                    let mut v = FeatureVector::zeros();
                    v.0[0] = i as f64 * 0.1;
                    v.0[6] = 1.0 / (i + 1) as f64;
                    v.0[17] = 4.0;
                    v
                })
                .collect(),
            splits: None,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table(7);
        let csv = t.to_csv();
        assert!(csv.starts_with("id,label,feeling,assent,perception,"));
        assert_eq!(FeatureTable::from_csv(&csv, "x").unwrap(), t);
        let mut s = t.clone();
        s.splits = Some(vec![SplitTag::Train; 7]);
        assert_eq!(FeatureTable::from_csv(&s.to_csv(), "x").unwrap(), s);
    }

    #[test]
    fn bad_cells_report_row() {
        let csv = table(2).to_csv().replacen(",4\n", ",oops\n", 1);
        let err = FeatureTable::from_csv(&csv, "x").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn train_split_is_centered() {
        let t = table(50);
        let split = split_dataset(t.len(), 0, None).unwrap();
        let (s, n) = prepare_splits(&t, &split).unwrap();
        assert_eq!(n.fitted_on, split.train.len());
        for f in 0..18 {
            let mean: f64 = s.train.rows().map(|r| r[f]).sum::<f64>() / s.train.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
        // Constant column maps to exactly zero everywhere.
        assert!(s.test.rows().all(|r| r[17] == 0.0));
        assert_eq!(
            feature_columns(&["feeling".into(), "qmark".into()]).unwrap(),
            vec![0, 15]
        );
        assert!(feature_columns(&["nope".into()]).is_err());
    }
}
