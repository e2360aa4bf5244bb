use serde::{Deserialize, Serialize};

use super::BoostedEnsemble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    /// Column index in the model's input.
    pub index: usize,
    /// Share of total importance, in percent.
    pub importance: f64,
    pub splits: usize,
}

/// Per-feature importances, sorted descending; they sum to 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    /// Importances in column order.
    pub fn by_column(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.entries.len()];
        for e in &self.entries {
            out[e.index] = e.importance;
        }
        out
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map(|e| e.importance)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.importance).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,feature,importance,splits\n");
        for (r, e) in self.entries.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{:.6},{}\n",
                r + 1,
                e.feature,
                e.importance,
                e.splits
            ));
        }
        s
    }

    /// Whitespace-separated columns for bar-chart plotting tools.
    pub fn to_chart_data(&self) -> String {
        let mut s = String::from("# rank feature importance_pct cumulative_pct\n");
        let mut cum = 0.0;
        for (r, e) in self.entries.iter().enumerate() {
            cum += e.importance;
            s.push_str(&format!(
                "{} {} {:.4} {:.4}\n",
                r + 1,
                e.feature,
                e.importance,
                cum
            ));
        }
        s
    }
}

/// Average split gain per feature, normalized to sum to 100%.
pub fn gain_importance(model: &BoostedEnsemble, names: &[String]) -> Result<ImportanceReport> {
    if names.len() != model.n_features {
        return Err(Error::Dimension {
            expected: model.n_features,
            got: names.len(),
        });
    }
    let mut sum = vec![0.0; model.n_features];
    let mut count = vec![0usize; model.n_features];
    for (f, g) in model.split_gains() {
        sum[f] += g;
        count[f] += 1;
    }
    if count.iter().all(|&c| c == 0) {
        return Err(Error::Model(
            "ensemble has no splits; importance undefined".into(),
        ));
    }
    let avg: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let total: f64 = avg.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Model("split gains sum to zero".into()));
    }
    let mut entries: Vec<ImportanceEntry> = avg
        .iter()
        .enumerate()
        .map(|(i, a)| ImportanceEntry {
            feature: names[i].clone(),
            index: i,
            importance: 100.0 * a / total,
            splits: count[i],
        })
        .collect();
    entries.sort_by(|a, b| {
        b.importance
            .total_cmp(&a.importance)
            .then(a.index.cmp(&b.index))
    });
    Ok(ImportanceReport { entries })
}
