use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a report's numbers came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Provenance {
    /// SHA-256 of the canonical experiment configuration.
    pub config_hash: String,
    pub split_seed: u64,
    /// Hyperparameters picked per run, serialized as JSON.
    pub selected: Vec<String>,
}

/// Test error rates (%) of repeated seeded runs of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub errors: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: f64,
    pub best: f64,
    pub worst: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd: f64,
    pub single_run: bool,
    pub provenance: Option<Provenance>,
}

impl RunReport {
    pub fn from_errors(
        model: impl Into<String>,
        errors: Vec<f64>,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::param("report needs at least one error rate"));
        }
        if seeds.len() != errors.len() {
            return Err(Error::Dimension {
                expected: errors.len(),
                got: seeds.len(),
            });
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("error rates must be finite"));
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sd = if errors.len() > 1 {
            (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            model: model.into(),
            single_run: errors.len() == 1,
            errors,
            seeds,
            // Guard against the mean drifting outside [best, worst] by rounding.
            mean: mean.clamp(best, worst),
            best,
            worst,
            sd,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }
}

/// Relative reduction of `fused` against `plain`, in percent.
pub fn improvement(plain: f64, fused: f64) -> f64 {
    if plain == 0.0 {
        return 0.0;
    }
    (plain - fused) / plain * 100.0
}

/// Rendered table, kept as cells so both text and CSV come from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_text(&self) -> String {
        let ncol = self.header.len();
        let mut width = vec![0; ncol];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate() {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            format!("| {} |\n", parts.join(" | "))
        };
        let mut out = line(&self.header);
        let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn cells(r: &RunReport) -> Vec<String> {
    vec![
        r.model.clone(),
        format!("{:.2}", r.mean),
        format!("{:.2}", r.best),
        format!("{:.3}", r.sd),
    ]
}

/// Model | Mean | Best | SD for each report.
pub fn render_reports(reports: &[RunReport]) -> Result<Table> {
    if reports.is_empty() {
        return Err(Error::param("nothing to render"));
    }
    Ok(Table {
        header: ["Model", "Mean", "Best", "SD"].map(String::from).to_vec(),
        rows: reports.iter().map(cells).collect(),
    })
}

/// Plain and fused rows plus the Improvement column on the fused row.
pub fn render_paired(plain: &RunReport, fused: &RunReport) -> Table {
    let mut a = cells(plain);
    a.push(String::new());
    let mut b = cells(fused);
    b.push(format!("{:.1}", improvement(plain.mean, fused.mean)));
    Table {
        header: ["Model", "Mean", "Best", "SD", "Improvement"]
            .map(String::from)
            .to_vec(),
        rows: vec![a, b],
    }
}
