//! Line-delimited JSON interchange for pooled sentence embeddings.
//!
//! ```text
//! {"model":"digitalepidemiologylab/covid-twitter-bert-v2","dim":1024,"pooling":"mean"}
//! {"id":"1","vec":[0.013,-0.274,...]}
//! {"id":"2","vec":[...]}
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Cls,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub model: String,
    pub dim: usize,
    pub pooling: Pooling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vec: Vec<f64>,
}

/// Manifest plus records keyed by id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub manifest: EmbeddingManifest,
    pub records: Vec<EmbeddingRecord>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(manifest: EmbeddingManifest, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if manifest.dim == 0 {
            return Err(Error::param("embedding dim must be positive"));
        }
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate(&manifest, r)?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self {
            manifest,
            records,
            index,
        })
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn validate(manifest: &EmbeddingManifest, r: &EmbeddingRecord) -> Result<()> {
    if r.vec.len() != manifest.dim {
        return Err(Error::Embedding {
            id: r.id.clone(),
            message: format!(
                "vector length {} does not match manifest dim {}",
                r.vec.len(),
                manifest.dim
            ),
        });
    }
    if r.vec.iter().any(|v| !v.is_finite()) {
        return Err(Error::Embedding {
            id: r.id.clone(),
            message: "non-finite component".into(),
        });
    }
    Ok(())
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        row: line,
        message: message.into(),
    }
}

pub fn read_embeddings(reader: impl BufRead, source: &str) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let manifest: EmbeddingManifest = loop {
        match lines.next() {
            None => return Err(parse_err(source, 1, "missing manifest line")),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(source, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| parse_err(source, i + 1, format!("bad manifest: {e}")))?;
            }
        }
    };
    if manifest.dim == 0 {
        return Err(parse_err(source, 1, "manifest dim must be positive"));
    }
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(source, i + 1, e.to_string()))?;
        validate(&manifest, &rec).map_err(|e| match e {
            Error::Embedding { id, message } => Error::Embedding {
                id,
                message: format!("line {}: {message}", i + 1),
            },
            other => other,
        })?;
        if let Some(first) = seen.insert(rec.id.clone(), i + 1) {
            return Err(Error::Embedding {
                id: rec.id,
                message: format!("line {}: duplicate id (first seen on line {first})", i + 1),
            });
        }
        records.push(rec);
    }
    EmbeddingTable::new(manifest, records)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(std::io::BufReader::new(f), &path.display().to_string())
}

pub fn write_embeddings(mut w: impl Write, table: &EmbeddingTable) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &table.manifest)?;
    w.write_all(b"\n")?;
    for r in &table.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
