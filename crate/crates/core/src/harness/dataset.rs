use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::RawDocument;

/// Delimited corpus flavour.
///
/// TSV is read and written without quoting; tabs and line breaks inside text
/// are written as spaces. CSV follows RFC 4180 quoting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimited {
    #[default]
    Tsv,
    Csv,
}

impl Delimited {
    pub fn delimiter(self) -> u8 {
        match self {
            Delimited::Tsv => b'\t',
            Delimited::Csv => b',',
        }
    }

    /// `.csv` files are CSV, everything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Delimited::Csv,
            _ => Delimited::Tsv,
        }
    }

    pub fn reader<R: Read>(self, r: R) -> csv::Reader<R> {
        csv::ReaderBuilder::new()
            .delimiter(self.delimiter())
            .quoting(self == Delimited::Csv)
            .from_reader(r)
    }

    pub fn writer<W: std::io::Write>(self, w: W) -> csv::Writer<W> {
        let mut b = csv::WriterBuilder::new();
        b.delimiter(self.delimiter());
        if self == Delimited::Tsv {
            b.quote_style(csv::QuoteStyle::Never);
        }
        b.from_writer(w)
    }

    /// Makes a field safe to write in this format.
    pub fn clean_field(self, s: &str) -> String {
        match self {
            Delimited::Tsv => s.replace(['\t', '\n', '\r'], " "),
            Delimited::Csv => s.to_string(),
        }
    }
}

impl FromStr for Delimited {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Delimited::Tsv),
            "csv" => Ok(Delimited::Csv),
            other => Err(Error::param(format!(
                "unknown format {other:?} (expected tsv or csv)"
            ))),
        }
    }
}

impl fmt::Display for Delimited {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delimited::Tsv => "tsv",
            Delimited::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl SplitTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(SplitTag::Train),
            "validation" | "valid" | "val" | "dev" => Some(SplitTag::Validation),
            "test" => Some(SplitTag::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
        }
    }
}

pub fn parse_label(s: &str) -> Option<Option<bool>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "fake" => Some(Some(true)),
        "real" => Some(Some(false)),
        "" => Some(None),
        _ => None,
    }
}

pub fn label_name(label: Option<bool>) -> &'static str {
    match label {
        Some(true) => "fake",
        Some(false) => "real",
        None => "",
    }
}

/// Documents in file order, plus the predefined split when the file has a
/// `split` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: Vec<RawDocument>,
    pub splits: Option<Vec<SplitTag>>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

fn parse_err(source: &str, row: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        row: row as usize,
        message: message.into(),
    }
}

/// Reads `id`, `text`, `label` (and optional `split`) columns by header name.
pub fn read_dataset(reader: impl Read, format: Delimited, source: &str) -> Result<Corpus> {
    let mut rdr = format.reader(reader);
    let header = rdr
        .byte_headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    if header.is_empty() {
        return Err(parse_err(source, 1, "empty file"));
    }
    let col = |name: &str| {
        header
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim().eq_ignore_ascii_case(name))
    };
    let (id_col, text_col, label_col, split_col) =
        (col("id"), col("text"), col("label"), col("split"));
    let missing: Vec<&str> = [("id", id_col), ("text", text_col), ("label", label_col)]
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(parse_err(
            source,
            1,
            format!(
                "missing column(s) {} in header {:?} (reading as {format})",
                missing.join(", "),
                String::from_utf8_lossy(header.as_slice())
            ),
        ));
    }
    let (id_col, text_col, label_col) = (id_col.unwrap(), text_col.unwrap(), label_col.unwrap());
    let mut docs = Vec::new();
    let mut splits = Vec::new();
    let mut seen = HashSet::new();
    let mut rec = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let row = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(parse_err(source, row, e.to_string()));
            }
        }
        let row = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let id = String::from_utf8_lossy(field(id_col)).trim().to_string();
        if id.is_empty() {
            return Err(parse_err(source, row, "empty id"));
        }
        let label_raw = String::from_utf8_lossy(field(label_col)).to_string();
        let label = parse_label(&label_raw)
            .ok_or_else(|| parse_err(source, row, format!("unknown label {label_raw:?}")))?;
        if !seen.insert(id.clone()) {
            return Err(parse_err(source, row, Error::DuplicateId(id).to_string()));
        }
        let doc = RawDocument::from_bytes(id, field(text_col), label)?;
        if let Some(sc) = split_col {
            let raw = String::from_utf8_lossy(field(sc)).to_string();
            splits.push(
                SplitTag::parse(&raw)
                    .ok_or_else(|| parse_err(source, row, format!("unknown split {raw:?}")))?,
            );
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(parse_err(source, 1, "no documents"));
    }
    Ok(Corpus {
        docs,
        splits: split_col.map(|_| splits),
    })
}

pub fn load_dataset(path: &Path, format: Delimited) -> Result<Corpus> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(
        std::io::BufReader::new(f),
        format,
        &path.display().to_string(),
    )
}

/// Serializes documents in the corpus layout, with a `split` column when given.
pub fn write_corpus<'a>(
    format: Delimited,
    rows: impl IntoIterator<Item = (&'a str, &'a str, Option<bool>)>,
    splits: Option<&[SplitTag]>,
) -> Vec<u8> {
    let mut w = format.writer(Vec::new());
    let mut header = vec!["id", "text", "label"];
    if splits.is_some() {
        header.push("split");
    }
    w.write_record(&header).expect("in-memory write");
    for (i, (id, text, label)) in rows.into_iter().enumerate() {
        let mut rec = vec![
            format.clean_field(id),
            format.clean_field(text),
            label_name(label).to_string(),
        ];
        if let Some(s) = splits {
            rec.push(s[i].as_str().to_string());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
