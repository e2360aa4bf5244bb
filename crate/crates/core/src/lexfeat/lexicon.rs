use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use super::Feature;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LexiconEntry {
    Word(String),
    /// Trailing-asterisk entry; matches any word starting with the stem.
    Prefix(String),
    Phrase(Vec<String>),
}

/// Dictionary backing one lexical feature.
#[derive(Debug, Clone)]
pub struct CategoryLexicon {
    name: String,
    entries: Vec<LexiconEntry>,
    words: HashSet<String>,
    prefixes: Vec<String>,
    /// Phrases keyed by first word, longest first.
    phrases: HashMap<String, Vec<Vec<String>>>,
}

fn valid_word(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_alphanumeric() || c == '\'')
}

impl CategoryLexicon {
    pub fn new(name: impl Into<String>, entries: Vec<LexiconEntry>) -> Result<Self> {
        let name = name.into();
        let err = |message: String| Error::Lexicon {
            category: name.clone(),
            message,
        };
        let mut seen = HashSet::new();
        let mut words = HashSet::new();
        let mut prefixes = Vec::new();
        let mut phrases: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for e in &entries {
            if !seen.insert(e.clone()) {
                return Err(err(format!("duplicate entry {e:?}")));
            }
            match e {
                LexiconEntry::Word(w) => {
                    if !valid_word(w) || w.to_lowercase() != *w {
                        return Err(err(format!("invalid word {w:?}")));
                    }
                    words.insert(w.clone());
                }
                LexiconEntry::Prefix(p) => {
                    if !valid_word(p) || p.to_lowercase() != *p || p.chars().count() < 2 {
                        return Err(err(format!("invalid prefix {p:?}")));
                    }
                    prefixes.push(p.clone());
                }
                LexiconEntry::Phrase(ws) => {
                    if ws.len() < 2 || ws.iter().any(|w| !valid_word(w) || w.to_lowercase() != *w) {
                        return Err(err(format!("invalid phrase {ws:?}")));
                    }
                    phrases.entry(ws[0].clone()).or_default().push(ws.clone());
                }
            }
        }
        prefixes.sort();
        for list in phrases.values_mut() {
            list.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        Ok(Self {
            name,
            entries,
            words,
            prefixes,
            phrases,
        })
    }

    /// Parses lexicon file contents: one entry per line, `#` comments,
    /// trailing `*` for prefixes, internal spaces for phrases.
    pub fn parse(name: &str, contents: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |why: &str| Error::Lexicon {
                category: name.to_string(),
                message: format!("line {}: {why}: {line:?}", lineno + 1),
            };
            let entry = if let Some(stem) = line.strip_suffix('*') {
                if stem.contains('*') || stem.contains(char::is_whitespace) {
                    return Err(malformed("prefix entries must be a single stem"));
                }
                if stem.chars().count() < 2 {
                    return Err(malformed("prefix stem shorter than 2 characters"));
                }
                LexiconEntry::Prefix(stem.to_string())
            } else if line.contains(char::is_whitespace) {
                LexiconEntry::Phrase(line.split_whitespace().map(str::to_string).collect())
            } else {
                LexiconEntry::Word(line.to_string())
            };
            let ok = match &entry {
                LexiconEntry::Word(w) | LexiconEntry::Prefix(w) => valid_word(w),
                LexiconEntry::Phrase(ws) => ws.iter().all(|w| valid_word(w)),
            };
            if !ok {
                return Err(malformed(
                    "entries may contain only letters, digits and apostrophes",
                ));
            }
            if line.to_lowercase() != line {
                return Err(malformed("entries must be lowercase"));
            }
            entries.push(entry);
        }
        Self::new(name, entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Single-word membership (exact word or prefix stem).
    pub fn matches_word(&self, word: &str) -> bool {
        self.words.contains(word) || self.prefixes.iter().any(|p| word.starts_with(p.as_str()))
    }

    /// Number of words covered by lexicon hits in `words` (already lowercase).
    ///
    /// Phrases are tried first at each position, longest first, and consume
    /// the words they cover.
    pub fn count_matches(&self, words: &[&str]) -> usize {
        let mut matched = 0;
        let mut i = 0;
        while i < words.len() {
            if let Some(cands) = self.phrases.get(words[i]) {
                if let Some(p) = cands.iter().find(|p| {
                    words.len() - i >= p.len() && p.iter().zip(&words[i..]).all(|(a, b)| a == b)
                }) {
                    matched += p.len();
                    i += p.len();
                    continue;
                }
            }
            if self.matches_word(words[i]) {
                matched += 1;
            }
            i += 1;
        }
        matched
    }
}

/// The complete set of lexical category dictionaries.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    categories: BTreeMap<Feature, CategoryLexicon>,
}

impl LexiconSet {
    pub fn new(lexicons: impl IntoIterator<Item = (Feature, CategoryLexicon)>) -> Result<Self> {
        let categories: BTreeMap<_, _> = lexicons.into_iter().collect();
        let missing: Vec<String> = Feature::lexical()
            .filter(|f| !categories.contains_key(f))
            .map(|f| f.name().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingLexicons(missing));
        }
        if let Some(f) = categories.keys().find(|f| !f.is_lexical()) {
            return Err(Error::Lexicon {
                category: f.name().to_string(),
                message: "structural features take no lexicon".into(),
            });
        }
        Ok(Self { categories })
    }

    pub fn get(&self, f: Feature) -> Option<&CategoryLexicon> {
        self.categories.get(&f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, &CategoryLexicon)> {
        self.categories.iter().map(|(f, l)| (*f, l))
    }
}

/// Loads `<category>.txt` for every lexical category from `dir`.
pub fn load_lexicons(dir: &Path) -> Result<LexiconSet> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: BTreeMap<Feature, std::path::PathBuf> = BTreeMap::new();
    let mut paths: Vec<_> = rd
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    paths.sort();
    for path in paths {
        if path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            != Some("txt".into())
        {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some(feature) = Feature::from_name(&stem.to_ascii_lowercase()) else {
            continue;
        };
        if !feature.is_lexical() {
            continue;
        }
        if files.insert(feature, path.clone()).is_some() {
            return Err(Error::Lexicon {
                category: feature.name().to_string(),
                message: "more than one lexicon file".into(),
            });
        }
    }
    let missing: Vec<String> = Feature::lexical()
        .filter(|f| !files.contains_key(f))
        .map(|f| f.name().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLexicons(missing));
    }
    let mut lexicons = Vec::with_capacity(files.len());
    for (feature, path) in files {
        let contents = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        lexicons.push((feature, CategoryLexicon::parse(feature.name(), &contents)?));
    }
    LexiconSet::new(lexicons)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_words_phrases_and_prefixes() {
        let lex = CategoryLexicon::parse("assent", "yeah\nyes\nokay\nok").unwrap();
        assert_eq!(lex.len(), 4);

        let lex = CategoryLexicon::parse("certitude", "# comment\nof course\nreally\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex
            .entries()
            .contains(&LexiconEntry::Phrase(vec!["of".into(), "course".into()])));

        let lex = CategoryLexicon::parse("swear", "fuck*").unwrap();
        assert!(lex.matches_word("fucking"));
        assert!(lex.matches_word("fuck"));
        assert!(!lex.matches_word("fun"));
    }

    #[test]
    fn rejects_malformed_entries() {
        for bad in ["Yes", "a*", "ok*ay*", "of course*", ":)", "yes\nyes", "x*"] {
            assert!(CategoryLexicon::parse("assent", bad).is_err(), "{bad:?}");
        }
        let err = CategoryLexicon::parse("assent", "yes\n\nBad").unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn phrase_consumes_words_longest_first() {
        let lex = CategoryLexicon::parse("x", "too much\ntoo much fun\nfun\nmuch").unwrap();
        // "too much fun" (3) beats "too much" (2); "fun" does not double count.
        assert_eq!(lex.count_matches(&["too", "much", "fun", "fun"]), 4);
        assert_eq!(lex.count_matches(&["too", "much"]), 2);
        assert_eq!(lex.count_matches(&["too"]), 0);
        assert_eq!(lex.count_matches(&["much", "too"]), 1);
    }

    #[test]
    fn missing_file_listed() {
        let dir = tempfile::tempdir().unwrap();
        for f in Feature::lexical().filter(|f| *f != Feature::Swear) {
            std::fs::write(dir.path().join(format!("{}.txt", f.name())), "word\n").unwrap();
        }
        let err = load_lexicons(dir.path()).unwrap_err();
        assert!(matches!(&err, Error::MissingLexicons(m) if m == &["swear"]));
        std::fs::write(dir.path().join("swear.txt"), "damn\n").unwrap();
        assert!(load_lexicons(dir.path()).is_ok());
        std::fs::write(dir.path().join("Swear.TXT"), "damn\n").unwrap();
        assert!(load_lexicons(dir.path()).is_err());
    }
}
