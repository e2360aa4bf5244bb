//! Social-media text normalization.
//!
//! Three deterministic stages are applied in a fixed order: lowercasing,
//! rewriting of URLs / mentions / hashtags / COVID terms into placeholder
//! tokens, and replacement of emoji by their CLDR short names wrapped in
//! `[EMOJI]` markers. Placeholder tokens survive all three stages untouched,
//! so running the pipeline on its own output is a no-op.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Placeholder {
    Url,
    Mention,
    Hashtag,
    Covid,
    Emoji,
}

impl Placeholder {
    pub const ALL: [Placeholder; 5] = [
        Placeholder::Url,
        Placeholder::Mention,
        Placeholder::Hashtag,
        Placeholder::Covid,
        Placeholder::Emoji,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Placeholder::Url => "[URL]",
            Placeholder::Mention => "[MENTION]",
            Placeholder::Hashtag => "[HASHTAG]",
            Placeholder::Covid => "[COVID]",
            Placeholder::Emoji => "[EMOJI]",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Placeholder::Url => "URL",
            Placeholder::Mention => "MENTION",
            Placeholder::Hashtag => "HASHTAG",
            Placeholder::Covid => "COVID",
            Placeholder::Emoji => "EMOJI",
        }
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

pub type PlaceholderCounts = BTreeMap<Placeholder, usize>;

fn zero_counts() -> PlaceholderCounts {
    Placeholder::ALL.iter().map(|&p| (p, 0)).collect()
}

/// A corpus item as read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    /// `Some(true)` for fake news.
    pub label: Option<bool>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<bool>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
        }
    }

    /// Builds a document from undecoded bytes, rejecting invalid UTF-8 with the id attached.
    pub fn from_bytes(id: impl Into<String>, bytes: &[u8], label: Option<bool>) -> Result<Self> {
        let id = id.into();
        match std::str::from_utf8(bytes) {
            Ok(text) => Ok(Self::new(id, text, label)),
            Err(_) => Err(Error::InvalidUtf8 { id }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanDocument {
    pub id: String,
    pub text: String,
    pub label: Option<bool>,
    /// Occurrences of each placeholder token in `text`.
    pub placeholder_counts: PlaceholderCounts,
    /// Emoji-like code points with no known name; each became `[EMOJI] unknown [EMOJI]`.
    pub unknown_emoji: usize,
}

impl CleanDocument {
    /// Wraps already-clean text, e.g. when re-reading a preprocessed corpus.
    pub fn from_clean_text(
        id: impl Into<String>,
        text: impl Into<String>,
        label: Option<bool>,
    ) -> Self {
        let text = text.into();
        let placeholder_counts = count_placeholders(&text);
        Self {
            id: id.into(),
            text,
            label,
            placeholder_counts,
            unknown_emoji: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RulesFile {
    url_pattern: String,
    mention_pattern: String,
    hashtag_pattern: String,
    covid_terms: Vec<String>,
}

pub const DEFAULT_URL_PATTERN: &str = r#"https?://[^\s\[\]<>"']*[^\s\[\]<>"'.,!?;:)]|\b(?:t\.co|bit\.ly|goo\.gl|ow\.ly|buff\.ly|tinyurl\.com)/[^\s\[\]<>"']*[^\s\[\]<>"'.,!?;:)]"#;
pub const DEFAULT_MENTION_PATTERN: &str = r"@\w+";
pub const DEFAULT_HASHTAG_PATTERN: &str = r"#\w+";
pub const DEFAULT_COVID_TERMS: [&str; 6] = [
    "covid",
    "covid19",
    "covid-19",
    "coronavirus",
    "sars-cov-2",
    "ncov",
];

/// Compiled placeholder rewrite rules.
#[derive(Debug, Clone)]
pub struct RewriteRules {
    url: Regex,
    mention: Regex,
    hashtag: Regex,
    /// Sorted longest first so that `covid-19` wins over `covid`.
    covid_terms: Vec<String>,
}

impl Default for RewriteRules {
    fn default() -> Self {
        Self::new(
            DEFAULT_URL_PATTERN,
            DEFAULT_MENTION_PATTERN,
            DEFAULT_HASHTAG_PATTERN,
            DEFAULT_COVID_TERMS.iter().map(|s| s.to_string()).collect(),
        )
        .expect("default rules compile")
    }
}

fn compile(name: &str, pattern: &str) -> Result<Regex> {
    let re = Regex::new(pattern).map_err(|e| Error::Rules(format!("{name}: {e}")))?;
    let probe = "a b @c #d";
    if re.is_match("") || re.find_iter(probe).any(|m| m.is_empty()) {
        return Err(Error::Rules(format!("{name} matches the empty string")));
    }
    Ok(re)
}

impl RewriteRules {
    pub fn new(url: &str, mention: &str, hashtag: &str, covid_terms: Vec<String>) -> Result<Self> {
        let mut terms = Vec::with_capacity(covid_terms.len());
        for t in covid_terms {
            if t.is_empty() {
                return Err(Error::Rules("empty covid term".into()));
            }
            if t != t.to_lowercase() {
                return Err(Error::Rules(format!("covid term {t:?} is not lowercase")));
            }
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
        terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(Self {
            url: compile("url_pattern", url)?,
            mention: compile("mention_pattern", mention)?,
            hashtag: compile("hashtag_pattern", hashtag)?,
            covid_terms: terms,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let f: RulesFile = serde_json::from_str(json).map_err(|e| Error::Rules(e.to_string()))?;
        Self::new(
            &f.url_pattern,
            &f.mention_pattern,
            &f.hashtag_pattern,
            f.covid_terms,
        )
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        let f = RulesFile {
            url_pattern: self.url.as_str().to_string(),
            mention_pattern: self.mention.as_str().to_string(),
            hashtag_pattern: self.hashtag.as_str().to_string(),
            covid_terms: self.covid_terms.clone(),
        };
        serde_json::to_string_pretty(&f).expect("rules serialize")
    }

    pub fn covid_terms(&self) -> &[String] {
        &self.covid_terms
    }
}

/// Splits `text` into alternating (is_placeholder, segment) pieces.
fn placeholder_segments(text: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    let bytes = text.as_bytes();
    while i < bytes.len() {
        if bytes[i] == b'[' {
            if let Some(p) = Placeholder::ALL
                .iter()
                .find(|p| text[i..].starts_with(p.token()))
            {
                if start < i {
                    out.push((false, &text[start..i]));
                }
                let end = i + p.token().len();
                out.push((true, &text[i..end]));
                start = end;
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        out.push((false, &text[start..]));
    }
    out
}

/// Unicode lowercasing that leaves placeholder tokens intact.
pub fn uncase(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (is_placeholder, seg) in placeholder_segments(text) {
        if is_placeholder {
            out.push_str(seg);
        } else {
            out.push_str(&seg.to_lowercase());
        }
    }
    out
}

fn replace_pattern(text: &str, re: &Regex, token: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut n = 0;
    for m in re.find_iter(text) {
        if m.is_empty() {
            continue;
        }
        out.push_str(&text[last..m.start()]);
        out.push_str(token);
        last = m.end();
        n += 1;
    }
    out.push_str(&text[last..]);
    (out, n)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn replace_covid_terms(text: &str, terms: &[String]) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut n = 0;
    let mut prev: Option<char> = None;
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if !prev.is_some_and(is_word_char) {
            let hit = terms.iter().find(|t| {
                rest.starts_with(t.as_str())
                    && !rest[t.len()..].chars().next().is_some_and(is_word_char)
            });
            if let Some(t) = hit {
                out.push_str(Placeholder::Covid.token());
                n += 1;
                i += t.len();
                prev = t.chars().last();
                continue;
            }
        }
        let c = rest.chars().next().expect("non-empty");
        out.push(c);
        prev = Some(c);
        i += c.len_utf8();
    }
    (out, n)
}

/// Rewrites URLs, mentions, hashtags and COVID terms, in that order.
///
/// Expects uncased input. Returns the number of replacements made per kind.
pub fn rewrite_special(text: &str, rules: &RewriteRules) -> (String, PlaceholderCounts) {
    let mut counts = zero_counts();
    let (t, n) = replace_pattern(text, &rules.url, Placeholder::Url.token());
    counts.insert(Placeholder::Url, n);
    let (t, n) = replace_pattern(&t, &rules.mention, Placeholder::Mention.token());
    counts.insert(Placeholder::Mention, n);
    let (t, n) = replace_pattern(&t, &rules.hashtag, Placeholder::Hashtag.token());
    counts.insert(Placeholder::Hashtag, n);
    let (t, n) = replace_covid_terms(&t, &rules.covid_terms);
    counts.insert(Placeholder::Covid, n);
    (t, counts)
}

const MAX_EMOJI_CHARS: usize = 12;

fn is_pictographic(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF | 0x2300..=0x23FF)
}

fn is_emoji_glue(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x200D | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F)
}

fn emoji_display_name(name: &str) -> String {
    name.to_lowercase().replace(['_', '-'], " ")
}

/// Longest known emoji sequence starting at the beginning of `s`.
fn match_emoji(s: &str) -> Option<(usize, &'static str)> {
    let first = s.chars().next()?;
    let mut ends: Vec<usize> = s
        .char_indices()
        .skip(1)
        .take(MAX_EMOJI_CHARS - 1)
        .map(|(i, _)| i)
        .collect();
    ends.push(
        s.char_indices()
            .nth(MAX_EMOJI_CHARS)
            .map(|(i, _)| i)
            .unwrap_or(s.len()),
    );
    ends.sort_unstable();
    ends.dedup();
    for &end in ends.iter().rev() {
        let cand = &s[..end];
        // ASCII keycap bases only count as emoji when followed by a modifier.
        if first.is_ascii() && cand.chars().count() == 1 {
            continue;
        }
        if let Some(e) = emojis::get(cand) {
            return Some((end, e.name()));
        }
    }
    None
}

/// Replaces emoji with `[EMOJI] <name> [EMOJI]`, returning the new text and
/// the number of unrecognized emoji-like code points.
pub fn textualize_emoji(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut unknown = 0;
    let mut i = 0;
    let marker = Placeholder::Emoji.token();
    let push_wrapped = |out: &mut String, name: &str, next: Option<char>| {
        if out.chars().last().is_some_and(|c| !c.is_whitespace()) {
            out.push(' ');
        }
        out.push_str(marker);
        out.push(' ');
        out.push_str(name);
        out.push(' ');
        out.push_str(marker);
        if next.is_some_and(|c| !c.is_whitespace()) {
            out.push(' ');
        }
    };
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().expect("non-empty");
        let candidate = !c.is_ascii() || matches!(c, '#' | '*' | '0'..='9');
        if candidate {
            if let Some((len, name)) = match_emoji(rest) {
                let next = rest[len..].chars().find(|&c| !is_emoji_glue(c));
                push_wrapped(&mut out, &emoji_display_name(name), next);
                i += len;
                continue;
            }
            if is_pictographic(c) {
                unknown += 1;
                let next = rest[c.len_utf8()..].chars().find(|&c| !is_emoji_glue(c));
                push_wrapped(&mut out, "unknown", next);
                i += c.len_utf8();
                continue;
            }
            if is_emoji_glue(c) {
                // Orphaned selectors and joiners carry no content.
                i += c.len_utf8();
                continue;
            }
        }
        out.push(c);
        i += c.len_utf8();
    }
    (out, unknown)
}

/// Counts occurrences of each placeholder token.
pub fn count_placeholders(text: &str) -> PlaceholderCounts {
    let mut counts = zero_counts();
    for (is_placeholder, seg) in placeholder_segments(text) {
        if is_placeholder {
            if let Some(p) = Placeholder::ALL.iter().find(|p| p.token() == seg) {
                *counts.get_mut(p).expect("all kinds present") += 1;
            }
        }
    }
    counts
}

/// Full pipeline: uncase, rewrite special tokens, textualize emoji.
pub fn preprocess(doc: &RawDocument, rules: &RewriteRules) -> CleanDocument {
    let lowered = uncase(&doc.text);
    let (rewritten, _) = rewrite_special(&lowered, rules);
    let (text, unknown_emoji) = textualize_emoji(&rewritten);
    let placeholder_counts = count_placeholders(&text);
    CleanDocument {
        id: doc.id.clone(),
        text,
        label: doc.label,
        placeholder_counts,
        unknown_emoji,
    }
}

/// Preprocesses a corpus in parallel; output order matches input order.
pub fn preprocess_corpus(docs: &[RawDocument], rules: &RewriteRules) -> Vec<CleanDocument> {
    use rayon::prelude::*;
    docs.par_iter().map(|d| preprocess(d, rules)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> RewriteRules {
        RewriteRules::default()
    }

    #[test]
    fn uncase_examples() {
        assert_eq!(uncase("COVID Is REAL"), "covid is real");
        assert_eq!(uncase(""), "");
        assert_eq!(uncase("already lower"), "already lower");
        assert_eq!(uncase("SEE [URL] NOW"), "see [URL] now");
    }

    #[test]
    fn rewrite_examples() {
        let (t, c) = rewrite_special("see https://t.co/x from @who", &rules());
        assert_eq!(t, "see [URL] from [MENTION]");
        assert_eq!(c[&Placeholder::Url], 1);
        assert_eq!(c[&Placeholder::Mention], 1);
        assert_eq!(c[&Placeholder::Hashtag], 0);

        let (t, c) = rewrite_special("#covid19 spreads", &rules());
        assert_eq!(t, "[HASHTAG] spreads");
        assert_eq!(c[&Placeholder::Hashtag], 1);
        assert_eq!(c[&Placeholder::Covid], 0);

        let (t, c) = rewrite_special("coronavirus cure found", &rules());
        assert_eq!(t, "[COVID] cure found");
        assert_eq!(c[&Placeholder::Covid], 1);
    }

    #[test]
    fn bare_shortener_and_trailing_punctuation() {
        let (t, _) = rewrite_special("read bit.ly/abc. then https://x.org/a?b=1!", &rules());
        assert_eq!(t, "read [URL]. then [URL]!");
    }

    #[test]
    fn covid_terms_need_word_boundaries() {
        let (t, c) = rewrite_special("covid-19 and covidiots and sars-cov-2, ncov", &rules());
        assert_eq!(t, "[COVID] and covidiots and [COVID], [COVID]");
        assert_eq!(c[&Placeholder::Covid], 3);
    }

    #[test]
    fn emoji_examples() {
        assert_eq!(
            textualize_emoji("stay safe 😷").0,
            "stay safe [EMOJI] face with medical mask [EMOJI]"
        );
        assert_eq!(textualize_emoji("no emoji here").0, "no emoji here");
        assert_eq!(
            textualize_emoji("🙂🙂").0,
            "[EMOJI] slightly smiling face [EMOJI] [EMOJI] slightly smiling face [EMOJI]"
        );
    }

    #[test]
    fn emoji_sequences_and_unknowns() {
        let (t, u) = textualize_emoji("go 👍🏽!");
        assert_eq!(t, "go [EMOJI] thumbs up: medium skin tone [EMOJI] !");
        assert_eq!(u, 0);
        let (t, _) = textualize_emoji("room 1 #1");
        assert_eq!(t, "room 1 #1");
        // U+1FAFF is in a pictographic block but unassigned.
        let (t, u) = textualize_emoji("x \u{1FAFF} y");
        assert_eq!(t, "x [EMOJI] unknown [EMOJI] y");
        assert_eq!(u, 1);
    }

    #[test]
    fn preprocess_examples() {
        let d = RawDocument::new("1", "COVID is fake! 😷", Some(true));
        let c = preprocess(&d, &rules());
        assert_eq!(
            c.text,
            "[COVID] is fake! [EMOJI] face with medical mask [EMOJI]"
        );
        assert_eq!(c.placeholder_counts[&Placeholder::Covid], 1);
        assert_eq!(c.placeholder_counts[&Placeholder::Emoji], 2);

        let e = preprocess(&RawDocument::new("2", "", None), &rules());
        assert_eq!(e.text, "");
        assert!(e.placeholder_counts.values().all(|&n| n == 0));
    }

    #[test]
    fn invalid_utf8_names_document() {
        let err = RawDocument::from_bytes("doc-7", &[0x66, 0xff, 0x66], None).unwrap_err();
        assert!(err.to_string().contains("doc-7"));
    }

    #[test]
    fn rules_validation() {
        assert!(RewriteRules::new("a*", "@\\w+", "#\\w+", vec![]).is_err());
        assert!(RewriteRules::new("http\\S+|", "@\\w+", "#\\w+", vec![]).is_err());
        assert!(RewriteRules::new("http\\S+", "@\\w+", "#\\w+", vec!["Covid".into()]).is_err());
        let r = RewriteRules::default();
        let back = RewriteRules::from_json(&r.to_json()).unwrap();
        assert_eq!(back.covid_terms(), r.covid_terms());
    }

    #[test]
    fn idempotent_on_mixed_text() {
        let samples = [
            "BREAKING: #COVID19 cure at https://fake.example/cure?id=3 via @DrX 😷😷",
            "Wash hands 🙌🏼 & stay home. [URL] COVID-19 ❤️",
            "keycap #️⃣ and flag 🇸🇬 family 👨‍👩‍👧",
            "literal [covid] and [URL] and [Emoji]",
        ];
        for s in samples {
            let once = preprocess(&RawDocument::new("x", s, None), &rules());
            let twice = preprocess(&RawDocument::new("x", once.text.clone(), None), &rules());
            assert_eq!(once.text, twice.text, "input {s:?}");
            assert_eq!(once.placeholder_counts, twice.placeholder_counts);
        }
    }
}
