use crate::textprep::Placeholder;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

fn placeholder_at(s: &str) -> Option<&'static str> {
    Placeholder::ALL
        .iter()
        .map(|p| p.token())
        .find(|t| s.starts_with(t))
}

fn push_word<'a>(out: &mut Vec<&'a str>, word: &'a str) {
    let w = word.trim_matches('\'');
    if !w.is_empty() {
        out.push(w);
    }
}

/// Splits text into words: maximal runs of letters, digits and apostrophes.
///
/// Placeholder tokens such as `[URL]` are single words. Apostrophes at the
/// edges of a run are quoting, not part of the word.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(tok) = placeholder_at(rest) {
            if let Some(s) = start.take() {
                push_word(&mut out, &text[s..i]);
            }
            out.push(&text[i..i + tok.len()]);
            i += tok.len();
            continue;
        }
        let c = rest.chars().next().expect("non-empty");
        if is_word_char(c) {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            push_word(&mut out, &text[s..i]);
        }
        i += c.len_utf8();
    }
    if let Some(s) = start {
        push_word(&mut out, &text[s..]);
    }
    out
}

/// Splits on runs of `.`, `!` and `?`. Segments without any word are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?'])
        .filter(|seg| !tokenize_words(seg).is_empty())
        .collect()
}
