//! Seeded synthetic data generators used by tests, benchmarks and the
//! acceptance suite.
//!
//! Every generator is a pure function of its arguments.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::RngExt;
use rand_distr::{Binomial, Distribution, Normal};

use crate::lexfeat::N_FEATURES;
use crate::models::{seeded_rng, Dataset, Splits};
use crate::textprep::RawDocument;

/// Columns carrying signal in [`planted_signal`].
pub const PLANTED_COLUMNS: [usize; 3] = [0, 1, 13];

/// Class-conditional mean offset of the planted columns.
pub const PLANTED_SHIFT: f64 = 2.0;

/// Feeling-lexicon words used by [`feeling_corpus`].
pub const FEELING_WORDS: &[&str] = &[
    "feel", "hard", "cool", "felt", "warm", "cold", "soft", "pain",
];

/// Words that appear in no shipped lexicon.
pub const NEUTRAL_WORDS: &[&str] = &[
    "report",
    "city",
    "officials",
    "said",
    "tuesday",
    "vaccine",
    "data",
    "health",
    "people",
    "state",
    "government",
    "study",
    "cases",
    "number",
    "week",
    "public",
    "local",
    "mask",
    "test",
    "hospital",
    "policy",
    "news",
    "today",
    "county",
    "school",
    "minister",
    "doctors",
    "market",
    "office",
    "team",
];

/// Topic words pointing towards fake in [`complementary_corpus`].
pub const FAKE_TOPIC_WORDS: &[&str] = &[
    "miracle",
    "secret",
    "conspiracy",
    "hoax",
    "microchip",
    "bleach",
    "plandemic",
    "cover",
];

/// Topic words pointing towards real in [`complementary_corpus`].
pub const REAL_TOPIC_WORDS: &[&str] = &[
    "ministry",
    "statistics",
    "confirmed",
    "laboratory",
    "trial",
    "guidance",
    "surveillance",
    "dashboard",
];

/// 18 standard-normal columns; the [`PLANTED_COLUMNS`] are shifted by
/// `+PLANTED_SHIFT` for fakes and `-PLANTED_SHIFT` for reals. Labels are fair coins.
pub fn planted_signal(n: usize, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = Vec::with_capacity(n * N_FEATURES);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let fake: bool = rng.random();
        for f in 0..N_FEATURES {
            let mut v = normal.sample(&mut rng);
            if PLANTED_COLUMNS.contains(&f) {
                v += if fake { PLANTED_SHIFT } else { -PLANTED_SHIFT };
            }
            x.push(v);
        }
        y.push(fake);
    }
    Dataset::new(x, N_FEATURES, y).expect("consistent shape")
}

/// 2000/600/600 draws of [`planted_signal`] from independent streams.
pub fn planted_signal_splits(seed: u64) -> Splits {
    Splits {
        train: planted_signal(2000, seed.wrapping_mul(3)),
        validation: planted_signal(600, seed.wrapping_mul(3) + 1),
        test: planted_signal(600, seed.wrapping_mul(3) + 2),
    }
}

/// Standard-normal columns with labels independent of them (alternating, so
/// exactly balanced).
pub fn random_labels(n: usize, n_features: usize, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let x = (0..n * n_features)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let mut y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    y.shuffle(&mut rng);
    Dataset::new(x, n_features, y).expect("consistent shape")
}

/// Column 0 is uniform on (-1, 1) and decides the label (`x0 > 0`); the rest
/// are independent noise.
pub fn one_informative(n: usize, n_features: usize, seed: u64) -> Dataset {
    assert!(n_features >= 1);
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = Vec::with_capacity(n * n_features);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x0: f64 = rng.random_range(-1.0..1.0);
        x.push(x0);
        x.extend((1..n_features).map(|_| normal.sample(&mut rng)));
        y.push(x0 > 0.0);
    }
    Dataset::new(x, n_features, y).expect("consistent shape")
}

/// Words per document in [`feeling_corpus`].
pub const FEELING_DOC_WORDS: u64 = 20;

/// Per-word probability of a feeling word for (fake, real) documents.
pub const FEELING_RATES: (f64, f64) = (0.05, 0.12);

/// Short posts in which fakes use fewer feeling words.
///
/// Each document has [`FEELING_DOC_WORDS`] words in four five-word
/// sentences; the number of feeling words is binomial with the class rate.
pub fn feeling_corpus(n: usize, seed: u64) -> Vec<RawDocument> {
    let mut rng = seeded_rng(seed);
    let fake_dist = Binomial::new(FEELING_DOC_WORDS, FEELING_RATES.0).expect("valid rate");
    let real_dist = Binomial::new(FEELING_DOC_WORDS, FEELING_RATES.1).expect("valid rate");
    (0..n)
        .map(|i| {
            let fake: bool = rng.random();
            let k = if fake {
                fake_dist.sample(&mut rng)
            } else {
                real_dist.sample(&mut rng)
            } as usize;
            let mut words: Vec<&str> = (0..FEELING_DOC_WORDS as usize)
                .map(|j| {
                    if j < k {
                        *FEELING_WORDS.choose(&mut rng).unwrap()
                    } else {
                        *NEUTRAL_WORDS.choose(&mut rng).unwrap()
                    }
                })
                .collect();
            words.shuffle(&mut rng);
            let text = words
                .chunks(5)
                .map(|s| s.join(" ") + ".")
                .collect::<Vec<_>>()
                .join(" ");
            RawDocument::new(format!("f{i:05}"), text, Some(fake))
        })
        .collect()
}

/// Latent values of one [`complementary_corpus`] document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementaryLatent {
    /// Topic signal in {-2, -1, 1, 2}, visible through vocabulary.
    pub a: i32,
    /// Style signal in {-1.5, -0.5, 0.5, 1.5}, visible through punctuation.
    pub b: f64,
}

impl ComplementaryLatent {
    pub fn label(&self) -> bool {
        self.a as f64 + self.b > 0.0
    }
}

const TOPIC_LEVELS: [i32; 4] = [-2, -1, 1, 2];
const STYLE_LEVELS: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];

/// Posts whose label is `a + b > 0`, with `a` carried by topic words and `b`
/// by sentence terminators.
///
/// Every document has three four-word sentences. `2|a|` of its twelve words
/// come from the fake or real topic list (by the sign of `a`). For `b`:
/// `1.5` ends all sentences with `!`, `0.5` ends one with `!`, `-0.5` one
/// with `?`, `-1.5` all with `?`; the rest end with `.`.
pub fn complementary_corpus(n: usize, seed: u64) -> Vec<RawDocument> {
    complementary_corpus_with_latents(n, seed)
        .into_iter()
        .map(|(d, _)| d)
        .collect()
}

pub fn complementary_corpus_with_latents(
    n: usize,
    seed: u64,
) -> Vec<(RawDocument, ComplementaryLatent)> {
    let mut rng = seeded_rng(seed);
    (0..n)
        .map(|i| {
            let lat = ComplementaryLatent {
                a: *TOPIC_LEVELS.choose(&mut rng).unwrap(),
                b: *STYLE_LEVELS.choose(&mut rng).unwrap(),
            };
            let topic = if lat.a > 0 {
                FAKE_TOPIC_WORDS
            } else {
                REAL_TOPIC_WORDS
            };
            let n_topic = 2 * lat.a.unsigned_abs() as usize;
            let mut words: Vec<&str> = (0..12)
                .map(|j| {
                    if j < n_topic {
                        *topic.choose(&mut rng).unwrap()
                    } else {
                        *NEUTRAL_WORDS.choose(&mut rng).unwrap()
                    }
                })
                .collect();
            words.shuffle(&mut rng);
            let (mark, count) = match lat.b {
                b if b > 1.0 => ('!', 3),
                b if b > 0.0 => ('!', 1),
                b if b > -1.0 => ('?', 1),
                _ => ('?', 3),
            };
            let text = words
                .chunks(4)
                .enumerate()
                .map(|(s, w)| format!("{}{}", w.join(" "), if s < count { mark } else { '.' }))
                .collect::<Vec<_>>()
                .join(" ");
            (
                RawDocument::new(format!("c{i:05}"), text, Some(lat.label())),
                lat,
            )
        })
        .collect()
}

/// Bayes error (%) of a classifier that sees only `a` in [`complementary_corpus`].
pub fn complementary_topic_only_bayes_error() -> f64 {
    // Uniform latents: enumerate the 16 cells and take the majority per `a`.
    let mut wrong = 0;
    for a in TOPIC_LEVELS {
        let pos = STYLE_LEVELS.iter().filter(|&&b| a as f64 + b > 0.0).count();
        wrong += pos.min(STYLE_LEVELS.len() - pos);
    }
    100.0 * wrong as f64 / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(planted_signal(50, 1), planted_signal(50, 1));
        assert_ne!(planted_signal(50, 1), planted_signal(50, 2));
        assert_eq!(feeling_corpus(10, 3), feeling_corpus(10, 3));
        assert_eq!(complementary_corpus(10, 3), complementary_corpus(10, 3));
    }

    #[test]
    fn random_labels_balanced() {
        let d = random_labels(101, 4, 0);
        assert_eq!(d.positives(), 51);
    }

    #[test]
    fn one_informative_label_rule() {
        let d = one_informative(200, 5, 9);
        for i in 0..d.len() {
            assert_eq!(d.label(i), d.value(i, 0) > 0.0);
        }
    }

    #[test]
    fn feeling_docs_have_twenty_words_four_sentences() {
        for d in feeling_corpus(20, 0) {
            assert_eq!(d.text.split_whitespace().count(), 20);
            assert_eq!(d.text.matches('.').count(), 4);
        }
    }

    #[test]
    fn complementary_layout() {
        for (d, lat) in complementary_corpus_with_latents(200, 4) {
            assert_eq!(d.text.split_whitespace().count(), 12);
            let topic = if lat.a > 0 {
                FAKE_TOPIC_WORDS
            } else {
                REAL_TOPIC_WORDS
            };
            let hits = d
                .text
                .split(|c: char| !c.is_alphanumeric())
                .filter(|w| topic.contains(w))
                .count();
            assert_eq!(hits, 2 * lat.a.unsigned_abs() as usize);
            let bangs = d.text.matches('!').count() as i32;
            let qs = d.text.matches('?').count() as i32;
            let expected = match lat.b {
                1.5 => (3, 0),
                0.5 => (1, 0),
                -0.5 => (0, 1),
                _ => (0, 3),
            };
            assert_eq!((bangs, qs), expected);
            assert_eq!(d.label, Some(lat.label()));
        }
    }

    #[test]
    fn topic_only_bayes_error_is_one_eighth() {
        assert_eq!(complementary_topic_only_bayes_error(), 12.5);
    }
}
