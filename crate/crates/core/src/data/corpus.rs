use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tag::{repair_bio, Tag};
use crate::error::{Error, Result};

/// Replaces every numeric character with `0`.
pub fn normalize_digits(surface: &str) -> String {
    surface
        .chars()
        .map(|c| if c.is_numeric() { '0' } else { c })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Lookup form for the word embedding table; digits folded to `0`.
    pub normalized: String,
    pub label: Tag,
}

impl Token {
    pub fn new(surface: impl Into<String>, label: Tag) -> Self {
        let surface = surface.into();
        let normalized = normalize_digits(&surface);
        Token {
            surface,
            normalized,
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence and repairs its BIO labels.
    pub fn new(mut tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let labels: Vec<Tag> = tokens.iter().map(|t| t.label.clone()).collect();
        for (tok, tag) in tokens.iter_mut().zip(repair_bio(&labels)) {
            tok.label = tag;
        }
        Ok(Sentence { tokens })
    }

    /// Convenience constructor from `(surface, label)` pairs.
    pub fn from_pairs<S: AsRef<str>, L: AsRef<str>>(pairs: &[(S, L)]) -> Result<Self> {
        let tokens = pairs
            .iter()
            .map(|(s, l)| Ok(Token::new(s.as_ref(), l.as_ref().parse()?)))
            .collect::<Result<Vec<_>>>()?;
        Sentence::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn labels(&self) -> Vec<Tag> {
        self.tokens.iter().map(|t| t.label.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    /// Categories in order of first appearance.
    pub categories: Vec<String>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let categories = categories_of(&sentences);
        Corpus {
            sentences,
            categories,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Number of entities (B-led spans) of `category`.
    pub fn entity_count(&self, category: &str) -> usize {
        self.sentences
            .iter()
            .flat_map(|s| &s.tokens)
            .filter(|t| matches!(&t.label, Tag::Begin(c) if c == category))
            .count()
    }

    /// Replaces every `B-category`/`I-category` tag with `O`.
    pub fn mask_category(&self, category: &str) -> Result<Corpus> {
        if !self.categories.iter().any(|c| c == category) {
            return Err(Error::UnknownCategory(category.to_string()));
        }
        let sentences = self
            .sentences
            .iter()
            .map(|s| {
                let tokens = s
                    .tokens
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        if t.label.category() == Some(category) {
                            t.label = Tag::Outside;
                        }
                        t
                    })
                    .collect();
                Sentence { tokens }
            })
            .collect();
        Ok(Corpus::new(sentences))
    }

    /// Sentence-level seeded random split. The first part receives
    /// `ceil((1 - target_fraction) * N)` sentences; both parts keep the
    /// original relative order.
    pub fn split_progressive(&self, target_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
        if !(target_fraction > 0.0 && target_fraction < 1.0) {
            return Err(Error::FractionOutOfRange(target_fraction));
        }
        if self.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let n = self.len();
        let n_source = ceil_count(1.0 - target_fraction, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut source_idx = order[..n_source].to_vec();
        let mut target_idx = order[n_source..].to_vec();
        source_idx.sort_unstable();
        target_idx.sort_unstable();
        Ok((self.select(&source_idx), self.select(&target_idx)))
    }

    /// Seeded subsample of `ceil(fraction * N)` sentences, in original order.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<Corpus> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::FractionOutOfRange(fraction));
        }
        let n = self.len();
        let keep = ceil_count(fraction, n);
        if keep == n {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut idx = order[..keep].to_vec();
        idx.sort_unstable();
        Ok(self.select(&idx))
    }

    fn select(&self, idx: &[usize]) -> Corpus {
        Corpus::new(idx.iter().map(|&i| self.sentences[i].clone()).collect())
    }
}

/// `ceil(fraction * n)` with products that are integral up to rounding
/// noise treated as exact.
pub fn ceil_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = libm::round(x);
    let c = if libm::fabs(x - r) < 1e-9 { r } else { libm::ceil(x) };
    (c as usize).min(n)
}

fn categories_of(sentences: &[Sentence]) -> Vec<String> {
    let mut cats: Vec<String> = Vec::new();
    for tok in sentences.iter().flat_map(|s| &s.tokens) {
        if let Some(c) = tok.label.category() {
            if !cats.iter().any(|k| k == c) {
                cats.push(c.to_string());
            }
        }
    }
    cats
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::format;

    fn sent(pairs: &[(&str, &str)]) -> Sentence {
        Sentence::from_pairs(pairs).unwrap()
    }

    fn numbered(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| sent(&[(format!("w{i}").as_str(), "O")]))
                .collect(),
        )
    }

    #[test]
    fn digits_are_folded() {
        assert_eq!(normalize_digits("2019"), "0000");
        assert_eq!(normalize_digits("A4-b7"), "A0-b0");
        let t = Token::new("2019", Tag::Outside);
        assert_eq!(t.surface, "2019");
    }

    #[test]
    fn categories_follow_first_appearance() {
        let c = Corpus::new(vec![
            sent(&[("a", "B-ORG"), ("b", "B-PER")]),
            sent(&[("c", "B-LOC"), ("d", "I-LOC"), ("e", "B-ORG")]),
        ]);
        assert_eq!(c.categories, vec!["ORG", "PER", "LOC"]);
    }

    #[test]
    fn mask_replaces_only_that_category() {
        let c = Corpus::new(vec![sent(&[
            ("a", "B-LOC"),
            ("b", "I-LOC"),
            ("c", "O"),
            ("d", "B-PER"),
        ])]);
        let m = c.mask_category("LOC").unwrap();
        let labels: Vec<String> = m.sentences[0].tokens.iter().map(|t| t.label.to_string()).collect();
        assert_eq!(labels, vec!["O", "O", "O", "B-PER"]);
        assert_eq!(m.categories, vec!["PER"]);
        assert_eq!(m.entity_count("LOC"), 0);
        assert!(matches!(c.mask_category("MISC"), Err(Error::UnknownCategory(_))));
    }

    #[test]
    fn mask_leaves_sentences_without_category() {
        let c = Corpus::new(vec![
            sent(&[("a", "B-PER"), ("b", "O")]),
            sent(&[("x", "B-LOC")]),
        ]);
        let m = c.mask_category("LOC").unwrap();
        assert_eq!(m.sentences[0], c.sentences[0]);
    }

    #[test]
    fn split_sizes() {
        let (a, b) = numbered(10).split_progressive(0.2, 7).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a, b) = numbered(4).split_progressive(0.5, 7).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
        let again = numbered(10).split_progressive(0.2, 7).unwrap();
        assert_eq!(again.0, numbered(10).split_progressive(0.2, 7).unwrap().0);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                numbered(3).split_progressive(bad, 0),
                Err(Error::FractionOutOfRange(_))
            ));
        }
    }

    #[test]
    fn subsample_counts() {
        assert_eq!(numbered(10).subsample(0.25, 1).unwrap().len(), 3);
        assert_eq!(numbered(8).subsample(0.25, 1).unwrap().len(), 2);
        assert_eq!(numbered(8).subsample(1.0, 1).unwrap().len(), 8);
    }
}
