use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";

/// Word and character inventories. Ids 0 and 1 are reserved for padding and
/// unknown entries in both maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    words: Vec<String>,
    word_to_id: BTreeMap<String, usize>,
    chars: Vec<char>,
    char_to_id: BTreeMap<char, usize>,
    pub min_freq: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    min_freq: usize,
    words: Vec<String>,
    chars: Vec<char>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_entries(r.words, r.chars, r.min_freq)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            min_freq: v.min_freq,
            words: v.words[2..].to_vec(),
            chars: v.chars[2..].to_vec(),
        }
    }
}

impl Vocab {
    /// Rebuilds a vocabulary from its non-special entries, in id order.
    pub fn from_entries(words: Vec<String>, chars: Vec<char>, min_freq: usize) -> Self {
        let mut v = Vocab {
            words: Vec::new(),
            word_to_id: BTreeMap::new(),
            chars: Vec::new(),
            char_to_id: BTreeMap::new(),
            min_freq,
        };
        v.words.push(PAD_TOKEN.to_string());
        v.words.push(UNK_TOKEN.to_string());
        // Placeholders for the reserved character ids.
        v.chars.push('\u{0}');
        v.chars.push('\u{1}');
        for w in words {
            v.push_word(w);
        }
        for c in chars {
            v.push_char(c);
        }
        v
    }

    fn push_word(&mut self, w: String) -> bool {
        if self.word_to_id.contains_key(&w) || w == PAD_TOKEN || w == UNK_TOKEN {
            return false;
        }
        self.word_to_id.insert(w.clone(), self.words.len());
        self.words.push(w);
        true
    }

    fn push_char(&mut self, c: char) -> bool {
        if self.char_to_id.contains_key(&c) {
            return false;
        }
        self.char_to_id.insert(c, self.chars.len());
        self.chars.push(c);
        true
    }

    /// Number of word ids, specials included.
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    /// Words that received their own id, excluding the two specials.
    pub fn retained_words(&self) -> &[String] {
        &self.words[2..]
    }

    pub fn retained_chars(&self) -> &[char] {
        &self.chars[2..]
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn word_id(&self, normalized: &str) -> usize {
        self.word_to_id.get(normalized).copied().unwrap_or(UNK)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_to_id.get(&c).copied().unwrap_or(UNK)
    }

    pub fn contains_word(&self, w: &str) -> bool {
        self.word_to_id.contains_key(w)
    }

    /// Adds corpus words with frequency at least `min_freq` that are not
    /// already present. Returns the added words in id order.
    pub fn extend_from(&mut self, corpus: &Corpus, min_freq: usize) -> Vec<String> {
        let mut added = Vec::new();
        for (w, _) in frequent_words(corpus, min_freq) {
            if self.push_word(w.clone()) {
                added.push(w);
            }
        }
        added
    }
}

/// Counts normalized word forms and returns those with frequency at least
/// `min_freq`, sorted by descending frequency then lexicographically.
fn frequent_words(corpus: &Corpus, min_freq: usize) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in corpus.sentences.iter().flat_map(|s| &s.tokens) {
        *counts.entry(tok.normalized.as_str()).or_default() += 1;
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, n)| n >= min_freq)
        .map(|(w, n)| (w.to_string(), n))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept
}

/// Builds the word and character vocabularies from training data. Words
/// seen fewer than `min_freq` times map to `UNK`; characters are collected
/// from every surface form.
pub fn build_vocab(corpus: &Corpus, min_freq: usize) -> Vocab {
    let words = frequent_words(corpus, min_freq).into_iter().map(|(w, _)| w).collect();
    let mut chars: Vec<char> = corpus
        .sentences
        .iter()
        .flat_map(|s| &s.tokens)
        .flat_map(|t| t.surface.chars())
        .collect();
    chars.sort_unstable();
    chars.dedup();
    Vocab::from_entries(words, chars, min_freq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::corpus::Sentence;
    use alloc::vec;

    fn corpus(words: &[&str]) -> Corpus {
        let pairs: Vec<(&str, &str)> = words.iter().map(|w| (*w, "O")).collect();
        Corpus::new(vec![Sentence::from_pairs(&pairs).unwrap()])
    }

    #[test]
    fn rare_words_become_unk() {
        let c = corpus(&["the", "the", "cat", "sat", "sat", "sat", "sat", "sat"]);
        let v = build_vocab(&c, 2);
        assert_eq!(v.word_id("cat"), UNK);
        assert_ne!(v.word_id("sat"), UNK);
        assert_ne!(v.word_id("the"), UNK);
        assert_eq!(v.word_id("never-seen"), UNK);
    }

    #[test]
    fn retained_count_matches_hand_count() {
        // counts a:3 b:1 c:1 d:2 e:2 f:1
        let c = corpus(&["a", "a", "a", "b", "c", "d", "d", "e", "e", "f"]);
        let v = build_vocab(&c, 2);
        assert_eq!(v.retained_words().len(), 3);
        assert_eq!(v.word_count(), 5);
    }

    #[test]
    fn ids_are_a_bijection_and_deterministic() {
        let c = corpus(&["x", "y", "x", "y", "z", "z", "z"]);
        let a = build_vocab(&c, 1);
        let b = build_vocab(&c, 1);
        assert_eq!(a, b);
        for id in 0..a.word_count() {
            let w = a.word(id).unwrap();
            if id >= 2 {
                assert_eq!(a.word_id(w), id);
            }
        }
        assert_eq!(a.retained_words(), ["z", "x", "y"]);
    }

    #[test]
    fn uses_normalized_forms_and_surface_chars() {
        let c = corpus(&["19", "27"]);
        let v = build_vocab(&c, 2);
        assert_ne!(v.word_id("00"), UNK);
        assert_ne!(v.char_id('9'), UNK);
        assert_eq!(v.char_id('0'), UNK);
    }

    #[test]
    fn extension_appends() {
        let mut v = build_vocab(&corpus(&["a", "a"]), 2);
        let added = v.extend_from(&corpus(&["a", "a", "b", "b", "c"]), 2);
        assert_eq!(added, vec!["b"]);
        assert_eq!(v.word_id("b"), 3);
    }
}
