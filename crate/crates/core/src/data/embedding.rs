use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, PAD, UNK};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

/// Half-width of the uniform range used for words without a pretrained vector.
pub const UNIFORM_RANGE: f64 = 0.25;

/// Pretrained vectors keyed by word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pretrained {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl Pretrained {
    pub fn new(dim: usize) -> Self {
        Pretrained {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    /// Exact match first, then the lowercased form.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        if let Some(v) = self.vectors.get(word) {
            return Some(v);
        }
        let lower = word.to_lowercase();
        self.vectors.get(&lower).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    Pretrained,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: Tensor2,
    pub source: EmbeddingSource,
    /// Rows that were filled from the pretrained table.
    pub pretrained_hits: usize,
}

impl EmbeddingTable {
    /// Uniform `[-0.25, 0.25]` rows with a zero padding row.
    pub fn random(rows: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Tensor2::zeros(rows, dim);
        for r in 0..rows {
            let row = uniform_row(dim, &mut rng);
            if r != PAD {
                vectors.row_mut(r).copy_from_slice(&row);
            }
        }
        EmbeddingTable {
            dim,
            vectors,
            source: EmbeddingSource::Random,
            pretrained_hits: 0,
        }
    }

    /// Rows for vocabulary words come from `pretrained` (verbatim, then
    /// lowercased); everything else, `UNK` included, gets a seeded uniform
    /// draw. Every row consumes a draw so a word's fallback vector does not
    /// depend on which other words were found.
    pub fn from_pretrained(vocab: &Vocab, pretrained: &Pretrained, seed: u64) -> Result<Self> {
        let dim = pretrained.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Tensor2::zeros(vocab.word_count(), dim);
        let mut hits = 0;
        for id in 0..vocab.word_count() {
            let fallback = uniform_row(dim, &mut rng);
            let row = vectors.row_mut(id);
            match id {
                PAD => {}
                UNK => row.copy_from_slice(&fallback),
                _ => match vocab.word(id).and_then(|w| pretrained.lookup(w)) {
                    Some(v) => {
                        row.copy_from_slice(v);
                        hits += 1;
                    }
                    None => row.copy_from_slice(&fallback),
                },
            }
        }
        Ok(EmbeddingTable {
            dim,
            vectors,
            source: EmbeddingSource::Pretrained,
            pretrained_hits: hits,
        })
    }

    pub fn rows(&self) -> usize {
        self.vectors.rows()
    }
}

/// Initial rows for `words` under the pretrained → lowercase → uniform chain.
pub fn init_rows<R: Rng>(
    words: &[String],
    dim: usize,
    pretrained: Option<&Pretrained>,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if let Some(p) = pretrained {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
    }
    Ok(words
        .iter()
        .map(|w| {
            let fallback = uniform_row(dim, rng);
            pretrained
                .and_then(|p| p.lookup(w))
                .map(<[f64]>::to_vec)
                .unwrap_or(fallback)
        })
        .collect())
}

pub(crate) fn uniform_row<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut row = vec![0.0; dim];
    for x in &mut row {
        *x = rng.random_range(-UNIFORM_RANGE..=UNIFORM_RANGE);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, Corpus, Sentence};

    fn vocab() -> Vocab {
        let s = Sentence::from_pairs(&[
            ("Paris", "B-LOC"),
            ("Paris", "B-LOC"),
            ("is", "O"),
            ("is", "O"),
            ("zzz", "O"),
            ("zzz", "O"),
        ])
        .unwrap();
        build_vocab(&Corpus::new(alloc::vec![s]), 2)
    }

    #[test]
    fn lowercase_fallback_and_uniform_range() {
        let v = vocab();
        let mut p = Pretrained::new(3);
        p.insert("paris", alloc::vec![0.5, -1.0, 2.0]).unwrap();
        p.insert("is", alloc::vec![1.0, 1.0, 1.0]).unwrap();
        let t = EmbeddingTable::from_pretrained(&v, &p, 3).unwrap();
        assert_eq!(t.vectors.row(v.word_id("Paris")), &[0.5, -1.0, 2.0]);
        assert_eq!(t.vectors.row(v.word_id("is")), &[1.0, 1.0, 1.0]);
        assert_eq!(t.pretrained_hits, 2);
        for &x in t.vectors.row(v.word_id("zzz")).iter().chain(t.vectors.row(UNK)) {
            assert!((-0.25..=0.25).contains(&x));
        }
        assert!(t.vectors.row(PAD).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_checked() {
        let mut p = Pretrained::new(3);
        assert!(matches!(
            p.insert("a", alloc::vec![1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn seeded_tables_are_reproducible() {
        assert_eq!(EmbeddingTable::random(5, 4, 9), EmbeddingTable::random(5, 4, 9));
        assert_ne!(EmbeddingTable::random(5, 4, 9), EmbeddingTable::random(5, 4, 10));
    }
}
