#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqtl_core::data::{build_vocab, Corpus, EmbeddingTable, Sentence};
use seqtl_core::tagger::{Decoder, LabelSet, ModelConfig, TaggerModel};

pub const PER: &[&str] = &["Alice", "Bruno", "Chen", "Dana"];
pub const LOC: &[&str] = &["Paris", "Oslo", "Lima", "Quito"];
pub const ORG: &[&str] = &["Acme", "Globex", "Initech"];
pub const FILLER: &[&str] = &["the", "saw", "in", "met", "and", "from", "at", "2019"];

/// Random sentences mixing filler words with single-token entities.
pub fn toy_corpus(n: usize, categories: &[&str], seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = (0..n)
        .map(|_| {
            let len = rng.random_range(2..6);
            let pairs: Vec<(String, String)> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        let cat = *categories.choose(&mut rng).unwrap();
                        let pool = match cat {
                            "PER" => PER,
                            "LOC" => LOC,
                            _ => ORG,
                        };
                        (pool.choose(&mut rng).unwrap().to_string(), format!("B-{cat}"))
                    } else {
                        (FILLER.choose(&mut rng).unwrap().to_string(), "O".to_string())
                    }
                })
                .collect();
            Sentence::from_pairs(&pairs).unwrap()
        })
        .collect();
    Corpus::new(sentences)
}

pub fn small_config(decoder: Decoder) -> ModelConfig {
    ModelConfig {
        word_dim: 4,
        char_dim: 3,
        char_hidden: 3,
        word_hidden: 4,
        decoder,
    }
}

pub fn fresh_model(corpus: &Corpus, categories: &[&str], config: ModelConfig, seed: u64) -> TaggerModel {
    let vocab = build_vocab(corpus, 1);
    let table = EmbeddingTable::random(vocab.word_count(), config.word_dim, seed);
    TaggerModel::new(config, LabelSet::from_categories(categories), vocab, table.vectors, seed).unwrap()
}

pub fn sentence(pairs: &[(&str, &str)]) -> Sentence {
    Sentence::from_pairs(pairs).unwrap()
}
