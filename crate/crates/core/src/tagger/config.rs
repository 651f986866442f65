use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AdamConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Softmax,
    Crf,
}

impl Decoder {
    pub fn name(self) -> &'static str {
        match self {
            Decoder::Softmax => "softmax",
            Decoder::Crf => "crf",
        }
    }
}

/// Layer widths and decoder choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub word_hidden: usize,
    pub decoder: Decoder,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 100,
            char_dim: 25,
            char_hidden: 25,
            word_hidden: 128,
            decoder: Decoder::Crf,
        }
    }
}

impl ModelConfig {
    /// Width of the word BLSTM input: word embedding plus both char directions.
    pub fn word_input_dim(&self) -> usize {
        self.word_dim + 2 * self.char_hidden
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_dim == 0 || self.char_dim == 0 || self.char_hidden == 0 || self.word_hidden == 0 {
            return Err(Error::InvalidConfig(format!("all layer widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub max_epochs: usize,
    pub dropout_rate: f64,
    /// Epochs without a strict validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Also score the training set after every epoch.
    pub eval_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            clip_norm: 50.0,
            max_epochs: 100,
            dropout_rate: 0.5,
            patience: 25,
            seed: 0,
            eval_train: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("{what}: {self:?}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip norm must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must be in [0, 1)");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}
