//! The BLSTM(+CRF) tagger and its training loop.

mod config;
mod labels;
mod model;
mod params;
mod train;

pub use config::{Decoder, ModelConfig, TrainConfig};
pub use labels::LabelSet;
pub(crate) use model::{fresh_char_blstm, fresh_char_embeddings, fresh_emission, fresh_word_blstm};
pub use model::{DropoutCtx, Encoded, TaggerModel};
pub use params::{ParamGroup, TaggerParams};
pub use train::{train, train_with, EpochRecord, TrainOutcome};
