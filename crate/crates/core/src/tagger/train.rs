use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::TaggerModel;
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::numerics::{clip_gradients, AdamState, Parameters};
use crate::transfer::apply_freeze;

/// One line of training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sentence training loss over the epoch (train mode).
    pub train_loss: f64,
    pub valid_precision: f64,
    pub valid_recall: f64,
    pub valid_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_f1: Option<f64>,
    /// Validation F1 strictly exceeded every earlier value.
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best epoch, rounded to single precision.
    pub best: TaggerModel,
    /// `None` when no epoch improved on zero validation F1.
    pub best_epoch: Option<usize>,
    pub best_f1: f64,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
    /// Weights after the last completed epoch, unrounded.
    pub last: TaggerModel,
}

/// Trains `model` and returns the best snapshot by validation F1.
pub fn train(model: TaggerModel, train_set: &Corpus, valid: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train_set, valid, config, |_, _| Ok::<(), Error>(()))
}

/// As [`train`], calling `on_improve` with each new best snapshot so callers
/// can persist it.
pub fn train_with<F, E>(
    mut model: TaggerModel,
    train_set: &Corpus,
    valid: &Corpus,
    config: &TrainConfig,
    mut on_improve: F,
) -> core::result::Result<TrainOutcome, E>
where
    F: FnMut(&TaggerModel, &EpochRecord) -> core::result::Result<(), E>,
    E: From<Error>,
{
    config.validate()?;
    model.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyTrainingSet.into());
    }
    for s in train_set.sentences.iter().chain(&valid.sentences) {
        model.gold_indices(s)?;
    }

    let mut best = model.clone();
    best.round_to_f32();
    let mut best_f1 = 0.0;
    let mut best_epoch = None;
    let mut history = Vec::new();
    let mut stopped_early = false;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(&model.params, config.adam());
    let mut grads = model.params.zeros_like();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            grads.zero();
            let drop = (config.dropout_rate > 0.0).then_some((config.dropout_rate, &mut rng as &mut dyn rand::RngCore));
            total += model.loss_and_grad(&train_set.sentences[i], drop, &mut grads)?;
            if let Some(layout) = &model.lineage {
                apply_freeze(&mut grads, layout)?;
            }
            clip_gradients(&mut grads, config.clip_norm);
            adam.step(&mut model.params, &grads)?;
        }
        let report = model.evaluate(valid)?;
        let train_f1 = if config.eval_train {
            Some(model.evaluate(train_set)?.overall.f1())
        } else {
            None
        };
        let f1 = report.overall.f1();
        let improved = f1 > best_f1;
        let record = EpochRecord {
            epoch,
            train_loss: total / train_set.len() as f64,
            valid_precision: report.overall.precision(),
            valid_recall: report.overall.recall(),
            valid_f1: f1,
            train_f1,
            improved,
        };
        if improved {
            best_f1 = f1;
            best_epoch = Some(epoch);
            best = model.clone();
            best.round_to_f32();
            on_improve(&best, &record)?;
        }
        history.push(record);
        if epoch - best_epoch.unwrap_or(0) >= config.patience && epoch < config.max_epochs {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_f1,
        history,
        stopped_early,
        last: model,
    })
}
