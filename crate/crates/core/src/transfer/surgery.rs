use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adapter::{AdapterConfig, AdapterParams};
use super::freeze::{FreezePolicy, FreezeSpec, TransferLayout};
use crate::crf::zero_transitions;
use crate::data::{init_rows, Corpus, Pretrained, Vocab, PAD};
use crate::error::{Error, Result};
use crate::numerics::{Linear, Parameters, Tensor2};
use crate::tagger::{
    fresh_char_blstm, fresh_char_embeddings, fresh_emission, fresh_word_blstm, Decoder, ParamGroup, TaggerModel,
    TaggerParams,
};

/// Mean and population standard deviation of a tensor's entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn fit(values: &[f64]) -> Result<Moments> {
        if values.is_empty() {
            return Err(Error::EmptySource);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Moments {
            mean,
            std: libm::sqrt(var),
        })
    }

    /// One draw from `Normal(mean, std)`; exactly `mean` when `std` is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std > 0.0 && self.std.is_finite() {
            Normal::new(self.mean, self.std).map(|d| d.sample(rng)).unwrap_or(self.mean)
        } else {
            self.mean
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOutput {
    pub weight: Tensor2,
    pub bias: Tensor2,
    pub weight_moments: Moments,
    pub bias_moments: Moments,
}

/// Appends `new_rows` rows to an emission layer. Existing rows are copied;
/// new weights and biases are drawn from normals fitted to the existing
/// weights and biases respectively.
pub fn extend_output_layer<R: Rng>(weight: &Tensor2, bias: &Tensor2, new_rows: usize, rng: &mut R) -> Result<ExtendedOutput> {
    if new_rows == 0 {
        return Err(Error::NonPositiveRows);
    }
    if bias.shape() != (weight.rows(), 1) {
        return Err(Error::ShapeMismatch {
            context: "output bias",
            expected: (weight.rows(), 1),
            found: bias.shape(),
        });
    }
    let weight_moments = Moments::fit(weight.as_slice())?;
    let bias_moments = Moments::fit(bias.as_slice())?;
    let cols = weight.cols();
    let mut w = weight.clone();
    let rows: Vec<Vec<f64>> = (0..new_rows)
        .map(|_| (0..cols).map(|_| weight_moments.sample(rng)).collect())
        .collect();
    w.append_rows(&rows)?;
    let mut b = bias.clone();
    let extra: Vec<Vec<f64>> = (0..new_rows).map(|_| alloc::vec![bias_moments.sample(rng)]).collect();
    b.append_rows(&extra)?;
    Ok(ExtendedOutput {
        weight: w,
        bias: b,
        weight_moments,
        bias_moments,
    })
}

/// Grows an `(L + 2)`-square transition matrix to `L + new_labels` labels.
/// Entries among old labels and the start/end states keep their values at
/// relocated indices; every entry touching a new label is drawn from a
/// normal fitted to the old matrix.
pub fn extend_transitions<R: Rng>(trans: &Tensor2, new_labels: usize, rng: &mut R) -> Result<(Tensor2, Moments)> {
    if new_labels == 0 {
        return Err(Error::NonPositiveRows);
    }
    if trans.rows() != trans.cols() || trans.rows() < 2 {
        return Err(Error::ShapeMismatch {
            context: "transitions",
            expected: (trans.rows(), trans.rows()),
            found: trans.shape(),
        });
    }
    let moments = Moments::fit(trans.as_slice())?;
    let ls = trans.rows() - 2;
    let lt = ls + new_labels;
    let old = |i: usize| -> Option<usize> {
        if i < ls {
            Some(i)
        } else if i == lt {
            Some(ls)
        } else if i == lt + 1 {
            Some(ls + 1)
        } else {
            None
        }
    };
    let out = Tensor2::from_fn(lt + 2, lt + 2, |to, from| match (old(to), old(from)) {
        (Some(a), Some(b)) => trans.get(a, b),
        _ => moments.sample(rng),
    });
    Ok((out, moments))
}

/// Knobs for [`build_target_model`].
#[derive(Debug, Clone, Copy)]
pub struct TransferOptions<'a> {
    pub freeze: FreezeSpec,
    /// Embed the source model and attach an adapter.
    pub adapter: Option<AdapterConfig>,
    pub seed: u64,
    /// Requested decoder; must match the source's when given.
    pub decoder: Option<Decoder>,
    /// Target corpus whose words extend the vocabulary, with a minimum count.
    pub vocab_extension: Option<(&'a Corpus, usize)>,
    pub pretrained: Option<&'a Pretrained>,
}

impl<'a> TransferOptions<'a> {
    pub fn new(freeze: FreezeSpec, seed: u64) -> Self {
        TransferOptions {
            freeze,
            adapter: None,
            seed,
            decoder: None,
            vocab_extension: None,
            pretrained: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: ParamGroup,
    pub policy: FreezePolicy,
    pub copied: usize,
    pub reinitialized: usize,
    /// Entries that receive no updates during target training.
    pub frozen: usize,
}

/// Audit record of one surgery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source_labels: Vec<String>,
    pub target_labels: Vec<String>,
    /// `label_mapping[i]` is the target index of source label `i`.
    pub label_mapping: Vec<usize>,
    pub new_categories: Vec<String>,
    pub groups: Vec<GroupReport>,
    pub weight_moments: Option<Moments>,
    pub bias_moments: Option<Moments>,
    pub transition_moments: Option<Moments>,
    pub added_words: Vec<String>,
    pub adapter_parameters: usize,
    /// Target parameters excluding the adapter.
    pub total_parameters: usize,
}

impl TransferReport {
    pub fn copied(&self) -> usize {
        self.groups.iter().map(|g| g.copied).sum()
    }

    pub fn reinitialized(&self) -> usize {
        self.groups.iter().map(|g| g.reinitialized).sum()
    }

    pub fn frozen(&self) -> usize {
        self.groups.iter().map(|g| g.frozen).sum()
    }
}

fn fresh_word_embeddings<R: Rng>(vocab: &Vocab, dim: usize, pretrained: Option<&Pretrained>, rng: &mut R) -> Result<Tensor2> {
    let words: Vec<String> = (0..vocab.word_count())
        .map(|id| vocab.word(id).unwrap_or_default().to_string())
        .collect();
    let mut rows = init_rows(&words, dim, pretrained, rng)?;
    rows[PAD].fill(0.0);
    let mut t = Tensor2::zeros(0, dim);
    t.append_rows(&rows)?;
    Ok(t)
}

/// Builds an untrained target model from a trained source model: the label
/// inventory gains `B-`/`I-` tags for each new category, transferred groups
/// are copied, the output layer is extended, and `RandomInit` groups are
/// drawn fresh. Random draws happen in a fixed order (vocabulary rows,
/// embeddings, recurrent layers, output layer, adapter) so the result is a
/// pure function of the inputs and `seed`.
pub fn build_target_model<S: AsRef<str>>(
    source: &TaggerModel,
    new_categories: &[S],
    opts: &TransferOptions<'_>,
) -> Result<(TaggerModel, TransferReport)> {
    opts.freeze.validate()?;
    source.validate()?;
    if source.params.adapter.is_some() {
        return Err(Error::ChainedTransfer);
    }
    let decoder = opts.decoder.unwrap_or(source.config.decoder);
    if decoder != source.config.decoder {
        return Err(Error::DecoderMismatch {
            source_decoder: source.config.decoder.name(),
            requested: decoder.name(),
        });
    }
    let labels = source.labels.extended(new_categories)?;
    let ls = source.num_labels();
    let lt = labels.len();
    let config = source.config;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut vocab = source.vocab.clone();
    let added_words = match opts.vocab_extension {
        Some((corpus, min_freq)) => vocab.extend_from(corpus, min_freq),
        None => Vec::new(),
    };
    let added_rows = init_rows(&added_words, config.word_dim, opts.pretrained, &mut rng)?;

    let sp = &source.params;
    let mut groups = Vec::new();
    let mut group = |group: ParamGroup, policy: FreezePolicy, copied: usize, reinitialized: usize| {
        let frozen = match policy {
            FreezePolicy::Locked => copied + reinitialized,
            FreezePolicy::PartiallyLocked => copied,
            _ => 0,
        };
        groups.push(GroupReport {
            group,
            policy,
            copied,
            reinitialized,
            frozen,
        });
    };

    let f = opts.freeze;
    let (word_embeddings, char_embeddings) = if f.embeddings.copies() {
        let mut w = sp.word_embeddings.clone();
        w.append_rows(&added_rows)?;
        (w, sp.char_embeddings.clone())
    } else {
        let w = fresh_word_embeddings(&vocab, config.word_dim, opts.pretrained, &mut rng)?;
        let c = fresh_char_embeddings(vocab.char_count(), config.char_dim, &mut rng);
        (w, c)
    };
    let emb_total = word_embeddings.len() + char_embeddings.len();
    let emb_copied = if f.embeddings.copies() {
        sp.word_embeddings.len() + sp.char_embeddings.len()
    } else {
        0
    };
    group(ParamGroup::Embeddings, f.embeddings, emb_copied, emb_total - emb_copied);

    let (char_blstm, word_blstm) = if f.recurrent.copies() {
        (sp.char_blstm.clone(), sp.word_blstm.clone())
    } else {
        (fresh_char_blstm(&config, &mut rng), fresh_word_blstm(&config, &mut rng))
    };
    let rec_total = char_blstm.parameter_count() + word_blstm.parameter_count();
    let rec_copied = if f.recurrent.copies() { rec_total } else { 0 };
    group(ParamGroup::Recurrent, f.recurrent, rec_copied, rec_total - rec_copied);

    let mut weight_moments = None;
    let mut bias_moments = None;
    let mut transition_moments = None;
    let (emission, transitions) = if f.output.copies() {
        let ext = extend_output_layer(&sp.emission.weight, &sp.emission.bias, lt - ls, &mut rng)?;
        weight_moments = Some(ext.weight_moments);
        bias_moments = Some(ext.bias_moments);
        let trans = match &sp.transitions {
            Some(t) => {
                let (t, m) = extend_transitions(t, lt - ls, &mut rng)?;
                transition_moments = Some(m);
                Some(t)
            }
            None => None,
        };
        (
            Linear {
                weight: ext.weight,
                bias: ext.bias,
            },
            trans,
        )
    } else {
        let e = fresh_emission(&config, lt, &mut rng);
        (e, (decoder == Decoder::Crf).then(|| zero_transitions(lt)))
    };
    let out_total = emission.parameter_count() + transitions.as_ref().map_or(0, Tensor2::len);
    let out_copied = if f.output.copies() {
        sp.emission.parameter_count() + sp.transitions.as_ref().map_or(0, Tensor2::len)
    } else {
        0
    };
    group(ParamGroup::Output, f.output, out_copied, out_total - out_copied);

    let adapter = opts.adapter.map(|cfg| {
        let hidden = cfg.hidden.unwrap_or(lt);
        AdapterParams::new(ls, lt, hidden, cfg.combine, &mut rng)
    });
    let adapter_parameters = adapter.as_ref().map_or(0, Parameters::parameter_count);
    let embedded = adapter.is_some().then(|| Box::new(source.clone()));

    let params = TaggerParams {
        word_embeddings,
        char_embeddings,
        char_blstm,
        word_blstm,
        emission,
        transitions,
        adapter,
    };
    let lineage = TransferLayout {
        source_labels: ls,
        freeze: opts.freeze,
        source_categories: source.labels.categories().to_vec(),
        new_categories: labels.categories()[source.labels.categories().len()..].to_vec(),
    };
    let model = TaggerModel {
        config,
        labels,
        vocab,
        params,
        source: embedded,
        lineage: Some(lineage.clone()),
    };
    model.validate()?;
    let report = TransferReport {
        source_labels: source.labels.tags().iter().map(ToString::to_string).collect(),
        target_labels: model.labels.tags().iter().map(ToString::to_string).collect(),
        label_mapping: (0..ls).collect(),
        new_categories: lineage.new_categories,
        groups,
        weight_moments,
        bias_moments,
        transition_moments,
        added_words,
        adapter_parameters,
        total_parameters: emb_total + rec_total + out_total,
    };
    Ok((model, report))
}
