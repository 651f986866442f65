use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Decoder, ModelConfig};
use super::labels::LabelSet;
use super::params::TaggerParams;
use crate::crf;
use crate::data::{repair_bio, Corpus, Sentence, Tag, Vocab, PAD, UNIFORM_RANGE};
use crate::error::{Error, Result};
use crate::eval::{score, ScoreReport};
use crate::numerics::{argmax, dropout, softmax_xent, Blstm, BlstmCache, Linear, Mode, Tensor2};
use crate::transfer::{adapter_backward, adapter_forward, AdapterCache, TransferLayout};

/// Dropout rate and random source for a training-mode pass.
pub type DropoutCtx<'a> = Option<(f64, &'a mut dyn RngCore)>;

/// A complete BLSTM(+CRF) tagger: lookup tables, character and word
/// BLSTMs, emission layer, optional CRF transitions, and optionally an
/// adapter fed by an embedded, frozen source model.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub config: ModelConfig,
    pub labels: LabelSet,
    pub vocab: Vocab,
    pub params: TaggerParams,
    /// Frozen source model read by the adapter. Never updated.
    pub source: Option<Box<TaggerModel>>,
    /// Freeze policy and output layout when this model came from a transfer.
    pub lineage: Option<TransferLayout>,
}

/// Word and character ids of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub words: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
}

struct CharCache {
    ids: Vec<usize>,
    cache: BlstmCache,
}

struct Cache {
    words: Vec<usize>,
    chars: Vec<CharCache>,
    masks: Vec<Vec<f64>>,
    word_cache: BlstmCache,
    hidden: Vec<Vec<f64>>,
    adapter: Option<AdapterCache>,
}

impl TaggerModel {
    /// Fresh model. `word_embeddings` must have one row per vocabulary word
    /// and `config.word_dim` columns.
    pub fn new(config: ModelConfig, labels: LabelSet, vocab: Vocab, word_embeddings: Tensor2, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = fresh_params(&config, labels.len(), &vocab, word_embeddings, &mut rng);
        let model = TaggerModel {
            config,
            labels,
            vocab,
            params,
            source: None,
            lineage: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// Checks every shape invariant of the topology.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let p = &self.params;
        let l = self.labels.len();
        let expect = |context: &'static str, t: &Tensor2, shape: (usize, usize)| {
            if t.shape() == shape {
                Ok(())
            } else {
                Err(Error::ShapeMismatch {
                    context,
                    expected: shape,
                    found: t.shape(),
                })
            }
        };
        expect("word embeddings", &p.word_embeddings, (self.vocab.word_count(), c.word_dim))?;
        expect("char embeddings", &p.char_embeddings, (self.vocab.char_count(), c.char_dim))?;
        check_blstm("char blstm", &p.char_blstm, c.char_dim, c.char_hidden)?;
        check_blstm("word blstm", &p.word_blstm, c.word_input_dim(), c.word_hidden)?;
        expect("emission weight", &p.emission.weight, (l, 2 * c.word_hidden))?;
        expect("emission bias", &p.emission.bias, (l, 1))?;
        match (c.decoder, &p.transitions) {
            (Decoder::Crf, Some(t)) => expect("transitions", t, (l + 2, l + 2))?,
            (Decoder::Softmax, None) => {}
            _ => return Err(Error::InvalidConfig(format!("transitions must be present iff decoder is crf"))),
        }
        match (&p.adapter, &self.source) {
            (None, None) => {}
            (Some(a), Some(s)) => {
                s.validate()?;
                if a.source_labels() != s.num_labels() || a.target_labels() != l {
                    return Err(Error::ShapeMismatch {
                        context: "adapter widths",
                        expected: (s.num_labels(), l),
                        found: (a.source_labels(), a.target_labels()),
                    });
                }
                if s.source.is_some() {
                    return Err(Error::ChainedTransfer);
                }
            }
            _ => return Err(Error::InvalidConfig("adapter and source model must be present together".into())),
        }
        if let Some(lin) = &self.lineage {
            if lin.source_labels > l {
                return Err(Error::LayoutMismatch(format!(
                    "{} transferred labels but only {l} labels",
                    lin.source_labels
                )));
            }
        }
        Ok(())
    }

    pub fn encode(&self, sentence: &Sentence) -> Result<Encoded> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        let words = sentence.tokens.iter().map(|t| self.vocab.word_id(&t.normalized)).collect();
        let chars = sentence.tokens.iter().map(|t| self.char_ids(&t.surface)).collect();
        Ok(Encoded { words, chars })
    }

    fn char_ids(&self, word: &str) -> Vec<usize> {
        let ids: Vec<usize> = word.chars().map(|c| self.vocab.char_id(c)).collect();
        if ids.is_empty() {
            vec![PAD]
        } else {
            ids
        }
    }

    pub fn gold_indices(&self, sentence: &Sentence) -> Result<Vec<usize>> {
        sentence.tokens.iter().map(|t| self.labels.index_of(&t.label)).collect()
    }

    /// Final forward state and final backward state of the character BLSTM,
    /// width `2 * char_hidden`. Unknown characters use the `UNK` row.
    pub fn char_encode(&self, word: &str) -> Vec<f64> {
        let ids = self.char_ids(word);
        self.char_forward(&ids).map(|(e, _)| e).expect("character encoder shapes are validated")
    }

    fn char_forward(&self, ids: &[usize]) -> Result<(Vec<f64>, CharCache)> {
        let inputs: Vec<Vec<f64>> = ids.iter().map(|&i| self.params.char_embeddings.row(i).to_vec()).collect();
        let (out, cache) = self.params.char_blstm.forward(&inputs)?;
        let h = self.config.char_hidden;
        let mut e = out[out.len() - 1][..h].to_vec();
        e.extend_from_slice(&out[0][h..]);
        Ok((
            e,
            CharCache {
                ids: ids.to_vec(),
                cache,
            },
        ))
    }

    fn forward_cached(&self, sentence: &Sentence, mut drop: DropoutCtx<'_>) -> Result<(Vec<Vec<f64>>, Cache)> {
        let enc = self.encode(sentence)?;
        let n = enc.words.len();
        let mut inputs = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        let mut chars = Vec::with_capacity(n);
        for t in 0..n {
            let emb = self.params.word_embeddings.row(enc.words[t]);
            let (mut x, mask) = match drop.as_mut() {
                Some((rate, rng)) => dropout(emb, *rate, Mode::Train, *rng)?,
                None => (emb.to_vec(), vec![1.0; emb.len()]),
            };
            let (e, cc) = self.char_forward(&enc.chars[t])?;
            x.extend_from_slice(&e);
            inputs.push(x);
            masks.push(mask);
            chars.push(cc);
        }
        let (hidden, word_cache) = self.params.word_blstm.forward(&inputs)?;
        let mut emissions = hidden
            .iter()
            .map(|h| self.params.emission.forward(h))
            .collect::<Result<Vec<_>>>()?;
        let adapter = match (&self.params.adapter, &self.source) {
            (Some(a), Some(source)) => {
                let source_emissions = source.emissions(sentence)?;
                let (out, cache) = adapter_forward(a, &source_emissions)?;
                for (p, a) in emissions.iter_mut().zip(&out) {
                    for (x, y) in p.iter_mut().zip(a) {
                        *x += y;
                    }
                }
                Some(cache)
            }
            _ => None,
        };
        if !emissions.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteActivation("emissions"));
        }
        Ok((
            emissions,
            Cache {
                words: enc.words,
                chars,
                masks,
                word_cache,
                hidden,
                adapter,
            },
        ))
    }

    fn backward(&self, cache: &Cache, d_emissions: &[Vec<f64>], grads: &mut TaggerParams) {
        if let (Some(a), Some(ac), Some(ga)) = (&self.params.adapter, &cache.adapter, grads.adapter.as_mut()) {
            adapter_backward(a, ac, d_emissions, ga);
        }
        let d_hidden: Vec<Vec<f64>> = cache
            .hidden
            .iter()
            .zip(d_emissions)
            .map(|(h, d)| self.params.emission.backward(h, d, &mut grads.emission))
            .collect();
        let d_inputs = self.params.word_blstm.backward(&cache.word_cache, &d_hidden, &mut grads.word_blstm);
        let wd = self.config.word_dim;
        let ch = self.config.char_hidden;
        for (t, dx) in d_inputs.iter().enumerate() {
            let row = grads.word_embeddings.row_mut(cache.words[t]);
            for ((g, d), m) in row.iter_mut().zip(&dx[..wd]).zip(&cache.masks[t]) {
                *g += d * m;
            }
            let cc = &cache.chars[t];
            let k = cc.ids.len();
            let mut d_out = vec![vec![0.0; 2 * ch]; k];
            d_out[k - 1][..ch].copy_from_slice(&dx[wd..wd + ch]);
            for (a, b) in d_out[0][ch..].iter_mut().zip(&dx[wd + ch..]) {
                *a += b;
            }
            let d_chars = self.params.char_blstm.backward(&cc.cache, &d_out, &mut grads.char_blstm);
            for (&id, dc) in cc.ids.iter().zip(&d_chars) {
                for (g, d) in grads.char_embeddings.row_mut(id).iter_mut().zip(dc) {
                    *g += d;
                }
            }
        }
    }

    /// Evaluation-mode emission scores, adapter contribution included.
    pub fn emissions(&self, sentence: &Sentence) -> Result<Vec<Vec<f64>>> {
        self.forward_cached(sentence, None).map(|(e, _)| e)
    }

    fn loss_from(&self, emissions: &[Vec<f64>], gold: &[usize]) -> Result<(f64, Vec<Vec<f64>>, Option<Tensor2>)> {
        match (&self.config.decoder, &self.params.transitions) {
            (Decoder::Crf, Some(trans)) => {
                let g = crf::crf_nll_and_grad(emissions, trans, gold)?;
                Ok((g.loss, g.d_emissions, Some(g.d_transitions)))
            }
            _ => {
                let mut total = 0.0;
                let mut d = Vec::with_capacity(emissions.len());
                for (e, &y) in emissions.iter().zip(gold) {
                    let (loss, grad) = softmax_xent(e, y)?;
                    total += loss;
                    d.push(grad);
                }
                Ok((total, d, None))
            }
        }
    }

    /// Sentence loss (summed token cross-entropy, or CRF negative
    /// log-likelihood) with gradients accumulated into `grads`.
    pub fn loss_and_grad(&self, sentence: &Sentence, drop: DropoutCtx<'_>, grads: &mut TaggerParams) -> Result<f64> {
        let gold = self.gold_indices(sentence)?;
        let (emissions, cache) = self.forward_cached(sentence, drop)?;
        let (loss, d_emissions, d_trans) = self.loss_from(&emissions, &gold)?;
        if let (Some(d), Some(g)) = (d_trans, grads.transitions.as_mut()) {
            g.add_assign(&d);
        }
        self.backward(&cache, &d_emissions, grads);
        Ok(loss)
    }

    pub fn loss(&self, sentence: &Sentence, drop: DropoutCtx<'_>) -> Result<f64> {
        let gold = self.gold_indices(sentence)?;
        let (emissions, _) = self.forward_cached(sentence, drop)?;
        Ok(self.loss_from(&emissions, &gold)?.0)
    }

    /// Label indices before BIO repair, plus the Viterbi score for CRF models.
    pub fn decode(&self, emissions: &[Vec<f64>]) -> Result<(Vec<usize>, Option<f64>)> {
        match &self.params.transitions {
            Some(trans) if self.config.decoder == Decoder::Crf => {
                let (path, s) = crf::viterbi_decode(emissions, trans)?;
                Ok((path, Some(s)))
            }
            _ => Ok((emissions.iter().map(|e| argmax(e)).collect(), None)),
        }
    }

    /// Decoded, BIO-repaired tags.
    pub fn predict(&self, sentence: &Sentence) -> Result<Vec<Tag>> {
        let emissions = self.emissions(sentence)?;
        let (path, _) = self.decode(&emissions)?;
        let tags: Vec<Tag> = path.iter().map(|&i| self.labels.tag(i).clone()).collect();
        Ok(repair_bio(&tags))
    }

    pub fn predict_corpus(&self, corpus: &Corpus) -> Result<Vec<Vec<Tag>>> {
        corpus.sentences.iter().map(|s| self.predict(s)).collect()
    }

    /// Entity-level scores of this model's predictions against `corpus`.
    pub fn evaluate(&self, corpus: &Corpus) -> Result<ScoreReport> {
        let pred = self.predict_corpus(corpus)?;
        let gold: Vec<Vec<Tag>> = corpus.sentences.iter().map(Sentence::labels).collect();
        score(&pred, &gold)
    }

    /// Rounds every parameter (embedded source included) to `f32`.
    pub fn round_to_f32(&mut self) {
        self.params.round_to_f32();
        if let Some(s) = self.source.as_mut() {
            s.round_to_f32();
        }
    }

    /// Total number of trainable parameters.
    pub fn parameter_count(&self) -> usize {
        use crate::numerics::Parameters;
        self.params.parameter_count()
    }
}

fn check_blstm(context: &'static str, b: &Blstm, input: usize, hidden: usize) -> Result<()> {
    for dir in [&b.forward, &b.backward] {
        if dir.input_weights.shape() != (4 * hidden, input)
            || dir.recurrent_weights.shape() != (4 * hidden, hidden)
            || dir.bias.shape() != (4 * hidden, 1)
        {
            return Err(Error::ShapeMismatch {
                context,
                expected: (input, hidden),
                found: (dir.input_size(), dir.hidden_size()),
            });
        }
    }
    Ok(())
}

/// Uniform `[-0.25, 0.25]` character table with a zero padding row.
pub(crate) fn fresh_char_embeddings<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Tensor2 {
    Tensor2::from_fn(rows, dim, |r, _| {
        let v = rng.random_range(-UNIFORM_RANGE..=UNIFORM_RANGE);
        if r == PAD {
            0.0
        } else {
            v
        }
    })
}

pub(crate) fn fresh_char_blstm<R: Rng>(config: &ModelConfig, rng: &mut R) -> Blstm {
    Blstm::new(config.char_dim, config.char_hidden, rng)
}

pub(crate) fn fresh_word_blstm<R: Rng>(config: &ModelConfig, rng: &mut R) -> Blstm {
    Blstm::new(config.word_input_dim(), config.word_hidden, rng)
}

pub(crate) fn fresh_emission<R: Rng>(config: &ModelConfig, labels: usize, rng: &mut R) -> Linear {
    Linear::new(2 * config.word_hidden, labels, rng)
}

fn fresh_params<R: Rng>(config: &ModelConfig, labels: usize, vocab: &Vocab, word_embeddings: Tensor2, rng: &mut R) -> TaggerParams {
    let char_embeddings = fresh_char_embeddings(vocab.char_count(), config.char_dim, rng);
    let char_blstm = fresh_char_blstm(config, rng);
    let word_blstm = fresh_word_blstm(config, rng);
    let emission = fresh_emission(config, labels, rng);
    TaggerParams {
        word_embeddings,
        char_embeddings,
        char_blstm,
        word_blstm,
        emission,
        transitions: (config.decoder == Decoder::Crf).then(|| crf::zero_transitions(labels)),
        adapter: None,
    }
}
