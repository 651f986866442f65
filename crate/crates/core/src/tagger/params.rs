use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::numerics::{Blstm, Linear, LstmParams, Parameters, Tensor2};
use crate::transfer::AdapterParams;

/// Coarse parameter groups used by the freeze policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    /// Word and character lookup tables.
    Embeddings,
    /// Character and word BLSTMs.
    Recurrent,
    /// Emission layer and CRF transitions.
    Output,
    Adapter,
}

/// Every trainable tensor of a tagger. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerParams {
    pub word_embeddings: Tensor2,
    pub char_embeddings: Tensor2,
    pub char_blstm: Blstm,
    pub word_blstm: Blstm,
    pub emission: Linear,
    pub transitions: Option<Tensor2>,
    pub adapter: Option<AdapterParams>,
}

fn lstm_named<'a>(prefix: &str, p: &'a LstmParams, out: &mut Vec<(String, ParamGroup, &'a Tensor2)>) {
    out.push((format!("{prefix}/input_weights"), ParamGroup::Recurrent, &p.input_weights));
    out.push((format!("{prefix}/recurrent_weights"), ParamGroup::Recurrent, &p.recurrent_weights));
    out.push((format!("{prefix}/bias"), ParamGroup::Recurrent, &p.bias));
}

fn lstm_named_mut<'a>(prefix: &str, p: &'a mut LstmParams, out: &mut Vec<(String, ParamGroup, &'a mut Tensor2)>) {
    out.push((format!("{prefix}/input_weights"), ParamGroup::Recurrent, &mut p.input_weights));
    out.push((format!("{prefix}/recurrent_weights"), ParamGroup::Recurrent, &mut p.recurrent_weights));
    out.push((format!("{prefix}/bias"), ParamGroup::Recurrent, &mut p.bias));
}

impl TaggerParams {
    pub fn zeros_like(&self) -> Self {
        TaggerParams {
            word_embeddings: self.word_embeddings.zeros_like(),
            char_embeddings: self.char_embeddings.zeros_like(),
            char_blstm: self.char_blstm.zeros_like(),
            word_blstm: self.word_blstm.zeros_like(),
            emission: self.emission.zeros_like(),
            transitions: self.transitions.as_ref().map(Tensor2::zeros_like),
            adapter: self.adapter.as_ref().map(AdapterParams::zeros_like),
        }
    }

    /// Tensors with stable names and their groups, in a fixed order.
    pub fn named(&self) -> Vec<(String, ParamGroup, &Tensor2)> {
        let mut v = vec![
            ("embeddings/word".into(), ParamGroup::Embeddings, &self.word_embeddings),
            ("embeddings/char".into(), ParamGroup::Embeddings, &self.char_embeddings),
        ];
        lstm_named("char_blstm/fwd", &self.char_blstm.forward, &mut v);
        lstm_named("char_blstm/bwd", &self.char_blstm.backward, &mut v);
        lstm_named("word_blstm/fwd", &self.word_blstm.forward, &mut v);
        lstm_named("word_blstm/bwd", &self.word_blstm.backward, &mut v);
        v.push(("output/weight".into(), ParamGroup::Output, &self.emission.weight));
        v.push(("output/bias".into(), ParamGroup::Output, &self.emission.bias));
        if let Some(t) = &self.transitions {
            v.push(("output/transitions".into(), ParamGroup::Output, t));
        }
        if let Some(a) = &self.adapter {
            for (name, t) in a.named() {
                v.push((format!("adapter/{name}"), ParamGroup::Adapter, t));
            }
        }
        v
    }

    pub fn named_mut(&mut self) -> Vec<(String, ParamGroup, &mut Tensor2)> {
        let mut v = vec![
            ("embeddings/word".into(), ParamGroup::Embeddings, &mut self.word_embeddings),
            ("embeddings/char".into(), ParamGroup::Embeddings, &mut self.char_embeddings),
        ];
        lstm_named_mut("char_blstm/fwd", &mut self.char_blstm.forward, &mut v);
        lstm_named_mut("char_blstm/bwd", &mut self.char_blstm.backward, &mut v);
        lstm_named_mut("word_blstm/fwd", &mut self.word_blstm.forward, &mut v);
        lstm_named_mut("word_blstm/bwd", &mut self.word_blstm.backward, &mut v);
        v.push(("output/weight".into(), ParamGroup::Output, &mut self.emission.weight));
        v.push(("output/bias".into(), ParamGroup::Output, &mut self.emission.bias));
        if let Some(t) = &mut self.transitions {
            v.push(("output/transitions".into(), ParamGroup::Output, t));
        }
        if let Some(a) = &mut self.adapter {
            for (name, t) in a.named_mut() {
                v.push((format!("adapter/{name}"), ParamGroup::Adapter, t));
            }
        }
        v
    }

    pub fn group_size(&self, group: ParamGroup) -> usize {
        self.named().iter().filter(|(_, g, _)| *g == group).map(|(_, _, t)| t.len()).sum()
    }

    pub fn zero_group(&mut self, group: ParamGroup) {
        for (_, g, t) in self.named_mut() {
            if g == group {
                t.fill(0.0);
            }
        }
    }

    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.round_to_f32();
        }
    }
}

impl Parameters for TaggerParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        self.named().into_iter().map(|(_, _, t)| t).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        self.named_mut().into_iter().map(|(_, _, t)| t).collect()
    }
}
