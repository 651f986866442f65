//! Bidirectional recurrent bridge from the frozen source model's emissions
//! to the target output space.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Blstm, BlstmCache, Linear, Parameters, Tensor2};

/// How the two direction outputs are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterCombine {
    /// Each direction is mapped to the target width and the two are added.
    #[default]
    Sum,
    /// Hidden states are concatenated and projected once.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Recurrent width; the target label count when `None`.
    pub hidden: Option<usize>,
    pub combine: AdapterCombine,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdapterHeads {
    Summed { forward: Linear, backward: Linear },
    Concatenated { projection: Linear },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub blstm: Blstm,
    pub heads: AdapterHeads,
}

impl AdapterParams {
    /// Standard recurrent initialization; output maps start at zero so the
    /// adapter contributes nothing before training.
    pub fn new<R: Rng>(
        source_labels: usize,
        target_labels: usize,
        hidden: usize,
        combine: AdapterCombine,
        rng: &mut R,
    ) -> Self {
        let blstm = Blstm::new(source_labels, hidden, rng);
        AdapterParams {
            heads: Self::zero_heads(hidden, target_labels, combine),
            blstm,
        }
    }

    fn zero_heads(hidden: usize, target_labels: usize, combine: AdapterCombine) -> AdapterHeads {
        match combine {
            AdapterCombine::Sum => AdapterHeads::Summed {
                forward: Linear::zeros(hidden, target_labels),
                backward: Linear::zeros(hidden, target_labels),
            },
            AdapterCombine::Concat => AdapterHeads::Concatenated {
                projection: Linear::zeros(2 * hidden, target_labels),
            },
        }
    }

    pub fn zeros(source_labels: usize, target_labels: usize, hidden: usize, combine: AdapterCombine) -> Self {
        AdapterParams {
            blstm: Blstm::zeros(source_labels, hidden),
            heads: Self::zero_heads(hidden, target_labels, combine),
        }
    }

    pub fn combine(&self) -> AdapterCombine {
        match self.heads {
            AdapterHeads::Summed { .. } => AdapterCombine::Sum,
            AdapterHeads::Concatenated { .. } => AdapterCombine::Concat,
        }
    }

    pub fn source_labels(&self) -> usize {
        self.blstm.input_size()
    }

    pub fn hidden(&self) -> usize {
        self.blstm.hidden_size()
    }

    pub fn target_labels(&self) -> usize {
        match &self.heads {
            AdapterHeads::Summed { forward, .. } => forward.outputs(),
            AdapterHeads::Concatenated { projection } => projection.outputs(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        AdapterParams::zeros(self.source_labels(), self.target_labels(), self.hidden(), self.combine())
    }

    /// Named tensors relative to the adapter.
    pub fn named(&self) -> Vec<(&'static str, &Tensor2)> {
        let b = &self.blstm;
        let mut v = vec![
            ("fwd/input_weights", &b.forward.input_weights),
            ("fwd/recurrent_weights", &b.forward.recurrent_weights),
            ("fwd/bias", &b.forward.bias),
            ("bwd/input_weights", &b.backward.input_weights),
            ("bwd/recurrent_weights", &b.backward.recurrent_weights),
            ("bwd/bias", &b.backward.bias),
        ];
        match &self.heads {
            AdapterHeads::Summed { forward, backward } => {
                v.push(("head_fwd/weight", &forward.weight));
                v.push(("head_fwd/bias", &forward.bias));
                v.push(("head_bwd/weight", &backward.weight));
                v.push(("head_bwd/bias", &backward.bias));
            }
            AdapterHeads::Concatenated { projection } => {
                v.push(("head/weight", &projection.weight));
                v.push(("head/bias", &projection.bias));
            }
        }
        v
    }

    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor2)> {
        let b = &mut self.blstm;
        let mut v = vec![
            ("fwd/input_weights", &mut b.forward.input_weights),
            ("fwd/recurrent_weights", &mut b.forward.recurrent_weights),
            ("fwd/bias", &mut b.forward.bias),
            ("bwd/input_weights", &mut b.backward.input_weights),
            ("bwd/recurrent_weights", &mut b.backward.recurrent_weights),
            ("bwd/bias", &mut b.backward.bias),
        ];
        match &mut self.heads {
            AdapterHeads::Summed { forward, backward } => {
                v.push(("head_fwd/weight", &mut forward.weight));
                v.push(("head_fwd/bias", &mut forward.bias));
                v.push(("head_bwd/weight", &mut backward.weight));
                v.push(("head_bwd/bias", &mut backward.bias));
            }
            AdapterHeads::Concatenated { projection } => {
                v.push(("head/weight", &mut projection.weight));
                v.push(("head/bias", &mut projection.bias));
            }
        }
        v
    }
}

impl Parameters for AdapterParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        self.named_mut().into_iter().map(|(_, t)| t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AdapterCache {
    blstm: BlstmCache,
    hidden: Vec<Vec<f64>>,
}

/// `a_t` for every position: a BLSTM over the source emissions whose
/// direction outputs are mapped to the target width and merged.
pub fn adapter_forward(adapter: &AdapterParams, source_emissions: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, AdapterCache)> {
    if let Some(e) = source_emissions.iter().find(|e| e.len() != adapter.source_labels()) {
        return Err(Error::ShapeMismatch {
            context: "adapter input",
            expected: (adapter.source_labels(), 1),
            found: (e.len(), 1),
        });
    }
    let (hidden, cache) = adapter.blstm.forward(source_emissions)?;
    let h = adapter.hidden();
    let out = hidden
        .iter()
        .map(|ht| match &adapter.heads {
            AdapterHeads::Summed { forward, backward } => {
                let mut a = forward.forward(&ht[..h])?;
                let b = backward.forward(&ht[h..])?;
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                Ok(a)
            }
            AdapterHeads::Concatenated { projection } => projection.forward(ht),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, AdapterCache { blstm: cache, hidden }))
}

/// Accumulates adapter gradients for `d_out = dL/da_t`. Gradients with
/// respect to the source emissions are discarded since the source model is
/// frozen.
pub fn adapter_backward(adapter: &AdapterParams, cache: &AdapterCache, d_out: &[Vec<f64>], grads: &mut AdapterParams) {
    let h = adapter.hidden();
    let d_hidden: Vec<Vec<f64>> = cache
        .hidden
        .iter()
        .zip(d_out)
        .map(|(ht, da)| match (&adapter.heads, &mut grads.heads) {
            (AdapterHeads::Summed { forward, backward }, AdapterHeads::Summed { forward: gf, backward: gb }) => {
                let mut dh = forward.backward(&ht[..h], da, gf);
                dh.extend(backward.backward(&ht[h..], da, gb));
                dh
            }
            (AdapterHeads::Concatenated { projection }, AdapterHeads::Concatenated { projection: gp }) => {
                projection.backward(ht, da, gp)
            }
            _ => unreachable!("adapter gradients built with zeros_like"),
        })
        .collect();
    adapter.blstm.backward(&cache.blstm, &d_hidden, &mut grads.blstm);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inputs(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn zero_heads_give_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for combine in [AdapterCombine::Sum, AdapterCombine::Concat] {
            let a = AdapterParams::new(5, 7, 7, combine, &mut rng);
            let x = inputs(&mut rng, 4, 5);
            let (out, _) = adapter_forward(&a, &x).unwrap();
            assert!(out.iter().all(|o| o.len() == 7 && o.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn width_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = AdapterParams::new(5, 7, 3, AdapterCombine::Sum, &mut rng);
        assert!(adapter_forward(&a, &[alloc::vec![0.0; 4]]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for combine in [AdapterCombine::Sum, AdapterCombine::Concat] {
            for seed in 0..10 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut a = AdapterParams::new(3, 4, 2, combine, &mut rng);
                // Non-zero heads so every tensor carries gradient.
                for t in a.tensors_mut() {
                    for v in t.as_mut_slice() {
                        *v += rng.random_range(-0.5..0.5);
                    }
                }
                let x = inputs(&mut rng, 3, 3);
                let probe = inputs(&mut rng, 3, 4);
                let loss = |p: &AdapterParams| -> f64 {
                    let (o, _) = adapter_forward(p, &x).unwrap();
                    o.iter().zip(&probe).map(|(a, b)| crate::numerics::dot(a, b)).sum()
                };
                let (_, cache) = adapter_forward(&a, &x).unwrap();
                let mut g = a.zeros_like();
                adapter_backward(&a, &cache, &probe, &mut g);
                let mut theta = a.flatten();
                let r = grad_check(
                    &mut theta,
                    &g.flatten(),
                    |t| {
                        let mut q = a.clone();
                        q.assign_flat(t);
                        loss(&q)
                    },
                    1e-5,
                    None,
                )
                .unwrap();
                assert!(r.passes(1e-4), "{combine:?} seed {seed}: {r:?}");
            }
        }
    }
}
