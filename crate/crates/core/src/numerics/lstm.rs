//! LSTM and bidirectional LSTM with backpropagation through time.
//!
//! Gate layout in the stacked `4H` dimension is input, forget, output,
//! candidate. No peepholes. The forget-gate bias starts at 1.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::{dot, Parameters, Tensor2};
use crate::error::{Error, Result};

pub const FORGET_BIAS_INIT: f64 = 1.0;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H x I`
    pub input_weights: Tensor2,
    /// `4H x H`
    pub recurrent_weights: Tensor2,
    /// `4H x 1`
    pub bias: Tensor2,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmParams {
            input_weights: Tensor2::zeros(4 * hidden_size, input_size),
            recurrent_weights: Tensor2::zeros(4 * hidden_size, hidden_size),
            bias: Tensor2::zeros(4 * hidden_size, 1),
        }
    }

    /// Glorot-uniform weights computed per gate block, forget bias 1.
    pub fn new<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let h = hidden_size;
        let a_in = libm::sqrt(6.0 / (input_size + h).max(1) as f64);
        let a_rec = libm::sqrt(6.0 / (2 * h).max(1) as f64);
        let input_weights = Tensor2::from_fn(4 * h, input_size, |_, _| rng.random_range(-a_in..=a_in));
        let recurrent_weights = Tensor2::from_fn(4 * h, h, |_, _| rng.random_range(-a_rec..=a_rec));
        let mut bias = Tensor2::zeros(4 * h, 1);
        for i in h..2 * h {
            bias.as_mut_slice()[i] = FORGET_BIAS_INIT;
        }
        LstmParams {
            input_weights,
            recurrent_weights,
            bias,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.recurrent_weights.cols()
    }

    pub fn input_size(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams::zeros(self.input_size(), self.hidden_size())
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.input_weights, &self.recurrent_weights, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.input_weights, &mut self.recurrent_weights, &mut self.bias]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates, `4H`: i, f, o, g.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Activations retained by [`lstm_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Single cell application: one step of the recurrence from `state`.
pub fn lstm_cell(params: &LstmParams, x: &[f64], state: &LstmState) -> Result<LstmState> {
    let h_dim = params.hidden_size();
    if x.len() != params.input_size() {
        return Err(Error::ShapeMismatch {
            context: "lstm input",
            expected: (params.input_size(), 1),
            found: (x.len(), 1),
        });
    }
    let gate = |k: usize| {
        params.bias.as_slice()[k] + dot(params.input_weights.row(k), x) + dot(params.recurrent_weights.row(k), &state.h)
    };
    let mut next = LstmState::zeros(h_dim);
    for k in 0..h_dim {
        let i = sigmoid(gate(k));
        let f = sigmoid(gate(h_dim + k));
        let o = sigmoid(gate(2 * h_dim + k));
        let g = libm::tanh(gate(3 * h_dim + k));
        next.c[k] = f * state.c[k] + i * g;
        next.h[k] = o * libm::tanh(next.c[k]);
    }
    Ok(next)
}

/// Runs the recurrence left to right over `inputs`, starting from
/// `initial` (zeros when `None`).
pub fn lstm_forward(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    initial: Option<&LstmState>,
) -> Result<(Vec<Vec<f64>>, LstmCache)> {
    let h_dim = params.hidden_size();
    let mut state = initial.cloned().unwrap_or_else(|| LstmState::zeros(h_dim));
    if state.h.len() != h_dim || state.c.len() != h_dim {
        return Err(Error::ShapeMismatch {
            context: "lstm initial state",
            expected: (h_dim, h_dim),
            found: (state.h.len(), state.c.len()),
        });
    }
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        if x.len() != params.input_size() {
            return Err(Error::ShapeMismatch {
                context: "lstm input",
                expected: (params.input_size(), 1),
                found: (x.len(), 1),
            });
        }
        let mut z = params.bias.as_slice().to_vec();
        params.input_weights.matvec_acc(x, &mut z);
        params.recurrent_weights.matvec_acc(&state.h, &mut z);
        let mut gates = z;
        for (k, g) in gates.iter_mut().enumerate() {
            *g = if k < 3 * h_dim { sigmoid(*g) } else { libm::tanh(*g) };
        }
        let mut c = vec![0.0; h_dim];
        let mut tanh_c = vec![0.0; h_dim];
        let mut h = vec![0.0; h_dim];
        for k in 0..h_dim {
            c[k] = gates[h_dim + k] * state.c[k] + gates[k] * gates[3 * h_dim + k];
            tanh_c[k] = libm::tanh(c[k]);
            h[k] = gates[2 * h_dim + k] * tanh_c[k];
        }
        if !h.iter().chain(&c).all(|v| v.is_finite()) {
            return Err(Error::NonFiniteActivation("lstm"));
        }
        steps.push(StepCache {
            x: x.clone(),
            h_prev: core::mem::replace(&mut state.h, h.clone()),
            c_prev: core::mem::replace(&mut state.c, c),
            gates,
            tanh_c,
        });
        outputs.push(h);
    }
    Ok((outputs, LstmCache { steps }))
}

/// Backpropagation through time. `d_outputs[t]` is `dL/dh_t`; gradients are
/// accumulated into `grads` and `dL/dx_t` is returned per step.
pub fn lstm_backward(
    params: &LstmParams,
    cache: &LstmCache,
    d_outputs: &[Vec<f64>],
    grads: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let h_dim = params.hidden_size();
    let n = cache.steps.len();
    debug_assert_eq!(d_outputs.len(), n);
    let mut dx_all = vec![Vec::new(); n];
    let mut dh_next = vec![0.0; h_dim];
    let mut dc_next = vec![0.0; h_dim];
    let mut dz = vec![0.0; 4 * h_dim];
    for t in (0..n).rev() {
        let s = &cache.steps[t];
        let g = &s.gates;
        for k in 0..h_dim {
            let (i, f, o, cand) = (g[k], g[h_dim + k], g[2 * h_dim + k], g[3 * h_dim + k]);
            let dh = d_outputs[t][k] + dh_next[k];
            let d_o = dh * s.tanh_c[k];
            let dc = dh * o * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
            dz[k] = dc * cand * i * (1.0 - i);
            dz[h_dim + k] = dc * s.c_prev[k] * f * (1.0 - f);
            dz[2 * h_dim + k] = d_o * o * (1.0 - o);
            dz[3 * h_dim + k] = dc * i * (1.0 - cand * cand);
            dc_next[k] = dc * f;
        }
        grads.input_weights.outer_acc(&dz, &s.x);
        grads.recurrent_weights.outer_acc(&dz, &s.h_prev);
        for (b, d) in grads.bias.as_mut_slice().iter_mut().zip(&dz) {
            *b += d;
        }
        let mut dx = vec![0.0; params.input_size()];
        params.input_weights.matvec_t_acc(&dz, &mut dx);
        dx_all[t] = dx;
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        params.recurrent_weights.matvec_t_acc(&dz, &mut dh_next);
    }
    dx_all
}

/// Forward and backward LSTMs over the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Blstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

#[derive(Debug, Clone)]
pub struct BlstmCache {
    forward: LstmCache,
    backward: LstmCache,
}

impl Blstm {
    pub fn new<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let forward = LstmParams::new(input_size, hidden_size, rng);
        let backward = LstmParams::new(input_size, hidden_size, rng);
        Blstm { forward, backward }
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Blstm {
            forward: LstmParams::zeros(input_size, hidden_size),
            backward: LstmParams::zeros(input_size, hidden_size),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.forward.hidden_size()
    }

    pub fn input_size(&self) -> usize {
        self.forward.input_size()
    }

    pub fn output_size(&self) -> usize {
        2 * self.hidden_size()
    }

    pub fn zeros_like(&self) -> Self {
        Blstm::zeros(self.input_size(), self.hidden_size())
    }

    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, BlstmCache)> {
        blstm_forward(&self.forward, &self.backward, inputs)
    }

    pub fn backward(&self, cache: &BlstmCache, d_outputs: &[Vec<f64>], grads: &mut Blstm) -> Vec<Vec<f64>> {
        blstm_backward(&self.forward, &self.backward, cache, d_outputs, grads)
    }
}

impl Parameters for Blstm {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut v = self.forward.tensors();
        v.extend(self.backward.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = self.forward.tensors_mut();
        v.extend(self.backward.tensors_mut());
        v
    }
}

/// `output_t = [fwd_h_t ; bwd_h_t]`, where the backward LSTM reads the
/// inputs in reverse order.
pub fn blstm_forward(
    fwd: &LstmParams,
    bwd: &LstmParams,
    inputs: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, BlstmCache)> {
    if fwd.input_size() != bwd.input_size() || fwd.hidden_size() != bwd.hidden_size() {
        return Err(Error::ShapeMismatch {
            context: "blstm directions",
            expected: (fwd.input_size(), fwd.hidden_size()),
            found: (bwd.input_size(), bwd.hidden_size()),
        });
    }
    let (f_out, f_cache) = lstm_forward(fwd, inputs, None)?;
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let (b_out, b_cache) = lstm_forward(bwd, &reversed, None)?;
    let n = inputs.len();
    let outputs = (0..n)
        .map(|t| {
            let mut o = f_out[t].clone();
            o.extend_from_slice(&b_out[n - 1 - t]);
            o
        })
        .collect();
    Ok((
        outputs,
        BlstmCache {
            forward: f_cache,
            backward: b_cache,
        },
    ))
}

pub fn blstm_backward(
    fwd: &LstmParams,
    bwd: &LstmParams,
    cache: &BlstmCache,
    d_outputs: &[Vec<f64>],
    grads: &mut Blstm,
) -> Vec<Vec<f64>> {
    let h = fwd.hidden_size();
    let n = d_outputs.len();
    let d_f: Vec<Vec<f64>> = d_outputs.iter().map(|d| d[..h].to_vec()).collect();
    let d_b: Vec<Vec<f64>> = d_outputs.iter().rev().map(|d| d[h..].to_vec()).collect();
    let mut dx = lstm_backward(fwd, &cache.forward, &d_f, &mut grads.forward);
    let dx_b = lstm_backward(bwd, &cache.backward, &d_b, &mut grads.backward);
    for t in 0..n {
        for (a, b) in dx[t].iter_mut().zip(&dx_b[n - 1 - t]) {
            *a += b;
        }
    }
    dx
}
