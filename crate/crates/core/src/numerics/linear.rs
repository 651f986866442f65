use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::{Parameters, Tensor2};
use crate::error::{Error, Result};

/// `y = W x + b`.
pub fn linear_forward(weight: &Tensor2, bias: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if weight.cols() != x.len() || bias.len() != weight.rows() {
        return Err(Error::ShapeMismatch {
            context: "linear layer",
            expected: (weight.rows(), weight.cols()),
            found: (bias.len(), x.len()),
        });
    }
    let mut y = bias.to_vec();
    weight.matvec_acc(x, &mut y);
    Ok(y)
}

/// Fully-connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor2,
    /// `out x 1`
    pub bias: Tensor2,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Linear {
            weight: Tensor2::zeros(outputs, inputs),
            bias: Tensor2::zeros(outputs, 1),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Linear {
            weight: Tensor2::glorot(outputs, inputs, rng),
            bias: Tensor2::zeros(outputs, 1),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        linear_forward(&self.weight, self.bias.as_slice(), x)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        grad.weight.outer_acc(dy, x);
        for (b, d) in grad.bias.as_mut_slice().iter_mut().zip(dy) {
            *b += d;
        }
        let mut dx = vec![0.0; self.inputs()];
        self.weight.matvec_t_acc(dy, &mut dx);
        dx
    }

    pub fn zeros_like(&self) -> Self {
        Linear::zeros(self.inputs(), self.outputs())
    }
}

impl Parameters for Linear {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.weight, &mut self.bias]
    }
}
