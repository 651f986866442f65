//! Linear-chain CRF over per-position emission scores.
//!
//! Transitions live in an `(L + 2) x (L + 2)` matrix whose entry `[j, i]`
//! scores moving from label `i` to label `j`. Index `L` is the start state
//! and `L + 1` the end state.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, Tensor2};

/// Per-position emission vectors, all of width `L`.
pub type Emissions = [Vec<f64>];

pub fn start_index(labels: usize) -> usize {
    labels
}

pub fn end_index(labels: usize) -> usize {
    labels + 1
}

/// Zero-initialized transition matrix for `labels` labels.
pub fn zero_transitions(labels: usize) -> Tensor2 {
    Tensor2::zeros(labels + 2, labels + 2)
}

fn check(emissions: &Emissions, trans: &Tensor2) -> Result<usize> {
    let first = emissions.first().ok_or(Error::EmptySequence)?;
    let l = first.len();
    if trans.rows() != l + 2 || trans.cols() != l + 2 {
        return Err(Error::ShapeMismatch {
            context: "crf transitions",
            expected: (l + 2, l + 2),
            found: trans.shape(),
        });
    }
    for e in emissions {
        if e.len() != l {
            return Err(Error::ShapeMismatch {
                context: "crf emissions",
                expected: (l, 1),
                found: (e.len(), 1),
            });
        }
    }
    Ok(l)
}

fn check_labels(emissions: &Emissions, labels: &[usize], l: usize) -> Result<()> {
    if labels.len() != emissions.len() {
        return Err(Error::LengthMismatch(emissions.len(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= l) {
        return Err(Error::LabelOutOfRange { index: bad, labels: l });
    }
    Ok(())
}

/// Unnormalized score of one labeling, start and end transitions included.
pub fn crf_score(emissions: &Emissions, trans: &Tensor2, labels: &[usize]) -> Result<f64> {
    let l = check(emissions, trans)?;
    check_labels(emissions, labels, l)?;
    // Accumulation order mirrors `viterbi_decode` so the two agree bitwise.
    let mut s = emissions[0][labels[0]] + trans.get(labels[0], start_index(l));
    for t in 1..labels.len() {
        s = emissions[t][labels[t]] + (s + trans.get(labels[t], labels[t - 1]));
    }
    Ok(s + trans.get(end_index(l), labels[labels.len() - 1]))
}

fn forward_table(emissions: &Emissions, trans: &Tensor2, l: usize) -> Vec<Vec<f64>> {
    let n = emissions.len();
    let mut alpha = vec![vec![0.0; l]; n];
    for j in 0..l {
        alpha[0][j] = emissions[0][j] + trans.get(j, start_index(l));
    }
    let mut scratch = vec![0.0; l];
    for t in 1..n {
        for j in 0..l {
            for i in 0..l {
                scratch[i] = alpha[t - 1][i] + trans.get(j, i);
            }
            alpha[t][j] = emissions[t][j] + log_sum_exp(&scratch);
        }
    }
    alpha
}

fn backward_table(emissions: &Emissions, trans: &Tensor2, l: usize) -> Vec<Vec<f64>> {
    let n = emissions.len();
    let mut beta = vec![vec![0.0; l]; n];
    for i in 0..l {
        beta[n - 1][i] = trans.get(end_index(l), i);
    }
    let mut scratch = vec![0.0; l];
    for t in (0..n - 1).rev() {
        for i in 0..l {
            for j in 0..l {
                scratch[j] = trans.get(j, i) + emissions[t + 1][j] + beta[t + 1][j];
            }
            beta[t][i] = log_sum_exp(&scratch);
        }
    }
    beta
}

fn partition_from_alpha(alpha: &[Vec<f64>], trans: &Tensor2, l: usize) -> f64 {
    let last = &alpha[alpha.len() - 1];
    let finals: Vec<f64> = (0..l).map(|j| last[j] + trans.get(end_index(l), j)).collect();
    log_sum_exp(&finals)
}

/// `log sum_Y exp(score(Y))` by the forward algorithm in log space.
pub fn crf_log_partition(emissions: &Emissions, trans: &Tensor2) -> Result<f64> {
    let l = check(emissions, trans)?;
    let alpha = forward_table(emissions, trans, l);
    Ok(partition_from_alpha(&alpha, trans, l))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradients {
    pub loss: f64,
    pub d_emissions: Vec<Vec<f64>>,
    pub d_transitions: Tensor2,
}

/// Negative log-likelihood of `gold` and its gradients: marginals minus
/// observed indicators for emissions, expected minus observed transition
/// counts for the matrix.
pub fn crf_nll_and_grad(emissions: &Emissions, trans: &Tensor2, gold: &[usize]) -> Result<CrfGradients> {
    let l = check(emissions, trans)?;
    check_labels(emissions, gold, l)?;
    let n = emissions.len();
    let alpha = forward_table(emissions, trans, l);
    let beta = backward_table(emissions, trans, l);
    let log_z = partition_from_alpha(&alpha, trans, l);
    let loss = log_z - crf_score(emissions, trans, gold)?;

    let mut d_emissions = vec![vec![0.0; l]; n];
    for t in 0..n {
        for j in 0..l {
            d_emissions[t][j] = libm::exp(alpha[t][j] + beta[t][j] - log_z);
        }
        d_emissions[t][gold[t]] -= 1.0;
    }

    let (start, end) = (start_index(l), end_index(l));
    let mut d_trans = trans.zeros_like();
    for j in 0..l {
        let first = libm::exp(alpha[0][j] + beta[0][j] - log_z);
        d_trans.set(j, start, d_trans.get(j, start) + first);
        let last = libm::exp(alpha[n - 1][j] + beta[n - 1][j] - log_z);
        d_trans.set(end, j, d_trans.get(end, j) + last);
    }
    for t in 1..n {
        for j in 0..l {
            for i in 0..l {
                let p = libm::exp(alpha[t - 1][i] + trans.get(j, i) + emissions[t][j] + beta[t][j] - log_z);
                d_trans.set(j, i, d_trans.get(j, i) + p);
            }
        }
    }
    d_trans.set(gold[0], start, d_trans.get(gold[0], start) - 1.0);
    d_trans.set(end, gold[n - 1], d_trans.get(end, gold[n - 1]) - 1.0);
    for t in 1..n {
        d_trans.set(gold[t], gold[t - 1], d_trans.get(gold[t], gold[t - 1]) - 1.0);
    }

    Ok(CrfGradients {
        loss,
        d_emissions,
        d_transitions: d_trans,
    })
}

/// Highest-scoring labeling and its score. Ties go to the lowest label index
/// at every backtrack step.
pub fn viterbi_decode(emissions: &Emissions, trans: &Tensor2) -> Result<(Vec<usize>, f64)> {
    let l = check(emissions, trans)?;
    let n = emissions.len();
    let mut delta: Vec<f64> = (0..l).map(|j| emissions[0][j] + trans.get(j, start_index(l))).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    back.push(vec![0; l]);
    for t in 1..n {
        let mut next = vec![0.0; l];
        let mut ptr = vec![0; l];
        for j in 0..l {
            let mut best = 0;
            let mut best_score = delta[0] + trans.get(j, 0);
            for i in 1..l {
                let s = delta[i] + trans.get(j, i);
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            next[j] = emissions[t][j] + best_score;
            ptr[j] = best;
        }
        delta = next;
        back.push(ptr);
    }
    let mut last = 0;
    let mut best_score = delta[0] + trans.get(end_index(l), 0);
    for j in 1..l {
        let s = delta[j] + trans.get(end_index(l), j);
        if s > best_score {
            last = j;
            best_score = s;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, best_score))
}
