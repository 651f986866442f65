use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `log sum exp(x)` with max subtraction. `-inf` for an empty slice.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(x.iter().map(|v| libm::exp(v - m)).sum::<f64>())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|v| libm::exp(v - lse)).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy of `softmax(logits)` against `gold` and its gradient with
/// respect to the logits, `softmax - onehot(gold)`.
pub fn softmax_xent(logits: &[f64], gold: usize) -> Result<(f64, Vec<f64>)> {
    if gold >= logits.len() {
        return Err(Error::IndexOutOfRange {
            index: gold,
            len: logits.len(),
        });
    }
    let lse = log_sum_exp(logits);
    let loss = lse - logits[gold];
    let mut grad: Vec<f64> = logits.iter().map(|v| libm::exp(v - lse)).collect();
    grad[gold] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let (loss, _) = softmax_xent(&[0.3; 5], 2).unwrap();
        assert!((loss - libm::log(5.0)).abs() < 1e-12);
    }

    #[test]
    fn large_logits_are_stable() {
        let (loss, grad) = softmax_xent(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12 && loss.is_finite());
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gold_out_of_range() {
        assert!(matches!(softmax_xent(&[0.0, 1.0], 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0]), 0);
    }

    proptest! {
        #[test]
        fn simplex_properties(logits in prop::collection::vec(-50.0f64..50.0, 1..8), g in 0usize..8) {
            let gold = g % logits.len();
            let (_, grad) = softmax_xent(&logits, gold).unwrap();
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
            prop_assert!((softmax(&logits).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = vec![0.2, -1.3, 0.7, 2.0];
        let (_, grad) = softmax_xent(&logits, 1).unwrap();
        let mut theta = logits.clone();
        let r = crate::numerics::grad_check(&mut theta, &grad, |t| softmax_xent(t, 1).unwrap().0, 1e-5, None)
            .unwrap();
        assert!(r.passes(1e-6), "{r:?}");
    }
}
