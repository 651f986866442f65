//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

/// Denominator floor: coordinates whose gradients are both below this
/// magnitude are compared in absolute terms, since central differences at
/// `h = 1e-5` carry roughly `1e-11 * |f|` of rounding noise.
pub const DENOMINATOR_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Worst `|a - n| / (|a| + |n|)` over the checked coordinates.
    pub max_relative_error: f64,
    /// Worst `|a - n| / max(|a|, |n|)`; at most twice the symmetric figure.
    pub max_relative_error_strict: f64,
    pub worst_coordinate: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error_strict <= tolerance
    }
}

/// Symmetric relative error between an analytic and a numeric derivative.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    libm::fabs(analytic - numeric) / (libm::fabs(analytic) + libm::fabs(numeric)).max(DENOMINATOR_FLOOR)
}

fn strict_relative_error(analytic: f64, numeric: f64) -> f64 {
    libm::fabs(analytic - numeric) / libm::fabs(analytic).max(libm::fabs(numeric)).max(DENOMINATOR_FLOOR)
}

/// Compares `analytic` against `(f(θ+h) - f(θ-h)) / 2h` on every coordinate,
/// or only on `coords` when given. `params` is restored before returning.
pub fn grad_check<F>(
    params: &mut [f64],
    analytic: &[f64],
    mut f: F,
    step: f64,
    coords: Option<&[usize]>,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if params.len() != analytic.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            found: analytic.len(),
        });
    }
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_relative_error_strict: 0.0,
        worst_coordinate: 0,
        checked: 0,
    };
    let all: alloc::vec::Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    for &i in coords {
        let original = params[i];
        params[i] = original + step;
        let plus = f(params);
        params[i] = original - step;
        let minus = f(params);
        params[i] = original;
        if !plus.is_finite() || !minus.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFiniteValue(i));
        }
        let numeric = (plus - minus) / (2.0 * step);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_coordinate = i;
        }
        report.max_relative_error_strict = report
            .max_relative_error_strict
            .max(strict_relative_error(analytic[i], numeric));
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let mut theta = [3.0];
        let r = grad_check(&mut theta, &[6.0], |t| t[0] * t[0], 1e-5, None).unwrap();
        assert!(r.max_relative_error < 1e-9);
        assert_eq!(theta, [3.0]);
    }

    #[test]
    fn doubled_gradient_reports_one_third() {
        let mut theta = [1.5, -2.0];
        let f = |t: &[f64]| t[0] * t[0] * t[0] + 4.0 * t[1] * t[1];
        let true_grad = [3.0 * 1.5 * 1.5, 8.0 * -2.0];
        let corrupted = [2.0 * true_grad[0], 2.0 * true_grad[1]];
        let r = grad_check(&mut theta, &corrupted, f, 1e-5, None).unwrap();
        assert!((r.max_relative_error - 1.0 / 3.0).abs() < 1e-6, "{r:?}");
        assert!((r.max_relative_error_strict - 0.5).abs() < 1e-6);
    }

    #[test]
    fn subset_and_non_finite() {
        let mut theta = [1.0, 2.0, 3.0];
        let r = grad_check(&mut theta, &[2.0, 4.0, 6.0], |t| t.iter().map(|x| x * x).sum(), 1e-5, Some(&[2]))
            .unwrap();
        assert_eq!(r.checked, 1);
        let e = grad_check(&mut theta, &[0.0; 3], |_| f64::NAN, 1e-5, None);
        assert!(matches!(e, Err(Error::NonFiniteValue(0))));
    }
}
