//! Central finite-difference gradient checking.
//!
//! The step for coordinate `i` is `h = 1e-5 · max(1, |p_i|)`. Relative errors
//! use the denominator `max(|analytic|, |numeric|, 1e-5)`, so coordinates
//! whose true gradient is zero (for example a dense bias feeding a batch
//! normalization) are judged on absolute error instead of amplified roundoff.
//!
//! A ReLU kink closer than `h` to the probe point spoils a central difference,
//! so [`gradient_check`] probes disagreeing coordinates again with `h / 10`
//! and keeps the closer estimate. A wrong analytic gradient fails both.

use serde::Serialize;

pub const RELATIVE_STEP: f64 = 1e-5;
pub const ERROR_FLOOR: f64 = 1e-5;

fn partial<F>(probe: &mut [f64], i: usize, step: f64, f: &mut F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let p = probe[i];
    let h = step * p.abs().max(1.0);
    probe[i] = p + h;
    let plus = f(probe);
    probe[i] = p - h;
    let minus = f(probe);
    probe[i] = p;
    (plus - minus) / (2.0 * h)
}

/// Numerical gradient of `f` at `params`.
pub fn central_difference<F>(params: &[f64], mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|i| partial(&mut probe, i, RELATIVE_STEP, &mut f))
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ERROR_FLOOR)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Outcome of comparing one analytic gradient against central differences.
#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub label: String,
    pub checked: usize,
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub tolerance: f64,
    /// Coordinates that needed the smaller step.
    pub reprobed: usize,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Compares `analytic` with the central difference of `f` around `params`.
pub fn gradient_check<F>(
    label: impl Into<String>,
    params: &[f64],
    analytic: &[f64],
    f: F,
    tolerance: f64,
) -> GradientReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    let mut f = f;
    let mut probe = params.to_vec();
    let mut reprobed = 0;
    let mut numeric = Vec::with_capacity(params.len());
    let mut errors = Vec::with_capacity(params.len());
    for (i, &a) in analytic.iter().enumerate() {
        let mut n = partial(&mut probe, i, RELATIVE_STEP, &mut f);
        let mut e = relative_error(a, n);
        if e >= tolerance {
            reprobed += 1;
            let fine = partial(&mut probe, i, RELATIVE_STEP / 10.0, &mut f);
            let e_fine = relative_error(a, fine);
            if e_fine < e {
                (n, e) = (fine, e_fine);
            }
        }
        numeric.push(n);
        errors.push(e);
    }
    let (worst_index, max_err) =
        errors
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
    GradientReport {
        label: label.into(),
        checked: params.len(),
        max_relative_error: max_err,
        worst_index,
        analytic_at_worst: analytic.get(worst_index).copied().unwrap_or(0.0),
        numeric_at_worst: numeric.get(worst_index).copied().unwrap_or(0.0),
        tolerance,
        reprobed,
    }
}
