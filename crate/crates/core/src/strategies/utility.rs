use serde::{Deserialize, Serialize};

use crate::error::{AscfError, Result};
use crate::learners::BootstrapEnsemble;

/// Denominator of the misclassification utility below which the analytic
/// limit is returned instead.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Floor applied to per-dimension scales in standardized variance mode.
pub const SCALE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceEstimator {
    /// Divide by `B`.
    #[default]
    Population,
    /// Divide by `B - 1`.
    Sample,
}

fn variance(values: impl Iterator<Item = f64> + Clone, estimator: VarianceEstimator) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    match estimator {
        VarianceEstimator::Population => ss / n as f64,
        VarianceEstimator::Sample if n > 1 => ss / (n - 1) as f64,
        VarianceEstimator::Sample => 0.0,
    }
}

/// Mean over output dimensions of the across-member variance of
/// `predictions` (`B` rows of length `D`).
///
/// With `scale`, each dimension's variance is divided by `max(scale_d, 1e-12)`
/// before averaging.
pub fn imputation_variance(
    predictions: &[Vec<f64>],
    estimator: VarianceEstimator,
    scale: Option<&[f64]>,
) -> f64 {
    let d = predictions.first().map_or(0, Vec::len);
    if d == 0 {
        return 0.0;
    }
    let total: f64 = (0..d)
        .map(|j| {
            let v = variance(predictions.iter().map(|p| p[j]), estimator);
            match scale {
                Some(s) => v / s[j].max(SCALE_FLOOR),
                None => v,
            }
        })
        .sum();
    total / d as f64
}

/// Unsupervised utility of acquiring an instance with selection vector `z`:
/// the average population variance of the ensemble's imputations.
pub fn u_ascf_utility(ensemble: &BootstrapEnsemble, z: &[f64]) -> f64 {
    imputation_variance(
        &ensemble.predict_all(z),
        VarianceEstimator::Population,
        None,
    )
}

/// Per-dimension sample variance of acquired `x` rows, used as the scale in
/// standardized variance mode.
pub fn acquired_variances<X: AsRef<[f64]>>(rows: &[X]) -> Vec<f64> {
    let d = rows.first().map_or(0, |r| r.as_ref().len());
    (0..d)
        .map(|j| {
            variance(
                rows.iter().map(|r| r.as_ref()[j]),
                VarianceEstimator::Sample,
            )
        })
        .collect()
}

/// Asymmetry parameter `0.5 + 1 / (2 n)` for `n` acquired instances.
pub fn asymmetry_b(n_acquired: usize) -> Result<f64> {
    if n_acquired == 0 {
        return Err(AscfError::Precondition(
            "asymmetry parameter needs at least one acquired instance".into(),
        ));
    }
    Ok(0.5 + 1.0 / (2.0 * n_acquired as f64))
}

/// Supervised utility `p (1 - p) / ((1 - 2b) p + b^2)` for misclassification
/// probability `p` and asymmetry `b`.
pub fn s_ascf_utility(p: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AscfError::Domain(format!(
            "misclassification probability {p} outside [0, 1]"
        )));
    }
    if !(0.5..=1.0).contains(&b) {
        return Err(AscfError::Domain(format!(
            "asymmetry parameter {b} outside [0.5, 1]"
        )));
    }
    let denom = (1.0 - 2.0 * b) * p + b * b;
    if denom < DENOMINATOR_FLOOR {
        // only reachable at b = 1, p -> 1 where the ratio reduces to p
        return Ok(p);
    }
    Ok(p * (1.0 - p) / denom)
}
