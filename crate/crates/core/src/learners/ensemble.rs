use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearModel};
use crate::error::{AscfError, Result};
use crate::seed;

/// `B` regressors, each fit on a with-replacement resample of the acquired rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub members: Vec<LinearModel>,
    pub member_seeds: Vec<u64>,
    /// Set when the input had fewer than two distinct rows; every member is
    /// then identical and imputation variance is zero everywhere.
    pub degenerate: bool,
}

impl BootstrapEnsemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// One prediction per member, in member order.
    pub fn predict_all(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.predict(z)).collect()
    }
}

/// Indices of a size-`n` with-replacement resample drawn from `seed`.
pub fn resample_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn fit_bootstrap_ensemble<Z, X>(
    rows: &[(Z, X)],
    b: usize,
    seed: u64,
) -> Result<BootstrapEnsemble>
where
    Z: AsRef<[f64]>,
    X: AsRef<[f64]>,
{
    if rows.len() < 2 {
        return Err(AscfError::Precondition(format!(
            "bootstrap ensemble needs at least 2 acquired rows, got {}",
            rows.len()
        )));
    }
    if b < 2 {
        return Err(AscfError::Precondition(format!(
            "ensemble size must be >= 2, got {b}"
        )));
    }
    let first = (rows[0].0.as_ref(), rows[0].1.as_ref());
    let degenerate = rows
        .iter()
        .all(|(z, x)| z.as_ref() == first.0 && x.as_ref() == first.1);

    let member_seeds: Vec<u64> = (0..b as u64).map(|i| seed::derive(seed, i)).collect();
    let members = member_seeds
        .iter()
        .map(|&s| {
            let sample: Vec<(&[f64], &[f64])> = resample_indices(rows.len(), s)
                .into_iter()
                .map(|i| (rows[i].0.as_ref(), rows[i].1.as_ref()))
                .collect();
            fit_linear(&sample)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapEnsemble {
        members,
        member_seeds,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn rows(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                (vec![t, (t * 0.7).sin()], vec![2.0 * t + 1.0, t * t, -t])
            })
            .collect()
    }

    #[test]
    fn identical_rows_give_identical_members() {
        let r = vec![(vec![1.0, 2.0], vec![3.0]); 5];
        let ens = fit_bootstrap_ensemble(&r, 10, 9).unwrap();
        assert!(ens.degenerate);
        assert!(ens.members.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let r = rows(12);
        let a = fit_bootstrap_ensemble(&r, 10, 77).unwrap();
        let b = fit_bootstrap_ensemble(&r, 10, 77).unwrap();
        assert_eq!(a, b);
        for (ma, mb) in a.members.iter().zip(&b.members) {
            for (wa, wb) in ma.weights.iter().flatten().zip(mb.weights.iter().flatten()) {
                assert_eq!(wa.to_bits(), wb.to_bits());
            }
        }
        assert_ne!(a, fit_bootstrap_ensemble(&r, 10, 78).unwrap());
    }

    #[test]
    fn preconditions() {
        assert!(fit_bootstrap_ensemble(&rows(1), 10, 0).is_err());
        assert!(fit_bootstrap_ensemble(&rows(5), 1, 0).is_err());
    }

    #[test]
    fn resample_inclusion_fraction() {
        // P(row included) = 1 - (1 - 1/n)^n for a size-n bootstrap
        let n = 20;
        let expected = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        let trials = 4000;
        let mut total = 0.0;
        for s in 0..trials {
            let idx = resample_indices(n, seed::derive(123, s));
            assert_eq!(idx.len(), n);
            total += idx.iter().collect::<HashSet<_>>().len() as f64 / n as f64;
        }
        let mean = total / trials as f64;
        assert!((mean - expected).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn ten_members_trained_on_twenty_rows() {
        let ens = fit_bootstrap_ensemble(&rows(20), 10, 1).unwrap();
        assert_eq!(ens.len(), 10);
        for s in &ens.member_seeds {
            assert_eq!(resample_indices(20, *s).len(), 20);
        }
        assert!(!ens.degenerate);
    }
}
