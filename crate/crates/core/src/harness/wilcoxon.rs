//! One-sided Wilcoxon signed-rank test.
//!
//! Zero differences are dropped, tied magnitudes share their average rank.
//! Up to [`EXACT_MAX_N`] non-zero differences the null distribution of the
//! positive rank sum is computed exactly (all `2^n` sign assignments, counted
//! by dynamic programming over doubled ranks so half-ranks stay integral).
//! Larger samples use the normal approximation with tie and continuity
//! corrections.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{AscfError, Result};

pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Differences tend to be positive.
    Greater,
    /// Differences tend to be negative.
    Less,
}

/// Doubled average ranks of `|d|` for the non-zero entries of `diffs`, with a
/// flag per entry telling whether it was positive.
pub fn doubled_signed_ranks(diffs: &[f64]) -> Vec<(u64, bool)> {
    let mut nz: Vec<(f64, bool)> = diffs
        .iter()
        .filter(|d| **d != 0.0)
        .map(|&d| (d.abs(), d > 0.0))
        .collect();
    nz.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].0 == nz[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, doubled
        let doubled = (i + 1 + j + 1) as u64;
        out.extend(nz[i..=j].iter().map(|&(_, pos)| (doubled, pos)));
        i = j + 1;
    }
    out
}

/// One-sided p-value for the signed differences `diffs`.
pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<f64> {
    if diffs.is_empty() {
        return Err(AscfError::Shape(
            "wilcoxon_signed_rank needs at least one difference".into(),
        ));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(AscfError::Domain("non-finite difference".into()));
    }
    let ranks = doubled_signed_ranks(diffs);
    let n = ranks.len();
    if n == 0 {
        return Ok(1.0);
    }
    let w_plus: u64 = ranks.iter().filter(|r| r.1).map(|r| r.0).sum();
    if n <= EXACT_MAX_N {
        Ok(exact_tail(&ranks, w_plus, alternative))
    } else {
        Ok(normal_tail(&ranks, w_plus, alternative))
    }
}

fn exact_tail(ranks: &[(u64, bool)], w_plus: u64, alternative: Alternative) -> f64 {
    let total: u64 = ranks.iter().map(|r| r.0).sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &(r, _) in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = w_plus as usize;
    let tail: f64 = match alternative {
        Alternative::Greater => counts[w..].iter().sum(),
        Alternative::Less => counts[..=w].iter().sum(),
    };
    (tail / all).min(1.0)
}

fn normal_tail(ranks: &[(u64, bool)], w_plus: u64, alternative: Alternative) -> f64 {
    let n = ranks.len() as f64;
    let w = w_plus as f64 / 2.0;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1].0 == ranks[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    match alternative {
        Alternative::Greater => std_normal.sf((w - mean - 0.5) / sd),
        Alternative::Less => std_normal.cdf((w - mean + 0.5) / sd),
    }
}
