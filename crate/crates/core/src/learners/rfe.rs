use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic, LogisticOptions};
use crate::dataset::{make_splits, Dataset, Label};
use crate::error::{AscfError, Result};
use crate::harness::f1_score;

/// Outcome of recursive feature elimination over classification features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// Classification column indices, first eliminated first; the last entry
    /// is the strongest surviving feature.
    pub ranking: Vec<usize>,
    pub optimal_count: usize,
    /// `(surviving feature count, mean CV F1)` for every evaluated size.
    pub cv_scores: Vec<(usize, f64)>,
}

impl RfeResult {
    /// Column indices of the selected `optimal_count` features, sorted.
    pub fn selected(&self) -> Vec<usize> {
        let mut cols = self.ranking[self.ranking.len() - self.optimal_count..].to_vec();
        cols.sort_unstable();
        cols
    }
}

fn cv_f1(
    dataset: &Dataset,
    columns: &[usize],
    k: usize,
    seed: u64,
    opts: LogisticOptions,
) -> Result<f64> {
    let plan = make_splits(dataset, 1, k, seed)?;
    let project = |x: &[f64]| columns.iter().map(|&c| x[c]).collect::<Vec<f64>>();
    let mut total = 0.0;
    for fold in &plan.assignments {
        let rows: Vec<(Vec<f64>, Label)> = fold
            .train
            .iter()
            .map(|&id| (project(dataset.ground_truth_x(id)), dataset.label(id)))
            .collect();
        let f = fit_logistic(&rows, opts)?;
        let truth: Vec<Label> = fold.test.iter().map(|&id| dataset.label(id)).collect();
        let pred: Vec<Label> = fold
            .test
            .iter()
            .map(|&id| f.predict(&project(dataset.ground_truth_x(id))))
            .collect();
        total += f1_score(&truth, &pred, Label::Positive)?;
    }
    Ok(total / plan.assignments.len() as f64)
}

/// Removes the classification feature with the smallest absolute
/// standardized coefficient, `step` at a time, scoring every surviving set by
/// stratified `k`-fold F1. Ties in the score go to the smaller set.
pub fn rfe_select(dataset: &Dataset, k: usize, seed: u64, step: usize) -> Result<RfeResult> {
    if step == 0 {
        return Err(AscfError::Precondition(
            "RFE step must be at least 1".into(),
        ));
    }
    let opts = LogisticOptions::default();
    let mut surviving: Vec<usize> = (0..dataset.d()).collect();
    let mut eliminated = Vec::new();
    let mut cv_scores = Vec::new();
    loop {
        cv_scores.push((surviving.len(), cv_f1(dataset, &surviving, k, seed, opts)?));
        if surviving.len() == 1 {
            break;
        }
        let rows: Vec<(Vec<f64>, Label)> = dataset
            .instances()
            .iter()
            .map(|inst| {
                let x = dataset.ground_truth_x(inst.id);
                (surviving.iter().map(|&c| x[c]).collect(), inst.y)
            })
            .collect();
        let f = fit_logistic(&rows, opts)?;
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        order.sort_by(|&a, &b| {
            f.weights[a]
                .abs()
                .total_cmp(&f.weights[b].abs())
                .then(a.cmp(&b))
        });
        let n_remove = step.min(surviving.len() - 1);
        let mut drop: Vec<usize> = order[..n_remove].to_vec();
        eliminated.extend(drop.iter().map(|&i| surviving[i]));
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for i in drop {
            surviving.remove(i);
        }
    }
    eliminated.extend(surviving);

    let best = cv_scores
        .iter()
        .fold(None::<(usize, f64)>, |best, &(n, s)| match best {
            Some((bn, bs)) if bs > s || (bs == s && bn < n) => Some((bn, bs)),
            _ => Some((n, s)),
        })
        .map(|(n, _)| n)
        .unwrap_or(1);
    Ok(RfeResult {
        ranking: eliminated,
        optimal_count: best,
        cv_scores,
    })
}
