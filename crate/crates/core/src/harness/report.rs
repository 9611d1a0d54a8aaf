use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{mean, percentile_sorted};
use super::simulation::LearningCurve;
use super::wilcoxon::{wilcoxon_signed_rank, Alternative};
use crate::error::{AscfError, Result};
use crate::strategies::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Better,
    Worse,
    None,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Better => "better",
            Flag::Worse => "worse",
            Flag::None => "none",
        })
    }
}

impl std::str::FromStr for Flag {
    type Err = AscfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "better" => Ok(Flag::Better),
            "worse" => Ok(Flag::Worse),
            "none" => Ok(Flag::None),
            other => Err(AscfError::Contract(format!("unknown flag `{other}`"))),
        }
    }
}

/// Aggregate of one strategy at one step, compared with random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub strategy: StrategyKind,
    pub step: usize,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
    /// One-sided p-value for "strategy beats random".
    pub p_greater: f64,
    /// One-sided p-value for "random beats strategy".
    pub p_less: f64,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub n_runs: usize,
    pub steps: usize,
    pub rows: Vec<StepRow>,
}

impl ComparisonReport {
    pub fn rows_for(&self, strategy: StrategyKind) -> impl Iterator<Item = &StepRow> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn row(&self, strategy: StrategyKind, step: usize) -> Option<&StepRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.step == step)
    }

    pub fn strategies(&self) -> BTreeSet<StrategyKind> {
        self.rows.iter().map(|r| r.strategy).collect()
    }

    /// Keeps only steps in `lo..=hi`.
    pub fn restrict_steps(&self, lo: usize, hi: usize) -> ComparisonReport {
        ComparisonReport {
            rows: self
                .rows
                .iter()
                .filter(|r| (lo..=hi).contains(&r.step))
                .copied()
                .collect(),
            ..self.clone()
        }
    }

    /// Fraction of steps in `lo..=hi` where `strategy`'s mean F1 is at least
    /// random's.
    pub fn fraction_at_least_random(
        &self,
        strategy: StrategyKind,
        lo: usize,
        hi: usize,
    ) -> Option<f64> {
        let mut total = 0usize;
        let mut hits = 0usize;
        for r in self
            .rows_for(strategy)
            .filter(|r| (lo..=hi).contains(&r.step))
        {
            let base = self.row(StrategyKind::Random, r.step)?;
            total += 1;
            if r.mean >= base.mean {
                hits += 1;
            }
        }
        (total > 0).then(|| hits as f64 / total as f64)
    }
}

fn check_pairing(curves: &BTreeMap<StrategyKind, Vec<LearningCurve>>) -> Result<()> {
    let random = curves
        .get(&StrategyKind::Random)
        .ok_or_else(|| AscfError::Pairing("the random baseline is missing".into()))?;
    let keyed = |cs: &[LearningCurve]| -> Result<BTreeMap<(usize, usize), usize>> {
        let mut m = BTreeMap::new();
        for (i, c) in cs.iter().enumerate() {
            if m.insert(c.run_id(), i).is_some() {
                return Err(AscfError::Pairing(format!(
                    "run (repeat {}, fold {}) of {} appears twice",
                    c.repeat, c.fold, c.strategy
                )));
            }
        }
        Ok(m)
    };
    let base = keyed(random)?;
    for (kind, cs) in curves {
        let own = keyed(cs)?;
        if own.keys().ne(base.keys()) {
            return Err(AscfError::Pairing(format!(
                "{kind} does not cover the same (repeat, fold) runs as random"
            )));
        }
        for (run, &i) in &own {
            let a = &cs[i];
            let b = &random[base[run]];
            if a.strategy != *kind {
                return Err(AscfError::Pairing(format!(
                    "curve of {} filed under {kind}",
                    a.strategy
                )));
            }
            if a.acquisition_order.first() != b.acquisition_order.first() {
                return Err(AscfError::Pairing(format!(
                    "{kind} run (repeat {}, fold {}) started from a different cold start than random",
                    run.0, run.1
                )));
            }
        }
    }
    Ok(())
}

/// Per-step mean, 10th and 90th percentile of F1 for every strategy, plus
/// paired one-sided Wilcoxon tests against random at level `alpha`.
///
/// Steps run from 1 to the shortest curve length.
pub fn aggregate_and_compare(
    curves: &BTreeMap<StrategyKind, Vec<LearningCurve>>,
    alpha: f64,
) -> Result<ComparisonReport> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(AscfError::Contract(format!(
            "alpha must be in (0, 0.5], got {alpha}"
        )));
    }
    check_pairing(curves)?;
    let random = &curves[&StrategyKind::Random];
    if random.is_empty() {
        return Err(AscfError::Pairing("no runs to aggregate".into()));
    }
    let steps = curves
        .values()
        .flatten()
        .map(LearningCurve::len)
        .min()
        .unwrap_or(0);
    let mut random_sorted = random.clone();
    random_sorted.sort_by_key(LearningCurve::run_id);

    let mut rows = Vec::with_capacity(steps * curves.len());
    for (&kind, cs) in curves {
        let mut cs = cs.clone();
        cs.sort_by_key(LearningCurve::run_id);
        for step in 1..=steps {
            let values: Vec<f64> = cs.iter().map(|c| c.f1_per_step[step - 1]).collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let diffs: Vec<f64> = values
                .iter()
                .zip(&random_sorted)
                .map(|(v, r)| v - r.f1_per_step[step - 1])
                .collect();
            let p_greater = wilcoxon_signed_rank(&diffs, Alternative::Greater)?;
            let p_less = wilcoxon_signed_rank(&diffs, Alternative::Less)?;
            let flag = if p_greater <= alpha {
                Flag::Better
            } else if p_less <= alpha {
                Flag::Worse
            } else {
                Flag::None
            };
            rows.push(StepRow {
                strategy: kind,
                step,
                mean: mean(&values),
                p10: percentile_sorted(&sorted, 0.1),
                p90: percentile_sorted(&sorted, 0.9),
                p_greater,
                p_less,
                flag,
            });
        }
    }
    Ok(ComparisonReport {
        alpha,
        n_runs: random.len(),
        steps,
        rows,
    })
}
