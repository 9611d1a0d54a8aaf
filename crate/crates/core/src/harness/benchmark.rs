use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{aggregate_and_compare, ComparisonReport};
use super::simulation::{run_seed, run_simulation, LearningCurve, ProtocolConfig};
use crate::dataset::{make_splits, Dataset, SplitPlan};
use crate::error::Result;
use crate::strategies::{StrategyConfig, StrategyKind};

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub plan: SplitPlan,
    pub strategies: Vec<StrategyConfig>,
    pub curves: BTreeMap<StrategyKind, Vec<LearningCurve>>,
}

impl BenchmarkResult {
    pub fn report(&self, alpha: f64) -> Result<ComparisonReport> {
        aggregate_and_compare(&self.curves, alpha)
    }
}

/// One config per kind, random always present, sorted by kind.
pub fn normalize_strategies(strategies: &[StrategyConfig]) -> Vec<StrategyConfig> {
    let mut by_kind = BTreeMap::new();
    by_kind.insert(StrategyKind::Random, StrategyConfig::random());
    for s in strategies {
        by_kind.insert(s.kind, *s);
    }
    by_kind.into_values().collect()
}

/// Runs every strategy on every (repeat, fold) of a stratified repeated
/// k-fold plan. Runs execute in parallel; results do not depend on thread
/// count or scheduling.
pub fn run_benchmark(
    dataset: &Dataset,
    strategies: &[StrategyConfig],
    protocol: &ProtocolConfig,
) -> Result<BenchmarkResult> {
    protocol.validate()?;
    let strategies = normalize_strategies(strategies);
    for s in &strategies {
        s.validate()?;
    }
    let plan = make_splits(dataset, protocol.repeats, protocol.k, protocol.seed)?;
    let jobs: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..plan.assignments.len()).map(move |a| (s, a)))
        .collect();
    let results: Vec<LearningCurve> = jobs
        .par_iter()
        .map(|&(s, a)| {
            let split = &plan.assignments[a];
            let seed = run_seed(protocol.seed, split.repeat, split.fold);
            run_simulation(dataset, split, &strategies[s], protocol, seed)
        })
        .collect::<Result<_>>()?;

    let mut curves: BTreeMap<StrategyKind, Vec<LearningCurve>> = BTreeMap::new();
    for c in results {
        curves.entry(c.strategy).or_default().push(c);
    }
    Ok(BenchmarkResult {
        plan,
        strategies,
        curves,
    })
}
