use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::metrics::f1_score;
use crate::dataset::{AcquisitionState, Dataset, FoldAssignment, InstanceId, Label};
use crate::error::{AscfError, Result};
use crate::learners::{fit_logistic, LogisticOptions, ProbClassifier};
use crate::seed;
use crate::strategies::{select_next, StrategyConfig, StrategyKind};

/// How the acquired pool is seeded before any strategy runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColdStart {
    /// One uniformly drawn instance per class.
    #[default]
    StratifiedPair,
    /// At least `n` uniform draws, continuing until both classes are present.
    RandomN(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub repeats: usize,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cold_start: ColdStart,
    /// Evaluate every `eval_every` acquisitions; skipped steps carry the last
    /// evaluated F1 forward.
    pub eval_every: usize,
    /// Cap on the number of acquisitions per run, cold start included.
    pub max_steps: Option<usize>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            repeats: 10,
            k: 5,
            alpha: 0.1,
            seed: 0,
            cold_start: ColdStart::default(),
            eval_every: 1,
            max_steps: None,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(AscfError::Contract(format!(
                "alpha must be in (0, 0.5], got {}",
                self.alpha
            )));
        }
        if self.eval_every == 0 {
            return Err(AscfError::Contract("eval_every must be at least 1".into()));
        }
        if let ColdStart::RandomN(0) = self.cold_start {
            return Err(AscfError::Contract("random cold start needs n >= 1".into()));
        }
        Ok(())
    }
}

/// Test-fold F1 after every acquisition of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub repeat: usize,
    pub fold: usize,
    pub strategy: StrategyKind,
    /// Entry `i` is the F1 with `i + 1` instances acquired.
    pub f1_per_step: Vec<f64>,
    /// External instance ids in acquisition order.
    pub acquisition_order: Vec<String>,
    pub cold_start_size: usize,
    #[serde(skip)]
    pub final_classifier: Option<ProbClassifier>,
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.f1_per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f1_per_step.is_empty()
    }

    pub fn run_id(&self) -> (usize, usize) {
        (self.repeat, self.fold)
    }
}

/// Seed of run `(repeat, fold)`; shared by every strategy so cold starts match.
pub fn run_seed(protocol_seed: u64, repeat: usize, fold: usize) -> u64 {
    seed::derive_path(protocol_seed, &[1, repeat as u64, fold as u64])
}

fn fit_on_acquired(
    state: &AcquisitionState,
    dataset: &Dataset,
    opts: LogisticOptions,
) -> Result<ProbClassifier> {
    let rows: Vec<(&[f64], Label)> = state
        .revealed()
        .map(|(id, x)| (x, dataset.label(id)))
        .collect();
    fit_logistic(&rows, opts)
}

fn evaluate(f: &ProbClassifier, dataset: &Dataset, test: &[InstanceId]) -> Result<f64> {
    let truth: Vec<Label> = test.iter().map(|&id| dataset.label(id)).collect();
    let pred: Vec<Label> = test
        .iter()
        .map(|&id| f.predict(dataset.ground_truth_x(id)))
        .collect();
    f1_score(&truth, &pred, Label::Positive)
}

fn cold_start_ids(
    dataset: &Dataset,
    train: &[InstanceId],
    mode: ColdStart,
    run_seed: u64,
) -> Result<Vec<InstanceId>> {
    let mut rng = seed::rng(seed::derive(run_seed, 0));
    let of_class = |label: Label| -> Vec<InstanceId> {
        train
            .iter()
            .copied()
            .filter(|&id| dataset.label(id) == label)
            .collect()
    };
    let (neg, pos) = (of_class(Label::Negative), of_class(Label::Positive));
    if neg.is_empty() || pos.is_empty() {
        return Err(AscfError::Stratification(
            "training pool lacks one of the classes; cold start impossible".into(),
        ));
    }
    match mode {
        ColdStart::StratifiedPair => Ok(vec![
            *neg.choose(&mut rng).expect("non-empty"),
            *pos.choose(&mut rng).expect("non-empty"),
        ]),
        ColdStart::RandomN(n) => {
            let mut pool = train.to_vec();
            let mut picked = Vec::new();
            let has_both = |ids: &[InstanceId]| {
                ids.iter().any(|&id| dataset.label(id).is_positive())
                    && ids.iter().any(|&id| !dataset.label(id).is_positive())
            };
            while !pool.is_empty() && (picked.len() < n || !has_both(&picked)) {
                let k = rand::Rng::random_range(&mut rng, 0..pool.len());
                picked.push(pool.remove(k));
            }
            Ok(picked)
        }
    }
}

/// Runs one strategy on one train/test split.
///
/// Classification features of the training pool start concealed. After the
/// cold start, the strategy repeatedly picks a candidate, its `x` is
/// revealed, the classifier is refit on the acquired rows, and F1 on the test
/// fold is recorded, until the pool is empty or `max_steps` is reached.
pub fn run_simulation(
    dataset: &Dataset,
    split: &FoldAssignment,
    strategy: &StrategyConfig,
    protocol: &ProtocolConfig,
    run_seed: u64,
) -> Result<LearningCurve> {
    let abort = |e: AscfError| AscfError::RunAborted {
        repeat: split.repeat,
        fold: split.fold,
        strategy: strategy.kind.to_string(),
        source: Box::new(e),
    };
    protocol.validate()?;
    strategy.validate()?;
    if split
        .test
        .iter()
        .any(|id| split.train.binary_search(id).is_ok())
    {
        return Err(AscfError::Contract("train and test folds overlap".into()));
    }
    let cap = protocol
        .max_steps
        .unwrap_or(usize::MAX)
        .min(split.train.len());

    let mut state = AcquisitionState::new(split.train.iter().copied());
    let mut f1_per_step = Vec::with_capacity(cap);
    let seeds =
        cold_start_ids(dataset, &split.train, protocol.cold_start, run_seed).map_err(abort)?;
    let cold_start_size = seeds.len().min(cap);
    for &id in seeds.iter().take(cap) {
        state = state.acquire(id, dataset).map_err(abort)?;
    }

    let mut last_model = None;
    if cold_start_size == seeds.len() {
        let f = fit_on_acquired(&state, dataset, strategy.classifier).map_err(abort)?;
        let score = evaluate(&f, dataset, &split.test).map_err(abort)?;
        f1_per_step.extend(std::iter::repeat_n(score, cold_start_size));
        last_model = Some(f);
    }

    let mut rng = seed::rng(seed::derive(run_seed, 1));
    let mut last_score = f1_per_step.last().copied().unwrap_or(0.0);
    while !state.is_exhausted() && state.n_acquired() < cap {
        let id = select_next(strategy, &state, dataset, true, &mut rng).map_err(abort)?;
        state = state.acquire(id, dataset).map_err(abort)?;
        let step = state.n_acquired();
        let due = step.is_multiple_of(protocol.eval_every) || state.is_exhausted() || step == cap;
        if due {
            let f = fit_on_acquired(&state, dataset, strategy.classifier).map_err(abort)?;
            last_score = evaluate(&f, dataset, &split.test).map_err(abort)?;
            last_model = Some(f);
        }
        f1_per_step.push(last_score);
    }

    Ok(LearningCurve {
        repeat: split.repeat,
        fold: split.fold,
        strategy: strategy.kind,
        f1_per_step,
        acquisition_order: state
            .acquired()
            .iter()
            .map(|&id| dataset.name(id).to_string())
            .collect(),
        cold_start_size,
        final_classifier: last_model,
    })
}
