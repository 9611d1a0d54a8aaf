//! Selection policies behind one "pick the next instance" contract.
//!
//! * `random`: uniform draw from the candidate pool.
//! * `u-ascf`: bootstrap an ensemble of `h: z -> x` on the acquired rows and
//!   pick the candidate whose imputations disagree the most.
//! * `s-ascf`: impute `x` for every candidate with `h`, score the imputation
//!   with the primary classifier `f`, and pick the candidate with the largest
//!   misclassification utility.

mod utility;

pub use utility::{
    acquired_variances, asymmetry_b, imputation_variance, s_ascf_utility, u_ascf_utility,
    VarianceEstimator, DENOMINATOR_FLOOR, SCALE_FLOOR,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dataset::{AcquisitionState, Dataset, InstanceId, Label};
use crate::error::{AscfError, Result};
use crate::learners::{fit_bootstrap_ensemble, fit_linear, fit_logistic, LogisticOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "u-ascf")]
    UAscf,
    #[serde(rename = "s-ascf")]
    SAscf,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Random,
        StrategyKind::UAscf,
        StrategyKind::SAscf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::UAscf => "u-ascf",
            StrategyKind::SAscf => "s-ascf",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = AscfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "random" => Ok(StrategyKind::Random),
            "u-ascf" => Ok(StrategyKind::UAscf),
            "s-ascf" => Ok(StrategyKind::SAscf),
            other => Err(AscfError::Contract(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    #[default]
    Raw,
    /// Divide each dimension's imputation variance by the acquired-set sample
    /// variance of that dimension.
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMode {
    /// `p = 1 - P(known label | h(z))`.
    #[default]
    TrueLabel,
    /// `p = 1 - P(most likely class | h(z))`.
    PredictedClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestId,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Ensemble size for `u-ascf`.
    pub bootstrap: usize,
    pub variance_mode: VarianceMode,
    pub variance_estimator: VarianceEstimator,
    pub p_mode: PMode,
    pub tie_break: TieBreak,
    pub classifier: LogisticOptions,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            bootstrap: 10,
            variance_mode: VarianceMode::default(),
            variance_estimator: VarianceEstimator::default(),
            p_mode: PMode::default(),
            tie_break: TieBreak::default(),
            classifier: LogisticOptions::default(),
        }
    }

    pub fn random() -> Self {
        Self::new(StrategyKind::Random)
    }

    pub fn u_ascf() -> Self {
        Self::new(StrategyKind::UAscf)
    }

    pub fn s_ascf() -> Self {
        Self::new(StrategyKind::SAscf)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == StrategyKind::UAscf && self.bootstrap < 2 {
            return Err(AscfError::Contract(format!(
                "u-ascf needs an ensemble of at least 2, got {}",
                self.bootstrap
            )));
        }
        Ok(())
    }
}

/// Utility of acquiring one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityScore {
    pub id: InstanceId,
    pub value: f64,
}

impl UtilityScore {
    fn guarded(id: InstanceId, value: f64) -> Self {
        let value = if value.is_finite() && value > 0.0 {
            value
        } else {
            0.0
        };
        UtilityScore { id, value }
    }
}

/// What a strategy may see about the instances: selection features for all,
/// labels where known. Classification features come only from the
/// [`AcquisitionState`].
pub trait CandidateView {
    fn selection(&self, id: InstanceId) -> &[f64];
    fn known_label(&self, id: InstanceId) -> Option<Label>;
}

impl CandidateView for Dataset {
    fn selection(&self, id: InstanceId) -> &[f64] {
        self.z(id)
    }

    fn known_label(&self, id: InstanceId) -> Option<Label> {
        Some(self.label(id))
    }
}

/// Whether `state` holds enough acquired rows for `config`'s models.
pub fn is_ready(
    config: &StrategyConfig,
    state: &AcquisitionState,
    view: &dyn CandidateView,
) -> bool {
    match config.kind {
        StrategyKind::Random => true,
        StrategyKind::UAscf => state.n_acquired() >= 2,
        StrategyKind::SAscf => {
            let labels: Vec<Option<Label>> = state
                .acquired()
                .iter()
                .map(|&id| view.known_label(id))
                .collect();
            labels.contains(&Some(Label::Positive)) && labels.contains(&Some(Label::Negative))
        }
    }
}

/// Scores every candidate (ascending id order). Not defined for `random`.
pub fn score_candidates(
    config: &StrategyConfig,
    state: &AcquisitionState,
    view: &dyn CandidateView,
    labels_visible: bool,
    rng: &mut dyn RngCore,
) -> Result<Vec<UtilityScore>> {
    config.validate()?;
    if state.is_exhausted() {
        return Err(AscfError::Exhausted);
    }
    let acquired: Vec<(&[f64], &[f64])> = state
        .revealed()
        .map(|(id, x)| (view.selection(id), x))
        .collect();
    match config.kind {
        StrategyKind::Random => Err(AscfError::Contract(
            "random selection has no utility".into(),
        )),
        StrategyKind::UAscf => {
            let ensemble = fit_bootstrap_ensemble(&acquired, config.bootstrap, rng.next_u64())?;
            let scale = match config.variance_mode {
                VarianceMode::Raw => None,
                VarianceMode::Standardized => {
                    let xs: Vec<&[f64]> = acquired.iter().map(|r| r.1).collect();
                    Some(acquired_variances(&xs))
                }
            };
            Ok(state
                .candidates()
                .iter()
                .map(|&id| {
                    let preds = ensemble.predict_all(view.selection(id));
                    let v =
                        imputation_variance(&preds, config.variance_estimator, scale.as_deref());
                    UtilityScore::guarded(id, v)
                })
                .collect())
        }
        StrategyKind::SAscf => {
            if !labels_visible {
                return Err(AscfError::Contract(
                    "s-ascf requires visible class labels".into(),
                ));
            }
            let labelled = state
                .revealed()
                .map(|(id, x)| {
                    view.known_label(id).map(|y| (x, y)).ok_or_else(|| {
                        AscfError::Contract(format!("acquired instance {id} has no label"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let f = fit_logistic(&labelled, config.classifier)?;
            let h = fit_linear(&acquired)?;
            let b = asymmetry_b(state.n_acquired())?;
            state
                .candidates()
                .iter()
                .map(|&id| {
                    let x_hat = h.predict(view.selection(id));
                    let p = match config.p_mode {
                        PMode::TrueLabel => {
                            let y = view.known_label(id).ok_or_else(|| {
                                AscfError::Contract(format!("candidate {id} has no label"))
                            })?;
                            1.0 - f.posterior(&x_hat, y)
                        }
                        PMode::PredictedClass => {
                            let pos = f.posterior_positive(&x_hat);
                            1.0 - pos.max(1.0 - pos)
                        }
                    };
                    Ok(UtilityScore::guarded(
                        id,
                        s_ascf_utility(p.clamp(0.0, 1.0), b)?,
                    ))
                })
                .collect()
        }
    }
}

/// Index of the maximum; ties resolved per `tie_break`.
pub fn argmax(
    scores: &[UtilityScore],
    tie_break: TieBreak,
    rng: &mut dyn RngCore,
) -> Option<InstanceId> {
    let best = scores
        .iter()
        .map(|s| s.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<InstanceId> = scores
        .iter()
        .filter(|s| s.value == best)
        .map(|s| s.id)
        .collect();
    tied.sort_unstable();
    match tie_break {
        TieBreak::LowestId => tied.first().copied(),
        TieBreak::SeededRandom if tied.len() > 1 => Some(tied[rng.random_range(0..tied.len())]),
        TieBreak::SeededRandom => tied.first().copied(),
    }
}

/// Picks the next candidate to acquire.
pub fn select_next(
    config: &StrategyConfig,
    state: &AcquisitionState,
    view: &dyn CandidateView,
    labels_visible: bool,
    rng: &mut dyn RngCore,
) -> Result<InstanceId> {
    if state.is_exhausted() {
        return Err(AscfError::Exhausted);
    }
    match config.kind {
        StrategyKind::Random => {
            let k = rng.random_range(0..state.candidates().len());
            Ok(*state.candidates().iter().nth(k).expect("index within pool"))
        }
        _ => {
            let scores = score_candidates(config, state, view, labels_visible, rng)?;
            argmax(&scores, config.tie_break, rng).ok_or(AscfError::Exhausted)
        }
    }
}
