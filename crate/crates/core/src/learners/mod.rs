//! Numeric models: the auxiliary regressor `h: z -> x`, its bootstrap
//! ensemble, the primary classifier `f: x -> y`, and recursive feature
//! elimination.

mod ensemble;
mod linear;
mod logistic;
mod rfe;

pub use ensemble::{fit_bootstrap_ensemble, resample_indices, BootstrapEnsemble};
pub use linear::{fit_linear, LinearModel, RCOND};
pub use logistic::{
    fit_logistic, penalized_objective, sigmoid, LogisticOptions, ProbClassifier, Standardizer,
};
pub use rfe::{rfe_select, RfeResult};
