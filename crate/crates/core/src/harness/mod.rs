//! Offline evaluation: simulated acquisition on repeated stratified k-fold
//! splits, learning-curve aggregation and significance against random.

mod benchmark;
pub mod io;
mod metrics;
mod report;
mod simulation;
mod wilcoxon;

pub use benchmark::{normalize_strategies, run_benchmark, BenchmarkResult};
pub use metrics::{f1_score, mean, percentile};
pub use report::{aggregate_and_compare, ComparisonReport, Flag, StepRow};
pub use simulation::{run_seed, run_simulation, ColdStart, LearningCurve, ProtocolConfig};
pub use wilcoxon::{doubled_signed_ranks, wilcoxon_signed_rank, Alternative, EXACT_MAX_N};
