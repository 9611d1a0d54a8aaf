use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::benchmark::BenchmarkResult;
use super::report::{ComparisonReport, StepRow};
use super::simulation::{run_seed, LearningCurve, ProtocolConfig};
use crate::dataset::{Dataset, Label};
use crate::error::{AscfError, Result};
use crate::strategies::{StrategyConfig, StrategyKind};

pub const CURVES_FILE: &str = "curves.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const METADATA_FILE: &str = "metadata.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub file: String,
    pub sha256: String,
    pub rows_read: usize,
    pub rows_used: usize,
    pub dropped_rows: Vec<usize>,
    pub selection: Vec<String>,
    pub classification: Vec<String>,
    pub positive_label: String,
    pub negative_label: String,
    pub positives: usize,
    pub negatives: usize,
}

impl DataInfo {
    pub fn describe(dataset: &Dataset, file: &str, raw_bytes: &[u8]) -> Self {
        let (neg, pos) = dataset.class_counts();
        DataInfo {
            file: file.to_string(),
            sha256: sha256_hex(raw_bytes),
            rows_read: dataset.load_report().rows_read,
            rows_used: dataset.len(),
            dropped_rows: dataset.load_report().dropped_rows.clone(),
            selection: dataset.selection_names().to_vec(),
            classification: dataset.classification_names().to_vec(),
            positive_label: dataset.positive_label().to_string(),
            negative_label: dataset.negative_label().to_string(),
            positives: pos,
            negatives: neg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub fold: usize,
    pub seed: u64,
    pub train_size: usize,
    pub train_positives: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub data: DataInfo,
    pub protocol: ProtocolConfig,
    pub strategies: Vec<StrategyConfig>,
    pub runs: Vec<RunRecord>,
    pub decisions: BTreeMap<String, String>,
}

fn default_decisions() -> BTreeMap<String, String> {
    [
        ("percentile", "linear interpolation between closest ranks"),
        ("significance", "paired one-sided Wilcoxon signed-rank vs random; zero differences dropped, average ranks for ties; exact up to 25 non-zero pairs, normal approximation with tie and continuity corrections above"),
        ("flag", "better if p_greater <= alpha, worse if p_less <= alpha"),
        ("cold_start_steps", "steps inside the cold start report the F1 of the classifier fit on the full cold-start set"),
        ("report_steps", "1 through the shortest curve length"),
        ("classifier", "L2 logistic regression, C = 1, intercept unpenalized, features standardized on the acquired rows, Newton with backtracking, tol 1e-6, max 200 iterations"),
        ("regressor", "least squares with intercept, minimum-norm solution on rank deficiency, rcond 1e-10"),
        ("run_seed", "splitmix64 derivation from the protocol seed and (repeat, fold); cold start and strategy streams derived from the run seed"),
        ("rng", "ChaCha8"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl RunMetadata {
    pub fn new(
        dataset: &Dataset,
        data_file: &str,
        raw_bytes: &[u8],
        protocol: &ProtocolConfig,
        result: &BenchmarkResult,
    ) -> Self {
        let runs = result
            .plan
            .assignments
            .iter()
            .map(|a| RunRecord {
                repeat: a.repeat,
                fold: a.fold,
                seed: run_seed(protocol.seed, a.repeat, a.fold),
                train_size: a.train.len(),
                train_positives: a
                    .train
                    .iter()
                    .filter(|&&id| dataset.label(id) == Label::Positive)
                    .count(),
                test_size: a.test.len(),
            })
            .collect();
        RunMetadata {
            tool: "ascf".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            data: DataInfo::describe(dataset, data_file, raw_bytes),
            protocol: protocol.clone(),
            strategies: result.strategies.clone(),
            runs,
            decisions: default_decisions(),
        }
    }

    /// Whether two outputs can be merged: same data, splits and cold starts.
    pub fn compatible_with(&self, other: &RunMetadata) -> Result<()> {
        let a = &self.protocol;
        let b = &other.protocol;
        let mut problems = Vec::new();
        if self.data.sha256 != other.data.sha256 {
            problems.push("data file hash");
        }
        if a.seed != b.seed {
            problems.push("seed");
        }
        if a.k != b.k || a.repeats != b.repeats {
            problems.push("fold layout");
        }
        if a.cold_start != b.cold_start {
            problems.push("cold start");
        }
        if a.max_steps != b.max_steps || a.eval_every != b.eval_every {
            problems.push("step schedule");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AscfError::Pairing(format!(
                "outputs differ in {}",
                problems.join(", ")
            )))
        }
    }
}

pub fn write_metadata(path: &Path, meta: &RunMetadata) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AscfError::io(path, e))
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata> {
    let text = fs::read_to_string(path).map_err(|e| AscfError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    strategy: StrategyKind,
    repeat: usize,
    fold: usize,
    step: usize,
    f1: f64,
    acquired_id: String,
}

/// One row per (strategy, repeat, fold, step).
pub fn write_curves_csv(
    path: &Path,
    curves: &BTreeMap<StrategyKind, Vec<LearningCurve>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for cs in curves.values() {
        let mut cs: Vec<&LearningCurve> = cs.iter().collect();
        cs.sort_by_key(|c| c.run_id());
        for c in cs {
            for (i, (&f1, id)) in c.f1_per_step.iter().zip(&c.acquisition_order).enumerate() {
                w.serialize(CurveRow {
                    strategy: c.strategy,
                    repeat: c.repeat,
                    fold: c.fold,
                    step: i + 1,
                    f1,
                    acquired_id: id.clone(),
                })?;
            }
        }
    }
    w.flush().map_err(|e| AscfError::io(path, e))
}

/// Inverse of [`write_curves_csv`]. Cold-start sizes are not stored and come
/// back as 0.
pub fn read_curves_csv(path: &Path) -> Result<BTreeMap<StrategyKind, Vec<LearningCurve>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut runs: BTreeMap<(StrategyKind, usize, usize), LearningCurve> = BTreeMap::new();
    for row in r.deserialize() {
        let row: CurveRow = row?;
        let c = runs
            .entry((row.strategy, row.repeat, row.fold))
            .or_insert_with(|| LearningCurve {
                repeat: row.repeat,
                fold: row.fold,
                strategy: row.strategy,
                f1_per_step: Vec::new(),
                acquisition_order: Vec::new(),
                cold_start_size: 0,
                final_classifier: None,
            });
        if row.step != c.f1_per_step.len() + 1 {
            return Err(AscfError::Contract(format!(
                "{}: {} run ({}, {}) has step {} out of order",
                path.display(),
                row.strategy,
                row.repeat,
                row.fold,
                row.step
            )));
        }
        if !(0.0..=1.0).contains(&row.f1) {
            return Err(AscfError::Domain(format!(
                "{}: F1 {} outside [0, 1]",
                path.display(),
                row.f1
            )));
        }
        c.f1_per_step.push(row.f1);
        c.acquisition_order.push(row.acquired_id);
    }
    let mut out: BTreeMap<StrategyKind, Vec<LearningCurve>> = BTreeMap::new();
    for ((kind, _, _), c) in runs {
        out.entry(kind).or_default().push(c);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow {
    strategy: StrategyKind,
    step: usize,
    mean: f64,
    p10: f64,
    p90: f64,
    p_greater: f64,
    p_less: f64,
    flag: String,
}

pub fn write_report_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.rows {
        w.serialize(ReportRow {
            strategy: r.strategy,
            step: r.step,
            mean: r.mean,
            p10: r.p10,
            p90: r.p90,
            p_greater: r.p_greater,
            p_less: r.p_less,
            flag: r.flag.to_string(),
        })?;
    }
    w.flush().map_err(|e| AscfError::io(path, e))
}

pub fn read_report_rows(path: &Path) -> Result<Vec<StepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| {
            let row: ReportRow = row?;
            Ok(StepRow {
                strategy: row.strategy,
                step: row.step,
                mean: row.mean,
                p10: row.p10,
                p90: row.p90,
                p_greater: row.p_greater,
                p_less: row.p_less,
                flag: row.flag.parse()?,
            })
        })
        .collect()
}

/// Combines curves from several output directories.
///
/// Every directory must share data hash, seed and fold layout. A strategy
/// present in more than one directory must have identical curves in each.
pub fn merge_outputs(
    parts: Vec<(RunMetadata, BTreeMap<StrategyKind, Vec<LearningCurve>>)>,
) -> Result<(RunMetadata, BTreeMap<StrategyKind, Vec<LearningCurve>>)> {
    let mut iter = parts.into_iter();
    let (mut meta, mut curves) = iter
        .next()
        .ok_or_else(|| AscfError::Contract("no outputs to merge".into()))?;
    for (m, cs) in iter {
        meta.compatible_with(&m)?;
        for (kind, c) in cs {
            match curves.get(&kind) {
                Some(existing) if *existing != c => {
                    return Err(AscfError::Pairing(format!(
                        "{kind} curves differ between the merged outputs"
                    )));
                }
                Some(_) => {}
                None => {
                    curves.insert(kind, c);
                }
            }
        }
        for s in m.strategies {
            if !meta.strategies.iter().any(|t| t.kind == s.kind) {
                meta.strategies.push(s);
            }
        }
    }
    meta.strategies.sort_by_key(|s| s.kind);
    Ok((meta, curves))
}

/// Writes `curves.csv`, `report.csv` and `metadata.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    curves: &BTreeMap<StrategyKind, Vec<LearningCurve>>,
    report: &ComparisonReport,
    meta: &RunMetadata,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AscfError::io(dir, e))?;
    write_curves_csv(&dir.join(CURVES_FILE), curves)?;
    write_report_csv(&dir.join(REPORT_FILE), report)?;
    write_metadata(&dir.join(METADATA_FILE), meta)
}
