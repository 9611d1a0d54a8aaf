//! Resumable live acquisition campaign.
//!
//! The state file is JSON, rewritten whole on every change through a temporary
//! file and a rename, so a crash leaves either the old or the new state on
//! disk. A sibling `.lock` file guards against two processes using the same
//! session at once.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    AcquisitionState, CandidatePool, CandidateRecord, FeatureManifest, InstanceId, Label,
};
use crate::error::{AscfError, Result};
use crate::seed;
use crate::strategies::{
    is_ready, score_candidates, select_next, CandidateView, StrategyConfig, StrategyKind,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionSource {
    Strategy,
    /// Too few acquisitions for the configured strategy's models.
    RandomFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub id: String,
    pub utility: Option<f64>,
    pub source: SuggestionSource,
    pub acquired_before: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Honored,
    Overridden,
    /// Recorded without an outstanding suggestion.
    Unsolicited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquiredRecord {
    pub id: String,
    pub x: Vec<f64>,
    pub label: Option<Label>,
    pub suggested: Option<String>,
    pub outcome: Outcome,
    /// Seconds since the Unix epoch at recording time.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: u32,
    pub manifest: FeatureManifest,
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub positive_label: Option<String>,
    pub negative_label: Option<String>,
    pub candidates: Vec<CandidateRecord>,
    /// Append-only, in acquisition order.
    pub acquired: Vec<AcquiredRecord>,
    /// Every suggestion ever made, in order.
    pub suggestions: Vec<Suggestion>,
    /// Suggested but not yet recorded.
    pub pending: Option<String>,
}

/// Result of [`SessionState::suggest`].
#[derive(Debug, Clone, PartialEq)]
pub enum SuggestOutcome {
    Exhausted,
    Ranked {
        /// Best first; a single entry for random choices.
        ranked: Vec<(String, Option<f64>)>,
        source: SuggestionSource,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionStatus {
    pub strategy: StrategyKind,
    pub acquired: usize,
    pub candidates: usize,
    pub pending: Option<String>,
    pub last_outcome: Option<Outcome>,
    pub honored: usize,
    pub overridden: usize,
}

struct SessionView<'a>(&'a SessionState);

impl CandidateView for SessionView<'_> {
    fn selection(&self, id: InstanceId) -> &[f64] {
        &self.0.candidates[id.0].z
    }

    fn known_label(&self, id: InstanceId) -> Option<Label> {
        self.0.candidates[id.0].y
    }
}

impl SessionState {
    pub fn new(
        pool: CandidatePool,
        manifest: FeatureManifest,
        strategy: StrategyConfig,
        seed: u64,
    ) -> Result<Self> {
        manifest.validate()?;
        strategy.validate()?;
        let mut names = std::collections::HashSet::new();
        for c in &pool.records {
            if !names.insert(c.name.as_str()) {
                return Err(AscfError::Manifest(format!(
                    "duplicate instance id `{}`",
                    c.name
                )));
            }
            if c.z.len() != manifest.selection_columns.len() {
                return Err(AscfError::Shape(format!(
                    "candidate `{}` has the wrong number of selection values",
                    c.name
                )));
            }
        }
        Ok(SessionState {
            schema_version: SCHEMA_VERSION,
            manifest,
            strategy,
            seed,
            positive_label: pool.positive_label,
            negative_label: pool.negative_label,
            candidates: pool.records,
            acquired: Vec::new(),
            suggestions: Vec::new(),
            pending: None,
        })
    }

    fn index_of(&self, name: &str) -> Result<InstanceId> {
        self.candidates
            .iter()
            .position(|c| c.name == name)
            .map(InstanceId)
            .ok_or_else(|| AscfError::UnknownId(name.to_string()))
    }

    /// Rebuilds the acquired/candidate partition from the record log.
    pub fn acquisition_state(&self) -> Result<AcquisitionState> {
        let mut state = AcquisitionState::new((0..self.candidates.len()).map(InstanceId));
        for r in &self.acquired {
            let id = self.index_of(&r.id)?;
            state = state.acquire_with(id, r.x.clone())?;
        }
        Ok(state)
    }

    /// Ranks the remaining candidates and remembers the best as pending.
    pub fn suggest(&mut self, top: usize) -> Result<SuggestOutcome> {
        let state = self.acquisition_state()?;
        if state.is_exhausted() {
            return Ok(SuggestOutcome::Exhausted);
        }
        let mut rng = seed::rng(seed::derive(self.seed, self.suggestions.len() as u64));
        let view = SessionView(self);
        let labels_visible = self.strategy.kind == StrategyKind::SAscf;
        let (ranked, source) = if self.strategy.kind != StrategyKind::Random
            && is_ready(&self.strategy, &state, &view)
        {
            let mut scores =
                score_candidates(&self.strategy, &state, &view, labels_visible, &mut rng)?;
            let best = crate::strategies::argmax(&scores, self.strategy.tie_break, &mut rng)
                .ok_or(AscfError::Exhausted)?;
            scores.sort_by(|a, b| {
                (b.id == best)
                    .cmp(&(a.id == best))
                    .then(b.value.total_cmp(&a.value))
                    .then(a.id.cmp(&b.id))
            });
            let ranked = scores
                .iter()
                .take(top.max(1))
                .map(|s| (self.candidates[s.id.0].name.clone(), Some(s.value)))
                .collect::<Vec<_>>();
            (ranked, SuggestionSource::Strategy)
        } else {
            let random = StrategyConfig::random();
            let id = select_next(&random, &state, &view, false, &mut rng)?;
            let source = if self.strategy.kind == StrategyKind::Random {
                SuggestionSource::Strategy
            } else {
                SuggestionSource::RandomFallback
            };
            (vec![(self.candidates[id.0].name.clone(), None)], source)
        };
        self.suggestions.push(Suggestion {
            id: ranked[0].0.clone(),
            utility: ranked[0].1,
            source,
            acquired_before: state.n_acquired(),
        });
        self.pending = Some(ranked[0].0.clone());
        Ok(SuggestOutcome::Ranked { ranked, source })
    }

    /// Parses a raw label value against the session's label strings.
    pub fn parse_label(&self, raw: &str) -> Result<Label> {
        if self.positive_label.as_deref() == Some(raw) {
            return Ok(Label::Positive);
        }
        if self.negative_label.as_deref() == Some(raw) {
            return Ok(Label::Negative);
        }
        match (&self.positive_label, &self.negative_label) {
            (Some(_), None) => Ok(Label::Negative),
            (None, _) => Err(AscfError::Label(format!(
                "cannot tell whether `{raw}` is the positive class; set positive_label in the manifest"
            ))),
            (Some(p), Some(n)) => Err(AscfError::Label(format!("label `{raw}` is neither `{p}` nor `{n}`"))),
        }
    }

    /// Appends a measurement. Works whether or not `id` was the suggestion.
    pub fn record(&mut self, id: &str, x: Vec<f64>, label: Option<&str>) -> Result<Outcome> {
        let idx = self.index_of(id)?;
        if self.acquired.iter().any(|r| r.id == id) {
            return Err(AscfError::AlreadyAcquired(id.to_string()));
        }
        let d = self.manifest.classification_columns.len();
        if x.len() != d {
            return Err(AscfError::Shape(format!(
                "expected {d} classification values, got {}",
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(AscfError::Domain(format!(
                "classification value {v} is not finite"
            )));
        }
        let label = match label {
            Some(raw) => {
                let y = self.parse_label(raw)?;
                if y == Label::Negative && self.negative_label.is_none() {
                    self.negative_label = Some(raw.to_string());
                }
                if let Some(old) = self.candidates[idx.0].y {
                    if old != y {
                        return Err(AscfError::Label(format!(
                            "`{id}` already has a different label"
                        )));
                    }
                }
                self.candidates[idx.0].y = Some(y);
                Some(y)
            }
            None => self.candidates[idx.0].y,
        };
        let outcome = match &self.pending {
            Some(p) if p == id => Outcome::Honored,
            Some(_) => Outcome::Overridden,
            None => Outcome::Unsolicited,
        };
        self.acquired.push(AcquiredRecord {
            id: id.to_string(),
            x,
            label,
            suggested: self.pending.take(),
            outcome,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        });
        Ok(outcome)
    }

    pub fn status(&self) -> SessionStatus {
        let count = |o: Outcome| self.acquired.iter().filter(|r| r.outcome == o).count();
        SessionStatus {
            strategy: self.strategy.kind,
            acquired: self.acquired.len(),
            candidates: self.candidates.len() - self.acquired.len(),
            pending: self.pending.clone(),
            last_outcome: self.acquired.last().map(|r| r.outcome),
            honored: count(Outcome::Honored),
            overridden: count(Outcome::Overridden),
        }
    }

    /// Acquired rows in the ingestion format of the manifest.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let m = &self.manifest;
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = Vec::new();
        if let Some(id) = &m.id_column {
            header.push(id);
        }
        header.extend(m.selection_columns.iter().map(String::as_str));
        header.extend(m.classification_columns.iter().map(String::as_str));
        header.push(&m.label_column);
        w.write_record(&header)?;
        for r in &self.acquired {
            let c = &self.candidates[self.index_of(&r.id)?.0];
            let mut row: Vec<String> = Vec::new();
            if m.id_column.is_some() {
                row.push(r.id.clone());
            }
            row.extend(c.z.iter().map(f64::to_string));
            row.extend(r.x.iter().map(f64::to_string));
            row.push(match r.label {
                Some(Label::Positive) => self.positive_label.clone().unwrap_or_default(),
                Some(Label::Negative) => self.negative_label.clone().unwrap_or_default(),
                None => String::new(),
            });
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| AscfError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AscfError::io(path, e))?;
        let state: SessionState = serde_json::from_str(&text)?;
        if state.schema_version != SCHEMA_VERSION {
            return Err(AscfError::Contract(format!(
                "session schema version {} is not supported (expected {SCHEMA_VERSION})",
                state.schema_version
            )));
        }
        Ok(state)
    }

    /// Atomic replace: temp file in the same directory, fsync, rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_vec_pretty(self)?;
        let tmp = sibling(path, &format!(".tmp.{}", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = File::create(&tmp)?;
            f.write_all(&text)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            fs::rename(&tmp, path)?;
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if let Ok(d) = File::open(dir) {
                    let _ = d.sync_all();
                }
            }
            Ok(())
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            AscfError::io(path, e)
        })
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Exclusive hold on a session, released on drop.
#[derive(Debug)]
pub struct SessionLock {
    path: PathBuf,
}

fn holder_alive(lock: &Path) -> bool {
    let Ok(text) = fs::read_to_string(lock) else {
        return true;
    };
    match text.trim().parse::<u32>() {
        // without /proc there is no cheap liveness check; assume alive
        Ok(pid) if Path::new("/proc/self").exists() => Path::new(&format!("/proc/{pid}")).exists(),
        Ok(_) => true,
        // empty: being written right now, unless it has sat there a while
        Err(_) if text.is_empty() => fs::metadata(lock)
            .and_then(|m| m.modified())
            .ok()
            .and_then(|t| t.elapsed().ok())
            .is_none_or(|age| age.as_secs() < 5),
        Err(_) => false,
    }
}

impl SessionLock {
    pub fn acquire(state_path: &Path) -> Result<Self> {
        let path = sibling(state_path, ".lock");
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    write!(f, "{}", std::process::id()).map_err(|e| AscfError::io(&path, e))?;
                    return Ok(SessionLock { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if holder_alive(&path) {
                        return Err(AscfError::Busy(path));
                    }
                    let _ = fs::remove_file(&path);
                }
                Err(e) => return Err(AscfError::io(&path, e)),
            }
        }
        Err(AscfError::Busy(path))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
