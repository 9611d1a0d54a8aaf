//! Dataset ingestion with declared feature roles, cross-validation splits and
//! the acquired/candidate pool state.
//!
//! Every instance carries a cheap selection vector `z` and a binary label. Its
//! expensive classification vector `x` is held separately and only reaches a
//! learner through [`AcquisitionState::acquire`].

mod split;
mod state;

pub use split::{make_splits, FoldAssignment, SplitPlan};
pub use state::AcquisitionState;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{AscfError, Result};

/// Index of an instance inside its [`Dataset`] (row order after ingestion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(pub usize);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }

    pub fn other(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

/// What to do with rows that have an empty cell in a declared column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    Drop,
}

/// Column roles of a tabular file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureManifest {
    #[serde(rename = "selection")]
    pub selection_columns: Vec<String>,
    #[serde(rename = "classification")]
    pub classification_columns: Vec<String>,
    #[serde(rename = "label")]
    pub label_column: String,
    #[serde(
        default,
        deserialize_with = "label_value",
        skip_serializing_if = "Option::is_none"
    )]
    pub positive_label: Option<String>,
    #[serde(rename = "id", default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
}

// Accept `"positive_label": 1` as well as `"positive_label": "1"`.
fn label_value<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Option<String>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(de)?;
    Ok(match v {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(other) => Some(other.to_string()),
    })
}

impl FeatureManifest {
    pub fn new(
        selection: &[&str],
        classification: &[&str],
        label: &str,
        positive_label: Option<&str>,
    ) -> Self {
        FeatureManifest {
            selection_columns: selection.iter().map(|s| s.to_string()).collect(),
            classification_columns: classification.iter().map(|s| s.to_string()).collect(),
            label_column: label.to_string(),
            positive_label: positive_label.map(str::to_string),
            id_column: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let manifest: FeatureManifest =
            serde_json::from_str(text).map_err(|e| AscfError::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AscfError::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Checks role cardinalities and that no column plays two roles.
    pub fn validate(&self) -> Result<()> {
        if self.selection_columns.is_empty() {
            return Err(AscfError::Manifest(
                "`selection` must name at least one column".into(),
            ));
        }
        if self.classification_columns.is_empty() {
            return Err(AscfError::Manifest(
                "`classification` must name at least one column".into(),
            ));
        }
        if self.label_column.is_empty() {
            return Err(AscfError::Manifest("`label` must name a column".into()));
        }
        let mut seen = HashSet::new();
        let all = self
            .selection_columns
            .iter()
            .chain(&self.classification_columns)
            .chain(std::iter::once(&self.label_column))
            .chain(self.id_column.iter());
        for col in all {
            if !seen.insert(col.as_str()) {
                return Err(AscfError::Manifest(format!(
                    "column `{col}` is assigned more than one role"
                )));
            }
        }
        Ok(())
    }
}

/// Rows removed during ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    /// 1-based data row numbers (header excluded) that were dropped.
    pub dropped_rows: Vec<usize>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dropped_rows.len();
        write!(f, "{} row{} dropped", n, if n == 1 { "" } else { "s" })
    }
}

/// One row: external name, selection vector and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    pub name: String,
    pub z: Vec<f64>,
    pub y: Label,
}

/// A binary-labelled table with selection and classification features.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    selection_names: Vec<String>,
    classification_names: Vec<String>,
    positive_label: String,
    negative_label: String,
    instances: Vec<Instance>,
    x_store: Vec<Vec<f64>>,
    load_report: LoadReport,
}

impl Dataset {
    /// Builds a dataset from in-memory rows `(name, z, x, y)`.
    pub fn from_rows(
        selection_names: Vec<String>,
        classification_names: Vec<String>,
        rows: Vec<(String, Vec<f64>, Vec<f64>, Label)>,
    ) -> Result<Self> {
        let m = selection_names.len();
        let d = classification_names.len();
        if m == 0 || d == 0 {
            return Err(AscfError::Shape(
                "need at least one selection and one classification feature".into(),
            ));
        }
        let mut names = HashSet::new();
        let mut instances = Vec::with_capacity(rows.len());
        let mut x_store = Vec::with_capacity(rows.len());
        for (i, (name, z, x, y)) in rows.into_iter().enumerate() {
            if z.len() != m || x.len() != d {
                return Err(AscfError::Shape(format!(
                    "row {i}: expected |z|={m}, |x|={d}, got {} and {}",
                    z.len(),
                    x.len()
                )));
            }
            if z.iter().chain(&x).any(|v| !v.is_finite()) {
                return Err(AscfError::Domain(format!("row {i} has a non-finite value")));
            }
            if !names.insert(name.clone()) {
                return Err(AscfError::Manifest(format!(
                    "duplicate instance id `{name}`"
                )));
            }
            instances.push(Instance {
                id: InstanceId(i),
                name,
                z,
                y,
            });
            x_store.push(x);
        }
        Ok(Dataset {
            selection_names,
            classification_names,
            positive_label: "1".into(),
            negative_label: "0".into(),
            instances,
            x_store,
            load_report: LoadReport::default(),
        })
    }

    pub fn with_label_names(mut self, positive: &str, negative: &str) -> Self {
        self.positive_label = positive.to_string();
        self.negative_label = negative.to_string();
        self
    }

    /// Number of selection features.
    pub fn m(&self) -> usize {
        self.selection_names.len()
    }

    /// Number of classification features.
    pub fn d(&self) -> usize {
        self.classification_names.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn ids(&self) -> impl Iterator<Item = InstanceId> + '_ {
        self.instances.iter().map(|i| i.id)
    }

    pub fn instance(&self, id: InstanceId) -> &Instance {
        &self.instances[id.0]
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        id.0 < self.instances.len()
    }

    pub fn z(&self, id: InstanceId) -> &[f64] {
        &self.instances[id.0].z
    }

    pub fn label(&self, id: InstanceId) -> Label {
        self.instances[id.0].y
    }

    pub fn name(&self, id: InstanceId) -> &str {
        &self.instances[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<InstanceId> {
        self.instances.iter().find(|i| i.name == name).map(|i| i.id)
    }

    /// Ground-truth classification features.
    ///
    /// Learners must not read this for training instances; the harness uses it
    /// to evaluate on held-out folds and [`AcquisitionState::acquire`] uses it
    /// to reveal an acquired row.
    pub fn ground_truth_x(&self, id: InstanceId) -> &[f64] {
        &self.x_store[id.0]
    }

    pub fn selection_names(&self) -> &[String] {
        &self.selection_names
    }

    pub fn classification_names(&self) -> &[String] {
        &self.classification_names
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn negative_label(&self) -> &str {
        &self.negative_label
    }

    pub fn label_name(&self, y: Label) -> &str {
        match y {
            Label::Positive => &self.positive_label,
            Label::Negative => &self.negative_label,
        }
    }

    pub fn load_report(&self) -> &LoadReport {
        &self.load_report
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.instances.iter().filter(|i| i.y.is_positive()).count();
        (self.len() - pos, pos)
    }

    /// Copy restricted to the given classification feature columns.
    pub fn with_classification_subset(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() || columns.iter().any(|&c| c >= self.d()) {
            return Err(AscfError::Shape(
                "invalid classification column subset".into(),
            ));
        }
        let mut out = self.clone();
        out.classification_names = columns
            .iter()
            .map(|&c| self.classification_names[c].clone())
            .collect();
        out.x_store = self
            .x_store
            .iter()
            .map(|x| columns.iter().map(|&c| x[c]).collect())
            .collect();
        Ok(out)
    }

    /// Copy with the ground-truth `x` of `ids` replaced by `f(x)`.
    pub fn map_ground_truth(&self, ids: &[InstanceId], f: impl Fn(&[f64]) -> Vec<f64>) -> Dataset {
        let mut out = self.clone();
        for &id in ids {
            out.x_store[id.0] = f(&self.x_store[id.0]);
        }
        out
    }
}

pub(crate) fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| AscfError::Manifest(format!("column `{name}` not found in header")))
}

/// Reads a CSV file (header row, `.` decimal separator) under the given roles.
pub fn load_dataset(
    data_path: impl AsRef<Path>,
    manifest: &FeatureManifest,
    missing_policy: MissingPolicy,
) -> Result<Dataset> {
    let path = data_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| AscfError::io(path, e))?;
    load_dataset_from_reader(file, manifest, missing_policy)
}

pub fn load_dataset_from_reader<R: Read>(
    reader: R,
    manifest: &FeatureManifest,
    missing_policy: MissingPolicy,
) -> Result<Dataset> {
    manifest.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let sel_idx = manifest
        .selection_columns
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let cls_idx = manifest
        .classification_columns
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = column_index(&headers, &manifest.label_column)?;
    let id_idx = manifest
        .id_column
        .as_ref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut report = LoadReport::default();
    let mut raw: Vec<(String, Vec<f64>, Vec<f64>, String)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        report.rows_read += 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

        let declared = sel_idx
            .iter()
            .chain(&cls_idx)
            .chain(std::iter::once(&label_idx));
        if let Some(&missing) = declared.clone().find(|&&c| is_missing(cell(c))) {
            match missing_policy {
                MissingPolicy::Drop => {
                    report.dropped_rows.push(row);
                    continue;
                }
                MissingPolicy::Reject => {
                    return Err(AscfError::MissingValue {
                        row,
                        column: headers.get(missing).unwrap_or("").to_string(),
                    })
                }
            }
        }
        let parse = |idx: usize| -> Result<f64> {
            let text = cell(idx);
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AscfError::Parse {
                    row,
                    column: headers.get(idx).unwrap_or("").to_string(),
                    value: text.to_string(),
                })
        };
        let z = sel_idx
            .iter()
            .map(|&c| parse(c))
            .collect::<Result<Vec<_>>>()?;
        let x = cls_idx
            .iter()
            .map(|&c| parse(c))
            .collect::<Result<Vec<_>>>()?;
        let name = match id_idx {
            Some(c) => cell(c).to_string(),
            None => (row - 1).to_string(),
        };
        raw.push((name, z, x, cell(label_idx).to_string()));
    }

    let (positive, negative) = resolve_labels(
        raw.iter().map(|r| r.3.as_str()),
        manifest.positive_label.as_deref(),
    )?;
    let rows = raw
        .into_iter()
        .map(|(name, z, x, y)| {
            let label = if y == positive {
                Label::Positive
            } else {
                Label::Negative
            };
            (name, z, x, label)
        })
        .collect();
    let mut dataset = Dataset::from_rows(
        manifest.selection_columns.clone(),
        manifest.classification_columns.clone(),
        rows,
    )?
    .with_label_names(&positive, &negative);
    dataset.load_report = report;
    Ok(dataset)
}

/// Picks (positive, negative) label strings; the lexicographically larger
/// value is positive when the manifest does not say.
fn resolve_labels<'a>(
    values: impl Iterator<Item = &'a str>,
    declared: Option<&str>,
) -> Result<(String, String)> {
    let distinct: BTreeSet<&str> = values.collect();
    if distinct.len() != 2 {
        return Err(AscfError::Label(format!(
            "expected exactly 2 distinct label values, found {}: {:?}",
            distinct.len(),
            distinct
        )));
    }
    let mut it = distinct.iter();
    let (lo, hi) = (*it.next().unwrap(), *it.next().unwrap());
    match declared {
        None => Ok((hi.to_string(), lo.to_string())),
        Some(p) if p == hi => Ok((hi.to_string(), lo.to_string())),
        Some(p) if p == lo => Ok((lo.to_string(), hi.to_string())),
        Some(p) => Err(AscfError::Label(format!(
            "positive_label `{p}` is not one of the label values {lo:?}, {hi:?}"
        ))),
    }
}

/// A candidate pool for a live campaign: selection features are known, labels
/// may be, classification features are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub name: String,
    pub z: Vec<f64>,
    pub y: Option<Label>,
}

/// Candidates plus whichever label strings could be resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub records: Vec<CandidateRecord>,
    pub positive_label: Option<String>,
    pub negative_label: Option<String>,
}

/// Reads a candidates CSV: selection columns required, label optional per row,
/// classification columns ignored if present.
pub fn load_candidates(
    path: impl AsRef<Path>,
    manifest: &FeatureManifest,
) -> Result<CandidatePool> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| AscfError::io(path, e))?;
    manifest.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = rdr.headers()?.clone();
    let sel_idx = manifest
        .selection_columns
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == manifest.label_column);
    let id_idx = manifest
        .id_column
        .as_ref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut raw = Vec::new();
    let mut seen = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();
        let z = sel_idx
            .iter()
            .map(|&c| {
                let text = cell(c);
                if is_missing(text) {
                    return Err(AscfError::MissingValue {
                        row,
                        column: headers.get(c).unwrap_or("").to_string(),
                    });
                }
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| AscfError::Parse {
                        row,
                        column: headers.get(c).unwrap_or("").to_string(),
                        value: text.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let name = match id_idx {
            Some(c) => cell(c).to_string(),
            None => (row - 1).to_string(),
        };
        if seen.insert(name.clone(), row).is_some() {
            return Err(AscfError::Manifest(format!(
                "duplicate instance id `{name}`"
            )));
        }
        let label = label_idx
            .map(|c| cell(c).to_string())
            .filter(|s| !is_missing(s));
        raw.push((name, z, label));
    }

    let labels: Vec<&str> = raw.iter().filter_map(|r| r.2.as_deref()).collect();
    let distinct: BTreeSet<&str> = labels.iter().copied().collect();
    let declared = manifest.positive_label.clone();
    let (positive, negative) = match distinct.len() {
        2 => {
            let (p, n) = resolve_labels(labels.iter().copied(), declared.as_deref())?;
            (Some(p), Some(n))
        }
        0 => (declared, None),
        1 => {
            let only = distinct.iter().next().unwrap().to_string();
            match declared {
                Some(p) if p == only => (Some(p), None),
                Some(p) => (Some(p), Some(only)),
                None => {
                    return Err(AscfError::Label(format!(
                        "only label value `{only}` present; set positive_label in the manifest"
                    )))
                }
            }
        }
        _ => {
            return Err(AscfError::Label(format!(
                "more than 2 distinct label values: {distinct:?}"
            )))
        }
    };
    let records = raw
        .into_iter()
        .map(|(name, z, y)| CandidateRecord {
            name,
            z,
            y: y.map(|v| {
                if Some(&v) == positive.as_ref() {
                    Label::Positive
                } else {
                    Label::Negative
                }
            }),
        })
        .collect();
    Ok(CandidatePool {
        records,
        positive_label: positive,
        negative_label: negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "\
id,age,bmi,a,b,c,class
p1,50,22.5,1.0,2.0,3.0,yes
p2,61,30.1,1.5,2.5,3.5,no
p3,45,27.0,0.5,1.5,2.5,yes
p4,70,24.2,2.0,3.0,4.0,no
";

    fn manifest() -> FeatureManifest {
        let mut m = FeatureManifest::new(&["age", "bmi"], &["a", "b", "c"], "class", Some("yes"));
        m.id_column = Some("id".into());
        m
    }

    #[test]
    fn loads_four_rows() {
        let ds =
            load_dataset_from_reader(CSV.as_bytes(), &manifest(), MissingPolicy::Reject).unwrap();
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.label(InstanceId(0)), Label::Positive);
        assert_eq!(ds.label(InstanceId(1)), Label::Negative);
        assert_eq!(ds.name(InstanceId(2)), "p3");
        assert_eq!(ds.ground_truth_x(InstanceId(3)), &[2.0, 3.0, 4.0]);
        assert!(ds.load_report().dropped_rows.is_empty());
    }

    #[test]
    fn drop_policy_counts_dropped_rows() {
        let csv = CSV.replace("p2,61,30.1,1.5,2.5,3.5", "p2,61,30.1,1.5,,3.5");
        let ds =
            load_dataset_from_reader(csv.as_bytes(), &manifest(), MissingPolicy::Drop).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.load_report().to_string(), "1 row dropped");
        assert_eq!(ds.load_report().dropped_rows, vec![2]);

        let err = load_dataset_from_reader(csv.as_bytes(), &manifest(), MissingPolicy::Reject)
            .unwrap_err();
        assert!(matches!(err, AscfError::MissingValue { row: 2, .. }));
    }

    #[test]
    fn missing_column_is_manifest_error() {
        let mut m = manifest();
        m.classification_columns.push("nope".into());
        let err = load_dataset_from_reader(CSV.as_bytes(), &m, MissingPolicy::Reject).unwrap_err();
        assert!(matches!(err, AscfError::Manifest(ref s) if s.contains("nope")));
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let csv = CSV.replace("45,27.0", "45,abc");
        let err = load_dataset_from_reader(csv.as_bytes(), &manifest(), MissingPolicy::Reject)
            .unwrap_err();
        match err {
            AscfError::Parse { row, column, value } => {
                assert_eq!(row, 3);
                assert_eq!(column, "bmi");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_label_is_rejected() {
        let csv = CSV.replace(",no", ",yes");
        let err = load_dataset_from_reader(csv.as_bytes(), &manifest(), MissingPolicy::Reject)
            .unwrap_err();
        assert!(matches!(err, AscfError::Label(_)));
    }

    #[test]
    fn default_positive_label_is_larger_value() {
        let mut m = manifest();
        m.positive_label = None;
        let ds = load_dataset_from_reader(CSV.as_bytes(), &m, MissingPolicy::Reject).unwrap();
        assert_eq!(ds.positive_label(), "yes");
        assert_eq!(ds.negative_label(), "no");
    }

    #[test]
    fn overlapping_roles_are_rejected() {
        let m = FeatureManifest::new(&["age"], &["age", "b"], "class", None);
        assert!(matches!(m.validate(), Err(AscfError::Manifest(_))));
    }

    #[test]
    fn manifest_json_names_missing_key() {
        let err = FeatureManifest::from_json_str(
            r#"{"selection": ["a"], "label": "y", "positive_label": 1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("classification"), "{err}");

        let m = FeatureManifest::from_json_str(
            r#"{"selection": ["a"], "classification": ["b"], "label": "y", "positive_label": 1}"#,
        )
        .unwrap();
        assert_eq!(m.positive_label.as_deref(), Some("1"));
    }
}
