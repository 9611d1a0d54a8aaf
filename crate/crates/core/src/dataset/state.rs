use std::collections::{BTreeMap, BTreeSet};

use super::{Dataset, InstanceId};
use crate::error::{AscfError, Result};

/// Acquired pool `A` (in acquisition order) and candidate pool `S` over one
/// training pool.
///
/// `revealed_x` holds classification features for acquired ids only. The
/// only way to grow `A` is [`acquire`](Self::acquire) or
/// [`acquire_with`](Self::acquire_with), both of which require the id to be a
/// current candidate, so ids outside the initial training pool (e.g. test
/// fold ids) can never be acquired.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionState {
    acquired: Vec<InstanceId>,
    candidates: BTreeSet<InstanceId>,
    revealed_x: BTreeMap<InstanceId, Vec<f64>>,
}

impl AcquisitionState {
    /// Fresh state with every training id a candidate and nothing acquired.
    pub fn new(train_pool: impl IntoIterator<Item = InstanceId>) -> Self {
        AcquisitionState {
            acquired: Vec::new(),
            candidates: train_pool.into_iter().collect(),
            revealed_x: BTreeMap::new(),
        }
    }

    pub fn acquired(&self) -> &[InstanceId] {
        &self.acquired
    }

    pub fn candidates(&self) -> &BTreeSet<InstanceId> {
        &self.candidates
    }

    pub fn revealed_x(&self, id: InstanceId) -> Option<&[f64]> {
        self.revealed_x.get(&id).map(Vec::as_slice)
    }

    /// Acquired ids with their revealed `x`, in ascending id order.
    ///
    /// Learners consume rows in this order so that two states holding the same
    /// set produce bitwise-identical fits regardless of acquisition order.
    pub fn revealed(&self) -> impl Iterator<Item = (InstanceId, &[f64])> {
        self.revealed_x.iter().map(|(id, x)| (*id, x.as_slice()))
    }

    pub fn n_acquired(&self) -> usize {
        self.acquired.len()
    }

    pub fn pool_size(&self) -> usize {
        self.acquired.len() + self.candidates.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Moves `id` from `S` to `A`, revealing its ground-truth `x`.
    pub fn acquire(self, id: InstanceId, dataset: &Dataset) -> Result<Self> {
        let name = || {
            if dataset.contains(id) {
                dataset.name(id).to_string()
            } else {
                id.to_string()
            }
        };
        if self.revealed_x.contains_key(&id) {
            return Err(AscfError::AlreadyAcquired(name()));
        }
        if !self.candidates.contains(&id) {
            return Err(AscfError::InvalidAcquisition(name()));
        }
        let x = dataset.ground_truth_x(id).to_vec();
        self.acquire_with(id, x)
    }

    /// Moves `id` from `S` to `A` with an externally measured `x`.
    pub fn acquire_with(mut self, id: InstanceId, x: Vec<f64>) -> Result<Self> {
        if self.revealed_x.contains_key(&id) {
            return Err(AscfError::AlreadyAcquired(id.to_string()));
        }
        if !self.candidates.remove(&id) {
            return Err(AscfError::InvalidAcquisition(id.to_string()));
        }
        self.acquired.push(id);
        self.revealed_x.insert(id, x);
        Ok(self)
    }
}
