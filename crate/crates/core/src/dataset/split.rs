use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, InstanceId, Label};
use crate::error::{AscfError, Result};
use crate::seed;

/// Train/test ids of one fold of one repeat. Both lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<InstanceId>,
    pub test: Vec<InstanceId>,
}

/// Repeated stratified k-fold plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repeats: usize,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub assignments: Vec<FoldAssignment>,
}

impl SplitPlan {
    pub fn get(&self, repeat: usize, fold: usize) -> &FoldAssignment {
        &self.assignments[repeat * self.k + fold]
    }

    pub fn folds_of(&self, repeat: usize) -> &[FoldAssignment] {
        &self.assignments[repeat * self.k..(repeat + 1) * self.k]
    }
}

/// Builds `repeats` independent stratified `k`-fold partitions.
///
/// Within a repeat each class is shuffled and dealt round-robin into the folds,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn make_splits(dataset: &Dataset, repeats: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(AscfError::Stratification(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if repeats == 0 {
        return Err(AscfError::Stratification(
            "repeats must be at least 1".into(),
        ));
    }
    let by_class = |label: Label| -> Vec<InstanceId> {
        dataset
            .instances()
            .iter()
            .filter(|i| i.y == label)
            .map(|i| i.id)
            .collect()
    };
    let classes = [by_class(Label::Negative), by_class(Label::Positive)];
    for (members, label) in classes.iter().zip([Label::Negative, Label::Positive]) {
        if members.len() < k {
            return Err(AscfError::Stratification(format!(
                "class `{}` has {} members, fewer than k = {k}",
                dataset.label_name(label),
                members.len()
            )));
        }
    }

    let mut assignments = Vec::with_capacity(repeats * k);
    for repeat in 0..repeats {
        let mut rng = seed::rng(seed::derive(seed, repeat as u64));
        let mut fold_of = vec![0usize; dataset.len()];
        let mut t = 0usize;
        for members in &classes {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            for id in shuffled {
                fold_of[id.0] = t % k;
                t += 1;
            }
        }
        for fold in 0..k {
            let (test, train): (Vec<InstanceId>, Vec<InstanceId>) =
                dataset.ids().partition(|id| fold_of[id.0] == fold);
            assignments.push(FoldAssignment {
                repeat,
                fold,
                train,
                test,
            });
        }
    }
    Ok(SplitPlan {
        repeats,
        k,
        seed,
        stratified: true,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n_neg: usize, n_pos: usize) -> Dataset {
        let rows = (0..n_neg + n_pos)
            .map(|i| {
                let y = if i < n_neg {
                    Label::Negative
                } else {
                    Label::Positive
                };
                (i.to_string(), vec![i as f64], vec![i as f64], y)
            })
            .collect();
        Dataset::from_rows(vec!["z".into()], vec!["x".into()], rows).unwrap()
    }

    #[test]
    fn balanced_ten_gives_one_per_class_per_fold() {
        let ds = toy(5, 5);
        let plan = make_splits(&ds, 1, 5, 3).unwrap();
        assert_eq!(plan.assignments.len(), 5);
        for a in &plan.assignments {
            assert_eq!(a.test.len(), 2);
            let pos = a
                .test
                .iter()
                .filter(|&&id| ds.label(id).is_positive())
                .count();
            assert_eq!(pos, 1);
            assert_eq!(a.train.len(), 8);
        }
    }

    #[test]
    fn same_seed_same_plan() {
        let ds = toy(7, 9);
        assert_eq!(
            make_splits(&ds, 3, 4, 11).unwrap(),
            make_splits(&ds, 3, 4, 11).unwrap()
        );
        assert_ne!(
            make_splits(&ds, 3, 4, 11).unwrap(),
            make_splits(&ds, 3, 4, 12).unwrap()
        );
    }

    #[test]
    fn fold_sizes_for_116() {
        // 64/52 class split of a 116-row table
        let ds = toy(52, 64);
        let plan = make_splits(&ds, 10, 5, 1).unwrap();
        for r in 0..10 {
            let mut all: Vec<InstanceId> = Vec::new();
            for a in plan.folds_of(r) {
                assert!(a.test.len() == 23 || a.test.len() == 24, "{}", a.test.len());
                all.extend(&a.test);
            }
            all.sort();
            assert_eq!(all, ds.ids().collect::<Vec<_>>());
        }
    }

    #[test]
    fn too_small_class_is_error() {
        let ds = toy(3, 10);
        assert!(matches!(
            make_splits(&ds, 1, 5, 0),
            Err(AscfError::Stratification(_))
        ));
        assert!(matches!(
            make_splits(&ds, 1, 1, 0),
            Err(AscfError::Stratification(_))
        ));
    }

    proptest! {
        #[test]
        fn partition_and_stratification_bound(
            n_neg in 2usize..40, n_pos in 2usize..40, k in 2usize..6, seed in any::<u64>()
        ) {
            prop_assume!(n_neg >= k && n_pos >= k);
            let ds = toy(n_neg, n_pos);
            let n = (n_neg + n_pos) as f64;
            let plan = make_splits(&ds, 2, k, seed).unwrap();
            for r in 0..2 {
                let mut all = Vec::new();
                for a in plan.folds_of(r) {
                    let fold = a.test.len() as f64;
                    let pos = a.test.iter().filter(|&&id| ds.label(id).is_positive()).count() as f64;
                    let neg = fold - pos;
                    prop_assert!((pos - fold * n_pos as f64 / n).abs() <= 1.0);
                    prop_assert!((neg - fold * n_neg as f64 / n).abs() <= 1.0);
                    for id in &a.test {
                        prop_assert!(a.train.binary_search(id).is_err());
                    }
                    prop_assert_eq!(a.train.len() + a.test.len(), ds.len());
                    all.extend(a.test.iter().copied());
                }
                all.sort();
                prop_assert_eq!(all, ds.ids().collect::<Vec<_>>());
            }
        }
    }
}
