//! Load a table under a manifest and build the repeated stratified k-fold plan.
//!
//!     cargo run --example load_and_split

use std::path::PathBuf;

use ascf::dataset::{load_dataset, make_splits, FeatureManifest, MissingPolicy};

fn main() -> ascf::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let manifest = FeatureManifest::from_json_file(root.join("manifests/heart_disease.json"))?;
    let ds = load_dataset(
        root.join("data/heart_disease.csv"),
        &manifest,
        MissingPolicy::Drop,
    )?;
    let (neg, pos) = ds.class_counts();
    println!(
        "{} instances ({}), |z| = {}, |x| = {}",
        ds.len(),
        ds.load_report(),
        ds.m(),
        ds.d()
    );
    println!(
        "positive class `{}`: {pos}, negative `{}`: {neg}",
        ds.positive_label(),
        ds.negative_label()
    );

    let plan = make_splits(&ds, 10, 5, 7)?;
    for a in plan.folds_of(0) {
        let test_pos = a
            .test
            .iter()
            .filter(|&&id| ds.label(id).is_positive())
            .count();
        println!(
            "repeat 0 fold {}: train {}, test {} ({} positive)",
            a.fold,
            a.train.len(),
            a.test.len(),
            test_pos
        );
    }
    Ok(())
}
