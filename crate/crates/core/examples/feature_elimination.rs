//! Rank classification features with recursive elimination before deciding
//! which ones are worth measuring.
//!
//!     cargo run --release --example feature_elimination

use std::path::PathBuf;

use ascf::dataset::{load_dataset, FeatureManifest, MissingPolicy};
use ascf::learners::rfe_select;

fn main() -> ascf::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let manifest = FeatureManifest::from_json_file(root.join("manifests/heart_disease.json"))?;
    let ds = load_dataset(
        root.join("data/heart_disease.csv"),
        &manifest,
        MissingPolicy::Drop,
    )?;

    let rfe = rfe_select(&ds, 5, 3, 1)?;
    let names = ds.classification_names();
    println!("eliminated first -> last:");
    for &c in &rfe.ranking {
        println!("  {}", names[c]);
    }
    println!("cross-validated F1 by feature count:");
    for (count, f1) in &rfe.cv_scores {
        println!("  {count:>2}: {f1:.4}");
    }
    let kept: Vec<&str> = rfe.selected().iter().map(|&c| names[c].as_str()).collect();
    println!("keeping {}: {}", rfe.optimal_count, kept.join(", "));

    let reduced = ds.with_classification_subset(&rfe.selected())?;
    println!("reduced dataset has |x| = {}", reduced.d());
    Ok(())
}
