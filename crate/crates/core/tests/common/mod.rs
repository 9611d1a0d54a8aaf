#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ascf::dataset::{load_dataset, Dataset, FeatureManifest, MissingPolicy};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data(name: &str) -> PathBuf {
    crate_dir().join("data").join(name)
}

pub fn manifest_path(name: &str) -> PathBuf {
    crate_dir().join("manifests").join(name)
}

pub fn load(data_file: &str, manifest_file: &str) -> Dataset {
    let m = FeatureManifest::from_json_file(manifest_path(manifest_file)).unwrap();
    load_dataset(data(data_file), &m, MissingPolicy::Drop).unwrap()
}

/// Breast Cancer Coimbra is not bundled; it is used when placed in `data/`
/// or pointed to by `ASCF_BCC_CSV`.
pub fn breast_cancer_coimbra() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("ASCF_BCC_CSV") {
        let p = PathBuf::from(p);
        if p.is_file() {
            return Some(p);
        }
    }
    let p = data("breast_cancer_coimbra.csv");
    p.is_file().then_some(p)
}

pub fn ascf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ascf"))
        .args(args)
        .output()
        .unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
