//! Simulate acquisition campaigns on Wine and print mean learning curves.
//!
//!     cargo run --release --example learning_curves [-- <seed>]

use std::path::PathBuf;

use ascf::dataset::{load_dataset, FeatureManifest, MissingPolicy};
use ascf::harness::{run_benchmark, ProtocolConfig};
use ascf::strategies::{StrategyConfig, StrategyKind};

fn main() -> ascf::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let manifest = FeatureManifest::from_json_file(root.join("manifests/wine.json"))?;
    let ds = load_dataset(root.join("data/wine.csv"), &manifest, MissingPolicy::Reject)?;

    let protocol = ProtocolConfig {
        seed,
        ..Default::default()
    };
    let result = run_benchmark(
        &ds,
        &[StrategyConfig::u_ascf(), StrategyConfig::s_ascf()],
        &protocol,
    )?;
    let report = result.report(protocol.alpha)?;

    println!("step   random   u-ascf   s-ascf");
    for step in (1..=report.steps).filter(|s| *s <= 10 || s % 10 == 0) {
        let mean = |k| report.row(k, step).map_or(f64::NAN, |r| r.mean);
        println!(
            "{step:>4}   {:.4}   {:.4}   {:.4}",
            mean(StrategyKind::Random),
            mean(StrategyKind::UAscf),
            mean(StrategyKind::SAscf)
        );
    }
    Ok(())
}
