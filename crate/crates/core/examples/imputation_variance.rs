//! Score candidates by how much a bootstrap ensemble of `z -> x` regressors
//! disagrees about their classification features.
//!
//!     cargo run --example imputation_variance

use ascf::learners::fit_bootstrap_ensemble;
use ascf::strategies::u_ascf_utility;

fn main() -> ascf::Result<()> {
    // acquired rows: x roughly follows 3z + 1 near z in [0, 2]
    let acquired: Vec<(Vec<f64>, Vec<f64>)> =
        [(0.0, 1.1), (0.5, 2.4), (1.0, 4.2), (1.5, 5.3), (2.0, 7.1)]
            .iter()
            .map(|&(z, x)| (vec![z], vec![x, -x]))
            .collect();
    let ensemble = fit_bootstrap_ensemble(&acquired, 10, 42)?;

    for z in [0.25, 1.0, 2.0, 5.0, 20.0] {
        println!("z = {z:>5}: utility {:.5}", u_ascf_utility(&ensemble, &[z]));
    }
    println!("(far from the acquired z the members disagree most)");
    Ok(())
}
