//! Paired one-sided Wilcoxon signed-rank tests on F1 differences.
//!
//!     cargo run --example significance

use ascf::harness::{wilcoxon_signed_rank, Alternative};

fn main() -> ascf::Result<()> {
    let samples: [(&str, Vec<f64>); 4] = [
        (
            "five positive differences",
            vec![0.01, 0.02, 0.03, 0.04, 0.05],
        ),
        (
            "mixed, with ties and zeros",
            vec![0.05, -0.05, 0.1, 0.0, 0.1, -0.02, 0.0],
        ),
        ("all zero", vec![0.0; 8]),
        (
            "50 runs, slight gain",
            (0..50)
                .map(|i| 0.01 + 0.02 * ((i * 37 % 11) as f64 - 5.0) / 5.0)
                .collect(),
        ),
    ];
    for (name, d) in &samples {
        let g = wilcoxon_signed_rank(d, Alternative::Greater)?;
        let l = wilcoxon_signed_rank(d, Alternative::Less)?;
        println!("{name:<28} p(greater) = {g:.6}  p(less) = {l:.6}");
    }
    Ok(())
}
