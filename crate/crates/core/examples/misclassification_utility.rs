//! The supervised utility as a function of misclassification probability `p`
//! for a few acquired-set sizes.
//!
//!     cargo run --example misclassification_utility

use ascf::strategies::{asymmetry_b, s_ascf_utility};

fn main() -> ascf::Result<()> {
    let ps = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    print!("{:>6}", "|A|");
    for p in ps {
        print!("{:>9}", format!("p={p}"));
    }
    println!();
    for n in [1, 2, 5, 20, 1000] {
        let b = asymmetry_b(n)?;
        print!("{n:>6}");
        for p in ps {
            print!("{:>9.4}", s_ascf_utility(p, b)?);
        }
        println!();
    }
    Ok(())
}
