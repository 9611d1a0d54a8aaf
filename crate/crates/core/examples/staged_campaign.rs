//! A live campaign driven through the session API: suggest, measure, record,
//! with one override along the way.
//!
//!     cargo run --example staged_campaign

use ascf::cli::session::{SessionState, SuggestOutcome};
use ascf::dataset::{CandidatePool, CandidateRecord, FeatureManifest, Label};
use ascf::strategies::StrategyConfig;

// stands in for the expensive measurement
fn measure(z: &[f64]) -> Vec<f64> {
    vec![
        70.0 + 0.9 * z[0] + 1.5 * z[1],
        2.0 + 0.3 * z[1] - 0.02 * z[0],
    ]
}

fn main() -> ascf::Result<()> {
    let people = [
        ("p01", 34.0, 22.1, "1"),
        ("p02", 71.0, 31.4, "2"),
        ("p03", 45.0, 27.9, "2"),
        ("p04", 29.0, 20.3, "1"),
        ("p05", 66.0, 24.8, "1"),
        ("p06", 58.0, 33.0, "2"),
        ("p07", 40.0, 26.1, "1"),
        ("p08", 75.0, 28.7, "2"),
    ];
    let records = people
        .iter()
        .map(|&(id, age, bmi, y)| CandidateRecord {
            name: id.into(),
            z: vec![age, bmi],
            y: Some(if y == "2" {
                Label::Positive
            } else {
                Label::Negative
            }),
        })
        .collect();
    let pool = CandidatePool {
        records,
        positive_label: Some("2".into()),
        negative_label: Some("1".into()),
    };
    let manifest = FeatureManifest::new(
        &["Age", "BMI"],
        &["Glucose", "Insulin"],
        "Classification",
        Some("2"),
    );
    let mut session = SessionState::new(pool, manifest, StrategyConfig::s_ascf(), 9)?;

    let mut round = 0;
    loop {
        let ranked = match session.suggest(3)? {
            SuggestOutcome::Exhausted => break,
            SuggestOutcome::Ranked { ranked, source } => {
                println!("round {round}: {source:?} {:?}", ranked);
                ranked
            }
        };
        // on round 3 the study team picks the runner-up instead
        let pick = if round == 3 && ranked.len() > 1 {
            &ranked[1].0
        } else {
            &ranked[0].0
        };
        let z = session
            .candidates
            .iter()
            .find(|c| &c.name == pick)
            .unwrap()
            .z
            .clone();
        let outcome = session.record(pick, measure(&z), None)?;
        println!("  recorded {pick}: {outcome:?}");
        round += 1;
    }
    let s = session.status();
    println!(
        "done: {} acquired, {} honored, {} overridden",
        s.acquired, s.honored, s.overridden
    );
    Ok(())
}
