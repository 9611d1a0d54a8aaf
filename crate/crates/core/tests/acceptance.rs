//! Acceptance checks. Prints one verdict line per criterion and exits
//! non-zero if any check fails. UNVERIFIED marks checks whose input data is
//! not available in this checkout.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use ascf::cli::session::SessionState;
use ascf::dataset::{CandidatePool, CandidateRecord, Dataset, FeatureManifest, Label};
use ascf::harness::{
    run_benchmark, wilcoxon_signed_rank, Alternative, BenchmarkResult, ProtocolConfig,
};
use ascf::learners::{fit_linear, penalized_objective, BootstrapEnsemble, LinearModel};
use ascf::strategies::{asymmetry_b, s_ascf_utility, u_ascf_utility, StrategyConfig, StrategyKind};
use common::{ascf, data, manifest_path, path_str};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Unverified,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// formula oracles

fn brute_force_u(ensemble: &[LinearModel], z: &[f64]) -> f64 {
    let preds: Vec<Vec<f64>> = ensemble
        .iter()
        .map(|m| {
            (0..m.intercepts.len())
                .map(|d| {
                    let mut acc = m.intercepts[d];
                    for j in 0..z.len() {
                        acc += m.weights[d][j] * z[j];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let b = preds.len() as f64;
    let d = preds[0].len();
    // population variance as half the mean squared pairwise difference
    let mut total = 0.0;
    for k in 0..d {
        let mut s = 0.0;
        for p in &preds {
            for q in &preds {
                s += (p[k] - q[k]).powi(2);
            }
        }
        total += s / (2.0 * b * b);
    }
    total / d as f64
}

fn formula_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_u = 0.0f64;
    for _ in 0..1000 {
        let b = rng.random_range(2..16);
        let m = rng.random_range(1..6);
        let d = rng.random_range(1..7);
        let members: Vec<LinearModel> = (0..b)
            .map(|_| LinearModel {
                weights: (0..d)
                    .map(|_| (0..m).map(|_| rng.random_range(-3.0..3.0)).collect())
                    .collect(),
                intercepts: (0..d).map(|_| rng.random_range(-5.0..5.0)).collect(),
                rank: m,
            })
            .collect();
        let z: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ens = BootstrapEnsemble {
            members: members.clone(),
            member_seeds: vec![0; b],
            degenerate: false,
        };
        let got = u_ascf_utility(&ens, &z);
        let want = brute_force_u(&members, &z);
        worst_u = worst_u.max((got - want).abs() / want.abs().max(1.0));
    }

    let mut worst_s = 0.0f64;
    for _ in 0..1000 {
        let p: f64 = rng.random_range(0.0..=1.0);
        let n = rng.random_range(1..500);
        let b = 0.5 + 1.0 / (2.0 * n as f64);
        let direct = p * (1.0 - p) / ((1.0 - 2.0 * b) * p + b * b);
        let got = s_ascf_utility(p, asymmetry_b(n).unwrap()).unwrap();
        worst_s = worst_s.max((got - direct).abs());
    }
    let mut closed_form = 0.0f64;
    let mut argmax = (0.0, f64::NEG_INFINITY);
    let mut reduction = 0.0f64;
    for k in 0..=1000 {
        let p = k as f64 / 1000.0;
        let u = s_ascf_utility(p, 0.5).unwrap();
        closed_form = closed_form.max((u - 4.0 * p * (1.0 - p)).abs());
        if u > argmax.1 {
            argmax = (p, u);
        }
        reduction = reduction.max((s_ascf_utility(p, 1.0).unwrap() - p).abs());
    }
    let b49 = asymmetry_b(49).unwrap();
    let ok = worst_u <= 1e-12
        && worst_s <= 1e-12
        && closed_form <= 1e-12
        && argmax.0 == 0.5
        && reduction <= 1e-12
        && b49 == 0.5 + 1.0 / 98.0;
    check(
        ok,
        format!(
            "u-ascf max rel err {worst_u:.1e} over 1000 ensembles; s-ascf max err {worst_s:.1e}; b=0.5 closed-form err {closed_form:.1e}, argmax p={}; b=1 err {reduction:.1e}; b(49)={b49}",
            argmax.0
        ),
    )
}

// ---------------------------------------------------------------------------
// numeric core

fn pinv_solution(rows: &[(Vec<f64>, Vec<f64>)]) -> (DMatrix<f64>, Vec<f64>) {
    let n = rows.len();
    let m = rows[0].0.len();
    let d = rows[0].1.len();
    let z = DMatrix::from_fn(n, m, |i, j| rows[i].0[j]);
    let x = DMatrix::from_fn(n, d, |i, j| rows[i].1[j]);
    let zm = z.row_mean();
    let xm = x.row_mean();
    let zc = DMatrix::from_fn(n, m, |i, j| z[(i, j)] - zm[j]);
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - xm[j]);
    let gram = zc.transpose() * &zc;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let inv = eig.eigenvalues.map(|l| {
        if l > 1e-12 * lmax.max(1e-300) {
            1.0 / l
        } else {
            0.0
        }
    });
    let w = &eig.eigenvectors
        * DMatrix::from_diagonal(&inv)
        * eig.eigenvectors.transpose()
        * zc.transpose()
        * xc;
    let b = (0..d)
        .map(|c| xm[c] - (0..m).map(|j| w[(j, c)] * zm[j]).sum::<f64>())
        .collect();
    (w, b)
}

fn numeric_core() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut worst_grad = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..30);
        let d = rng.random_range(1..7);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let targets: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
            .collect();
        let params: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, grad) = penalized_objective(&params, &rows, &targets, 1.0);
        let h = 1e-5;
        let fd: Vec<f64> = (0..=d)
            .map(|k| {
                let mut up = params.clone();
                let mut dn = params.clone();
                up[k] += h;
                dn[k] -= h;
                (penalized_objective(&up, &rows, &targets, 1.0).0
                    - penalized_objective(&dn, &rows, &targets, 1.0).0)
                    / (2.0 * h)
            })
            .collect();
        let diff = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        worst_grad = worst_grad.max(diff / scale);
    }

    let mut worst_ols = 0.0f64;
    let mut deficient = 0;
    for _ in 0..300 {
        let m = rng.random_range(1..6);
        let d = rng.random_range(1..4);
        let n = rng.random_range(1..25);
        let rank = rng.random_range(1..=m);
        let basis: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .map(|_| {
                let latent: Vec<f64> = (0..rank).map(|_| rng.random_range(-2.0..2.0)).collect();
                let z = basis
                    .iter()
                    .map(|b| b.iter().zip(&latent).map(|(a, l)| a * l).sum::<f64>() + 0.5)
                    .collect();
                let x = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                (z, x)
            })
            .collect();
        let model = fit_linear(&rows).unwrap();
        if model.rank < m {
            deficient += 1;
        }
        let (w, b) = pinv_solution(&rows);
        for c in 0..d {
            for j in 0..m {
                worst_ols = worst_ols.max((model.weights[c][j] - w[(j, c)]).abs());
            }
            worst_ols = worst_ols.max((model.intercepts[c] - b[c]).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_grad < 1e-4 && worst_ols < 1e-8 && elapsed < Duration::from_secs(60),
        format!(
            "gradient max rel err {worst_grad:.1e} over 100 problems; OLS max abs diff {worst_ols:.1e} over 300 problems ({deficient} rank-deficient); {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// Wilcoxon

fn enumerated_p(diffs: &[f64], alt: Alternative) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    let mags: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = mags
        .iter()
        .map(|a| {
            let below = mags.iter().filter(|b| *b < a).count() as f64;
            let equal = mags.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = nz.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        let extreme = match alt {
            Alternative::Greater => w >= observed,
            Alternative::Less => w <= observed,
        };
        if extreme {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

fn wilcoxon() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    let mut mismatches = 0;
    let mut with_ties = 0;
    let mut with_zeros = 0;
    for n in 1..=10 {
        for _ in 0..300 {
            // small integer grid so ties and zeros are common
            let diffs: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-4i32..=4) as f64 * 0.25)
                .collect();
            if diffs.contains(&0.0) {
                with_zeros += 1;
            }
            let mut mags: Vec<f64> = diffs
                .iter()
                .filter(|d| **d != 0.0)
                .map(|d| d.abs())
                .collect();
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if mags.windows(2).any(|w| w[0] == w[1]) {
                with_ties += 1;
            }
            for alt in [Alternative::Greater, Alternative::Less] {
                cases += 1;
                if wilcoxon_signed_rank(&diffs, alt).unwrap() != enumerated_p(&diffs, alt) {
                    mismatches += 1;
                }
            }
        }
    }
    let zeros_ok = (1..=10).all(|n| {
        let z = vec![0.0; n];
        wilcoxon_signed_rank(&z, Alternative::Greater).unwrap() == 1.0
            && wilcoxon_signed_rank(&z, Alternative::Less).unwrap() == 1.0
    });
    check(
        mismatches == 0 && zeros_ok,
        format!("{cases} one-sided tests with n<=10 ({with_ties} inputs with ties, {with_zeros} with zeros), {mismatches} mismatches vs enumeration; all-zero p=1: {zeros_ok}"),
    )
}

// ---------------------------------------------------------------------------
// protocol integrity

fn integrity(dataset: &Dataset, result: &BenchmarkResult) -> Result<usize, String> {
    let mut runs = 0;
    for a in &result.plan.assignments {
        let train: std::collections::BTreeSet<&str> =
            a.train.iter().map(|&id| dataset.name(id)).collect();
        let test: std::collections::BTreeSet<&str> =
            a.test.iter().map(|&id| dataset.name(id)).collect();
        if !train.is_disjoint(&test) {
            return Err(format!(
                "run {:?}: train and test overlap",
                (a.repeat, a.fold)
            ));
        }
        let per: Vec<_> = result
            .curves
            .values()
            .map(|cs| cs.iter().find(|c| c.run_id() == (a.repeat, a.fold)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("run {:?} missing for some strategy", (a.repeat, a.fold)))?;
        let final_bits = per[0].f1_per_step.last().map(|f| f.to_bits());
        for c in &per {
            let acquired: std::collections::BTreeSet<&str> =
                c.acquisition_order.iter().map(String::as_str).collect();
            if acquired.len() != c.acquisition_order.len() || acquired != train {
                return Err(format!(
                    "{} run {:?}: acquired set differs from the training pool",
                    c.strategy,
                    c.run_id()
                ));
            }
            if c.len() != train.len() {
                return Err(format!(
                    "{} run {:?}: curve length {} for pool {}",
                    c.strategy,
                    c.run_id(),
                    c.len(),
                    train.len()
                ));
            }
            if c.acquisition_order[..c.cold_start_size]
                != per[0].acquisition_order[..per[0].cold_start_size]
            {
                return Err(format!(
                    "{} run {:?}: cold start differs from random",
                    c.strategy,
                    c.run_id()
                ));
            }
            if c.f1_per_step.last().map(|f| f.to_bits()) != final_bits
                || c.final_classifier != per[0].final_classifier
            {
                return Err(format!(
                    "{} run {:?}: final step differs",
                    c.strategy,
                    c.run_id()
                ));
            }
        }
        runs += 1;
    }
    Ok(runs)
}

fn all_strategies() -> [StrategyConfig; 2] {
    [StrategyConfig::u_ascf(), StrategyConfig::s_ascf()]
}

fn timed_benchmark(dataset: &Dataset, seed: u64) -> (BenchmarkResult, Duration) {
    let protocol = ProtocolConfig {
        seed,
        ..Default::default()
    };
    let start = Instant::now();
    let r = run_benchmark(dataset, &all_strategies(), &protocol).unwrap();
    (r, start.elapsed())
}

fn protocol_on(name: &str, dataset: &Dataset, result: &BenchmarkResult) -> Outcome {
    match integrity(dataset, result) {
        Ok(runs) => check(
            runs == 50,
            format!("{name}: {runs} runs x 3 strategies, final-step F1 bitwise identical, acquired set = training pool, test fold never acquired, cold starts shared"),
        ),
        Err(e) => check(false, format!("{name}: {e}")),
    }
}

// ---------------------------------------------------------------------------
// determinism

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (d, m) = (data("wine.csv"), manifest_path("wine.json"));
    let run = |out: &Path, threads: &str| {
        let o = ascf(&[
            "simulate",
            "--data",
            path_str(&d),
            "--manifest",
            path_str(&m),
            "--seed",
            "42",
            "--threads",
            threads,
            "--out",
            path_str(out),
        ]);
        o.status.success()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if !(run(&a, "1") && run(&b, "4")) {
        return check(false, "simulate failed");
    }
    let same = |f: &str| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
    let bytes = std::fs::metadata(a.join("curves.csv")).unwrap().len();
    check(
        same("curves.csv") && same("report.csv"),
        format!("wine, 10x5, seed 42, 1 vs 4 threads: curves.csv ({bytes} bytes) identical: {}, report.csv identical: {}", same("curves.csv"), same("report.csv")),
    )
}

// ---------------------------------------------------------------------------
// trends

fn fraction_at_least_random(
    results: &[BenchmarkResult],
    kind: StrategyKind,
    last_step: Option<usize>,
) -> (f64, Vec<f64>) {
    // seed-averaged mean curves
    let mut sums: BTreeMap<StrategyKind, Vec<f64>> = BTreeMap::new();
    let mut per_seed = Vec::new();
    for r in results {
        let rep = r.report(0.1).unwrap();
        let hi = last_step.unwrap_or(rep.steps).min(rep.steps);
        per_seed.push(rep.fraction_at_least_random(kind, 1, hi).unwrap());
        for k in [StrategyKind::Random, kind] {
            let s = sums.entry(k).or_insert_with(|| vec![0.0; hi]);
            for row in rep.rows_for(k).filter(|row| row.step <= hi) {
                s[row.step - 1] += row.mean;
            }
        }
    }
    let (base, ours) = (&sums[&StrategyKind::Random], &sums[&kind]);
    let hits = ours.iter().zip(base).filter(|(o, b)| o >= b).count();
    (hits as f64 / base.len() as f64, per_seed)
}

fn trend(
    name: &str,
    results: &[BenchmarkResult],
    times: &[Duration],
    kind: StrategyKind,
    last_step: Option<usize>,
) -> Outcome {
    let (frac, per_seed) = fraction_at_least_random(results, kind, last_step);
    let slowest = times.iter().max().unwrap();
    let range = last_step.map_or("all steps".to_string(), |s| format!("steps 1-{s}"));
    let seeds: Vec<String> = per_seed
        .iter()
        .map(|f| format!("{:.0}%", 100.0 * f))
        .collect();
    check(
        frac >= 0.6 && *slowest < Duration::from_secs(15 * 60),
        format!(
            "{name}: {kind} mean F1 >= random at {:.0}% of {range} (averaged over {} seeds; per seed {}); slowest benchmark {:.1}s",
            100.0 * frac,
            results.len(),
            seeds.join(", "),
            slowest.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// session robustness

fn big_session(path: &Path) -> SessionState {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records = (0..20_000)
        .map(|i| CandidateRecord {
            name: format!("c{i:05}"),
            z: vec![rng.random_range(20.0..80.0), rng.random_range(18.0..40.0)],
            y: Some(if i % 2 == 0 {
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
    let state = SessionState::new(pool, manifest, StrategyConfig::random(), 1).unwrap();
    state.save(path).unwrap();
    state
}

fn session_robustness() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    big_session(&path);
    let record = |id: &str| {
        Command::new(env!("CARGO_BIN_EXE_ascf"))
            .args([
                "session",
                "record",
                "--state",
                path_str(&path),
                "--id",
                id,
                "--x",
                "1.5,-2",
            ])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap()
    };
    let start = Instant::now();
    let status = record("c19999").wait().unwrap();
    let full = start.elapsed();
    if !status.success() {
        return check(false, "uninterrupted record failed");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut interrupted, mut kept_pre, mut kept_post) = (0, 0, 0);
    let mut next = 0;
    for _ in 0..100 {
        let pre = SessionState::load(&path).unwrap();
        let id = format!("c{next:05}");
        let mut child = record(&id);
        std::thread::sleep(full.mul_f64(rng.random_range(0.4..1.6)));
        if child.try_wait().unwrap().is_none() {
            interrupted += 1;
        }
        let _ = child.kill();
        let _ = child.wait();
        let now = match SessionState::load(&path) {
            Ok(s) => s,
            Err(e) => return check(false, format!("state unreadable after kill: {e}")),
        };
        if now == pre {
            kept_pre += 1;
            continue;
        }
        let mut expect = pre.clone();
        let appended = now.acquired.last().cloned();
        match appended {
            Some(r)
                if r.id == id
                    && r.x == [1.5, -2.0]
                    && now.acquired.len() == pre.acquired.len() + 1 =>
            {
                expect.acquired.push(r);
            }
            _ => {
                return check(
                    false,
                    format!("state after kill is neither pre- nor post-record (record of {id})"),
                )
            }
        }
        if now != expect {
            return check(
                false,
                format!("state after kill is neither pre- nor post-record (record of {id})"),
            );
        }
        kept_post += 1;
        next += 1;
    }
    check(
        kept_pre + kept_post == 100 && interrupted > 0,
        format!(
            "100 kills ({interrupted} while the process was running; uninterrupted record takes {:.0} ms): state parsed every time, {kept_pre} pre-record, {kept_post} post-record",
            full.as_secs_f64() * 1e3
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let mut lines: Vec<(String, Outcome)> = Vec::new();
    let mut report = |name: &str, o: Outcome| {
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unverified => "UNVERIFIED",
        };
        println!("{tag:<10} {name}: {}", o.detail);
        lines.push((name.to_string(), o));
    };

    report("formula oracles", formula_oracles());
    report("numeric core", numeric_core());
    report("wilcoxon correctness", wilcoxon());

    match common::breast_cancer_coimbra() {
        Some(p) => {
            let m = FeatureManifest::from_json_file(manifest_path("breast_cancer_coimbra.json")).unwrap();
            let ds = ascf::dataset::load_dataset(&p, &m, Default::default()).unwrap();
            let (r, _) = timed_benchmark(&ds, 0);
            report("protocol integrity (breast cancer coimbra)", protocol_on("breast cancer coimbra", &ds, &r));
        }
        None => report(
            "protocol integrity (breast cancer coimbra)",
            Outcome {
                verdict: Verdict::Unverified,
                detail: "dataset not bundled; place it at crates/core/data/breast_cancer_coimbra.csv or set ASCF_BCC_CSV".into(),
            },
        ),
    }

    let wine = common::load("wine.csv", "wine.json");
    let heart = common::load("heart_disease.csv", "heart_disease.json");
    let seeds = [0u64, 1, 2];
    let (wine_runs, wine_times): (Vec<_>, Vec<_>) =
        seeds.iter().map(|&s| timed_benchmark(&wine, s)).unzip();
    let (heart_runs, heart_times): (Vec<_>, Vec<_>) =
        seeds.iter().map(|&s| timed_benchmark(&heart, s)).unzip();

    report(
        "protocol integrity (wine)",
        protocol_on("wine", &wine, &wine_runs[0]),
    );
    report(
        "protocol integrity (heart disease)",
        protocol_on("heart disease", &heart, &heart_runs[0]),
    );
    report("determinism", determinism());
    report(
        "trend (wine, s-ascf, first 25 steps)",
        trend(
            "wine",
            &wine_runs,
            &wine_times,
            StrategyKind::SAscf,
            Some(25),
        ),
    );
    report(
        "trend (heart disease, u-ascf, all steps)",
        trend(
            "heart disease",
            &heart_runs,
            &heart_times,
            StrategyKind::UAscf,
            None,
        ),
    );
    report("session robustness", session_robustness());

    let failed = lines
        .iter()
        .filter(|(_, o)| o.verdict == Verdict::Fail)
        .count();
    println!("{} checks, {failed} failed", lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
