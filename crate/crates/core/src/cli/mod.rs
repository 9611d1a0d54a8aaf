//! Command-line front end used by the `ascf` binary.
//!
//! Exit codes: 0 success, 1 data or runtime error, 2 usage or manifest error.

pub mod session;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{load_candidates, load_dataset, FeatureManifest, MissingPolicy};
use crate::error::{AscfError, Result};
use crate::harness::io::{self, RunMetadata};
use crate::harness::{
    aggregate_and_compare, run_benchmark, ColdStart, ComparisonReport, Flag, ProtocolConfig,
};
use crate::strategies::{PMode, StrategyConfig, StrategyKind, TieBreak, VarianceMode};
use session::{SessionLock, SessionState, SuggestOutcome, SuggestionSource};

#[derive(Debug, Parser)]
#[command(
    name = "ascf",
    version,
    about = "Choose whose expensive features to measure next"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate acquisition campaigns on a labelled table and compare strategies with random.
    Simulate(SimulateArgs),
    /// Re-aggregate curves written by `simulate`, optionally merging several outputs.
    Report(ReportArgs),
    /// Drive a live campaign stored in a state file.
    #[command(subcommand)]
    Session(SessionCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PModeArg {
    TrueLabel,
    PredictedClass,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarianceModeArg {
    Raw,
    Standardized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieBreakArg {
    LowestId,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MissingArg {
    Reject,
    Drop,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    /// Ensemble size for u-ascf.
    #[arg(long, default_value_t = 10)]
    pub bootstrap: usize,
    #[arg(long, value_enum, default_value_t = PModeArg::TrueLabel)]
    pub p_mode: PModeArg,
    #[arg(long, value_enum, default_value_t = VarianceModeArg::Raw)]
    pub variance_mode: VarianceModeArg,
    #[arg(long, value_enum, default_value_t = TieBreakArg::LowestId)]
    pub tie_break: TieBreakArg,
}

impl StrategyArgs {
    pub fn config(&self, kind: StrategyKind) -> StrategyConfig {
        StrategyConfig {
            bootstrap: self.bootstrap,
            p_mode: match self.p_mode {
                PModeArg::TrueLabel => PMode::TrueLabel,
                PModeArg::PredictedClass => PMode::PredictedClass,
            },
            variance_mode: match self.variance_mode {
                VarianceModeArg::Raw => VarianceMode::Raw,
                VarianceModeArg::Standardized => VarianceMode::Standardized,
            },
            tie_break: match self.tie_break {
                TieBreakArg::LowestId => TieBreak::LowestId,
                TieBreakArg::SeededRandom => TieBreak::SeededRandom,
            },
            ..StrategyConfig::new(kind)
        }
    }
}

fn parse_kind(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse().map_err(|e: AscfError| e.to_string())
}

fn parse_cold_start(s: &str) -> std::result::Result<ColdStart, String> {
    if s == "pair" {
        return Ok(ColdStart::StratifiedPair);
    }
    match s.strip_prefix("random:").map(str::parse::<usize>) {
        Some(Ok(n)) if n > 0 => Ok(ColdStart::RandomN(n)),
        _ => Err(format!("expected `pair` or `random:N`, got `{s}`")),
    }
}

fn parse_steps(s: &str) -> std::result::Result<(usize, usize), String> {
    let bad = || format!("expected `a:b` with 1 <= a <= b, got `{s}`");
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: usize = if a.is_empty() {
        1
    } else {
        a.parse().map_err(|_| bad())?
    };
    let b: usize = if b.is_empty() {
        usize::MAX
    } else {
        b.parse().map_err(|_| bad())?
    };
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Labelled CSV table.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON manifest assigning column roles.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Strategies to compare with random (repeatable). Defaults to u-ascf and s-ascf.
    #[arg(long = "strategy", value_parser = parse_kind)]
    pub strategies: Vec<StrategyKind>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `pair` (one per class) or `random:N`.
    #[arg(long, value_parser = parse_cold_start, default_value = "pair")]
    pub cold_start: ColdStart,
    /// Stop each run after this many acquisitions.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// What to do with rows that have empty or `?` cells.
    #[arg(long, value_enum, default_value_t = MissingArg::Drop)]
    pub missing: MissingArg,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for curves.csv, report.csv and metadata.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Only print steps in `a:b` (inclusive).
    #[arg(long, value_parser = parse_steps)]
    pub steps: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of `simulate` (repeatable to merge strategies run separately).
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Significance level; defaults to the one used at simulation time.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Restrict to steps `a:b` (inclusive).
    #[arg(long, value_parser = parse_steps)]
    pub steps: Option<(usize, usize)>,
    /// Directory to write report.csv into.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Create a session from a candidates CSV (selection columns, optional labels).
    Init {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_kind, default_value = "s-ascf")]
        strategy: StrategyKind,
        #[command(flatten)]
        options: StrategyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace an existing state file.
        #[arg(long)]
        force: bool,
    },
    /// Print the next candidate to measure and the runners-up.
    Suggest {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Record a measurement, whether or not it was the suggested one.
    Record {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        id: String,
        /// Classification feature values, comma separated, in manifest order.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        x: Vec<f64>,
        /// Class label of the instance, if not given in the candidates file.
        #[arg(long)]
        label: Option<String>,
    },
    /// Show acquisition counts and whether the last suggestion was followed.
    Status {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write the acquired rows as a CSV readable with the session's manifest.
    Export {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &AscfError) -> i32 {
    match e {
        AscfError::Manifest(_) => 2,
        _ => 1,
    }
}

fn load_manifest(path: &Path) -> Result<FeatureManifest> {
    FeatureManifest::from_json_file(path).map_err(|e| match e {
        AscfError::Manifest(m) => AscfError::Manifest(format!("{}: {m}", path.display())),
        other => AscfError::Manifest(format!("{}: {other}", path.display())),
    })
}

fn dispatch(cmd: Command, out: &mut dyn std::io::Write) -> Result<()> {
    let text = match cmd {
        Command::Simulate(a) => simulate(a)?,
        Command::Report(a) => report(a)?,
        Command::Session(c) => session(c)?,
    };
    out.write_all(text.as_bytes())
        .map_err(|e| AscfError::io("<stdout>", e))
}

fn simulate(a: SimulateArgs) -> Result<String> {
    let manifest = load_manifest(&a.manifest)?;
    let policy = match a.missing {
        MissingArg::Reject => MissingPolicy::Reject,
        MissingArg::Drop => MissingPolicy::Drop,
    };
    let raw = std::fs::read(&a.data).map_err(|e| AscfError::io(&a.data, e))?;
    let dataset = load_dataset(&a.data, &manifest, policy)?;
    let kinds = if a.strategies.is_empty() {
        vec![StrategyKind::UAscf, StrategyKind::SAscf]
    } else {
        a.strategies.clone()
    };
    let configs: Vec<StrategyConfig> = kinds.iter().map(|&k| a.strategy.config(k)).collect();
    let protocol = ProtocolConfig {
        repeats: a.repeats,
        k: a.k,
        alpha: a.alpha,
        seed: a.seed,
        cold_start: a.cold_start,
        eval_every: 1,
        max_steps: a.max_steps,
    };
    let run = || run_benchmark(&dataset, &configs, &protocol);
    let result = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AscfError::Contract(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let report = result.report(protocol.alpha)?;
    let file = a
        .data
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let meta = RunMetadata::new(&dataset, &file, &raw, &protocol, &result);
    io::write_outputs(&a.out, &result.curves, &report, &meta)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} rows used ({}), {} positive / {} negative",
        file,
        dataset.len(),
        dataset.load_report(),
        meta.data.positives,
        meta.data.negatives
    );
    let _ = writeln!(
        s,
        "{} runs x {} strategies, {} steps per curve",
        result.plan.assignments.len(),
        result.strategies.len(),
        report.steps
    );
    s.push_str(&format_report(&report, a.steps));
    let _ = writeln!(s, "wrote {}", a.out.display());
    Ok(s)
}

fn report(a: ReportArgs) -> Result<String> {
    let parts = a
        .inputs
        .iter()
        .map(|dir| {
            let meta = io::read_metadata(&dir.join(io::METADATA_FILE))?;
            let curves = io::read_curves_csv(&dir.join(io::CURVES_FILE))?;
            Ok((meta, curves))
        })
        .collect::<Result<Vec<_>>>()?;
    let (meta, curves) = io::merge_outputs(parts)?;
    let alpha = a.alpha.unwrap_or(meta.protocol.alpha);
    let mut report = aggregate_and_compare(&curves, alpha)?;
    if let Some((lo, hi)) = a.steps {
        report = report.restrict_steps(lo, hi);
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| AscfError::io(dir, e))?;
        io::write_report_csv(&dir.join(io::REPORT_FILE), &report)?;
    }
    Ok(format_report(&report, None))
}

/// Per-strategy summary followed by the step table.
pub fn format_report(report: &ComparisonReport, steps: Option<(usize, usize)>) -> String {
    let (lo, hi) = steps.unwrap_or((1, usize::MAX));
    let mut s = String::new();
    let mut counts: BTreeMap<StrategyKind, (usize, usize, usize)> = BTreeMap::new();
    for r in report.rows.iter().filter(|r| (lo..=hi).contains(&r.step)) {
        let e = counts.entry(r.strategy).or_default();
        match r.flag {
            Flag::Better => e.0 += 1,
            Flag::Worse => e.1 += 1,
            Flag::None => e.2 += 1,
        }
    }
    for (kind, (b, w, n)) in &counts {
        if *kind == StrategyKind::Random {
            continue;
        }
        let frac = report
            .fraction_at_least_random(*kind, lo, hi)
            .map_or("n/a".to_string(), |f| format!("{:.0}%", 100.0 * f));
        let _ = writeln!(
            s,
            "{kind}: better at {b} steps, worse at {w}, no difference at {n}; mean >= random at {frac} of steps (alpha {})",
            report.alpha
        );
    }
    let _ = writeln!(
        s,
        "{:>8} {:>5} {:>7} {:>7} {:>7} {:>9} {:>9}  flag",
        "strategy", "step", "mean", "p10", "p90", "p_greater", "p_less"
    );
    for r in report.rows.iter().filter(|r| (lo..=hi).contains(&r.step)) {
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>9.4}  {}",
            r.strategy.name(),
            r.step,
            r.mean,
            r.p10,
            r.p90,
            r.p_greater,
            r.p_less,
            r.flag
        );
    }
    s
}

fn with_session<T>(
    path: &Path,
    f: impl FnOnce(&mut SessionState) -> Result<(T, bool)>,
) -> Result<T> {
    let _lock = SessionLock::acquire(path)?;
    let mut state = SessionState::load(path)?;
    let (value, changed) = f(&mut state)?;
    if changed {
        state.save(path)?;
    }
    Ok(value)
}

fn session(cmd: SessionCommand) -> Result<String> {
    let mut s = String::new();
    match cmd {
        SessionCommand::Init {
            state,
            candidates,
            manifest,
            strategy,
            options,
            seed,
            force,
        } => {
            let manifest = load_manifest(&manifest)?;
            let _lock = SessionLock::acquire(&state)?;
            if state.exists() && !force {
                return Err(AscfError::Contract(format!(
                    "{} already exists; pass --force to replace it",
                    state.display()
                )));
            }
            let pool = load_candidates(&candidates, &manifest)?;
            let n = pool.records.len();
            let st = SessionState::new(pool, manifest, options.config(strategy), seed)?;
            st.save(&state)?;
            let _ = writeln!(
                s,
                "session with {n} candidates, strategy {strategy}, written to {}",
                state.display()
            );
        }
        SessionCommand::Suggest { state, top } => {
            let outcome = with_session(&state, |st| {
                let o = st.suggest(top)?;
                let changed = o != SuggestOutcome::Exhausted;
                Ok((o, changed))
            })?;
            match outcome {
                SuggestOutcome::Exhausted => {
                    let _ = writeln!(s, "exhausted: no candidates remain");
                }
                SuggestOutcome::Ranked { ranked, source } => {
                    if source == SuggestionSource::RandomFallback {
                        let _ = writeln!(
                            s,
                            "notice: not enough acquisitions for the strategy's models yet; suggesting at random"
                        );
                    }
                    for (i, (id, u)) in ranked.iter().enumerate() {
                        let tag = if i == 0 { "suggest" } else { "  next " };
                        match u {
                            Some(u) => {
                                let _ = writeln!(s, "{tag} {id}\tutility {u:.6}");
                            }
                            None => {
                                let _ = writeln!(s, "{tag} {id}");
                            }
                        }
                    }
                }
            }
        }
        SessionCommand::Record {
            state,
            id,
            x,
            label,
        } => {
            let outcome = with_session(&state, |st| {
                Ok((st.record(&id, x, label.as_deref())?, true))
            })?;
            let _ = writeln!(s, "recorded {id} ({})", outcome_name(outcome));
        }
        SessionCommand::Status { state, json } => {
            let st = SessionState::load(&state)?;
            let status = st.status();
            if json {
                s = serde_json::to_string_pretty(&status)?;
                s.push('\n');
            } else {
                let _ = writeln!(s, "strategy: {}", status.strategy);
                let _ = writeln!(s, "acquired: {}", status.acquired);
                let _ = writeln!(s, "candidates: {}", status.candidates);
                let _ = writeln!(
                    s,
                    "pending suggestion: {}",
                    status.pending.as_deref().unwrap_or("none")
                );
                let _ = writeln!(
                    s,
                    "last record: {}",
                    status.last_outcome.map_or("none", outcome_name)
                );
                let _ = writeln!(
                    s,
                    "suggestions honored: {}, overridden: {}",
                    status.honored, status.overridden
                );
            }
        }
        SessionCommand::Export { state, out } => {
            let st = SessionState::load(&state)?;
            st.export_csv(&out)?;
            let _ = writeln!(s, "wrote {} rows to {}", st.acquired.len(), out.display());
        }
    }
    Ok(s)
}

fn outcome_name(o: session::Outcome) -> &'static str {
    match o {
        session::Outcome::Honored => "suggestion honored",
        session::Outcome::Overridden => "suggestion overridden",
        session::Outcome::Unsolicited => "no suggestion pending",
    }
}
