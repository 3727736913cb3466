//! Command-line front end: `run`, `sweep` and `verify-tables`.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 eavesdropping check
//! failed, 3 a user was rejected (or, for `verify-tables`, a fixture mismatch).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ghzauth::adversary::detection_probability;
use ghzauth::entanglement::{swap_distribution, transform_label};
use ghzauth::{BellOutcome, GhzLabel, PauliChoice, SessionConfig, SessionReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

pub const SEED_ENV: &str = "GHZAUTH_SEED";

/// Fixture compared by `verify-tables` unless `--fixture` overrides it.
pub const GOLDEN_TABLES: &str = include_str!("../fixtures/tables.json");

#[derive(Debug, Parser)]
#[command(name = "ghzauth", version, about = "Simulate GHZ entanglement-swapping identity authentication")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Session config JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override; wins over the config file and GHZAUTH_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include Trent's private operators in reports.
    #[arg(long, global = true)]
    pub reveal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session.
    Run,
    /// Run many sessions with seeds seed, seed+1, ...
    Sweep {
        #[arg(long)]
        trials: u64,
    },
    /// Regenerate the transformation table and swapping supports and compare them with the golden fixture.
    VerifyTables {
        /// Alternative fixture file.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(#[from] ghzauth::Error),
    #[error("{0}")]
    Usage(String),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Seed precedence: command line, then config file, then environment, then 0.
pub fn resolve_seed(cli: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = cli.or(file) {
        return Ok(s);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={raw:?} is not an unsigned 64-bit integer"))),
        None => Ok(0),
    }
}

/// Loads and validates a session config, applying seed precedence.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<SessionConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let value: serde_json::Value = serde_json::from_str(&read(path)?)?;
    let file_seed = match value.get("seed") {
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| CliError::Usage("config field `seed` must be an unsigned 64-bit integer".into()))?,
        ),
        None => None,
    };
    let mut config: SessionConfig = serde_json::from_value(value)?;
    let env = std::env::var(SEED_ENV).ok();
    config.seed = resolve_seed(seed, file_seed, env.as_deref())?;
    config.validate()?;
    Ok(config)
}

/// Exit code implied by a session report.
pub fn exit_code(report: &SessionReport) -> i32 {
    if report.aborted || !report.s2.pass {
        EXIT_CHECK_FAILED
    } else if report.all_accepted() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    }
}

fn report_usage(err: &CliError) -> i32 {
    eprintln!("error: {err}");
    EXIT_USAGE
}

pub fn cmd_run(cli: &Cli) -> i32 {
    let result = (|| {
        let config = load_config(cli.config.as_deref(), cli.seed)?;
        let mut report = ghzauth::run_session(&config)?;
        if !cli.reveal {
            report.redact();
        }
        emit(cli.out.as_deref(), &report.to_json())?;
        Ok::<_, CliError>(exit_code(&report))
    })();
    result.unwrap_or_else(|e| report_usage(&e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// Z-basis probability used for the mixed prediction.
    pub basis_mix: f64,
    pub per_sample_detection: f64,
    pub s2_pass_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub trials: u64,
    pub first_seed: u64,
    pub acceptance_rate: f64,
    pub s2_pass_rate: f64,
    pub mean_mismatch_rate: f64,
    pub predicted: Predictions,
}

/// `P(Binomial(k, p) <= max_failures)`.
fn binomial_cdf(k: usize, p: f64, max_failures: usize) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if max_failures >= k { 1.0 } else { 0.0 };
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_choose = 0.0f64;
    let mut total = 0.0;
    for j in 0..=max_failures.min(k) {
        if j > 0 {
            log_choose += ((k - j + 1) as f64).ln() - (j as f64).ln();
        }
        total += (log_choose + j as f64 * lp + (k - j) as f64 * lq).exp();
    }
    total.min(1.0)
}

pub fn predictions(config: &SessionConfig) -> Result<Predictions, CliError> {
    let basis_mix = 0.5;
    let p = detection_probability::<f64>(&config.attack, config.r, basis_mix)?;
    let k = config.sample_count();
    // mismatch fraction <= threshold  <=>  mismatches <= floor(threshold * k)
    let allowed = (config.check_threshold * k as f64 + 1e-9).floor() as usize;
    Ok(Predictions { basis_mix, per_sample_detection: p, s2_pass_probability: binomial_cdf(k, p, allowed) })
}

/// Runs `trials` sessions in parallel and aggregates them in seed order.
pub fn sweep(config: &SessionConfig, trials: u64) -> Result<SweepReport, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let reports: Vec<SessionReport> = (0..trials)
        .into_par_iter()
        .map(|i| ghzauth::run_session(&config.clone().with_seed(config.seed.wrapping_add(i))))
        .collect::<Result<_, _>>()?;
    let n = trials as f64;
    Ok(SweepReport {
        schema_version: ghzauth::protocol::SCHEMA_VERSION,
        config: config.clone(),
        trials,
        first_seed: config.seed,
        acceptance_rate: reports.iter().filter(|r| r.all_accepted()).count() as f64 / n,
        s2_pass_rate: reports.iter().filter(|r| r.s2.pass).count() as f64 / n,
        mean_mismatch_rate: reports.iter().map(|r| r.s2.rate).sum::<f64>() / n,
        predicted: predictions(config)?,
    })
}

pub fn cmd_sweep(cli: &Cli, trials: u64) -> i32 {
    let result = (|| {
        let config = load_config(cli.config.as_deref(), cli.seed)?;
        let report = sweep(&config, trials)?;
        emit(cli.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        Ok::<_, CliError>(EXIT_OK)
    })();
    result.unwrap_or_else(|e| report_usage(&e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub ops: Vec<String>,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub outcomes: Vec<BellOutcome>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTable {
    pub name: String,
    pub p: String,
    pub q: String,
    pub support: Vec<SupportEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub transformations: Vec<TableRow>,
    pub swaps: Vec<SwapTable>,
}

fn op_name(op: PauliChoice) -> String {
    op.to_string()
}

/// Recomputes every table row and swapping support from the simulator.
///
/// Rows and swaps are regenerated for exactly the entries the fixture
/// names, plus any of the eight operator triples the fixture omits.
pub fn regenerate(reference: &Tables) -> Result<Tables, CliError> {
    let mut transformations = Vec::with_capacity(8);
    let mut triples: Vec<Vec<PauliChoice>> = Vec::new();
    for row in &reference.transformations {
        let ops = row
            .ops
            .iter()
            .map(|s| match s.as_str() {
                "I" => Ok(PauliChoice::I),
                "iY" => Ok(PauliChoice::ISigmaY),
                other => Err(CliError::Usage(format!("unknown operator {other:?} in fixture"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        triples.push(ops);
    }
    for mask in 0..8u8 {
        let ops: Vec<PauliChoice> = (0..3).map(|i| PauliChoice::from_bit(mask & (4 >> i) != 0)).collect();
        if !triples.contains(&ops) {
            triples.push(ops);
        }
    }
    for ops in triples {
        let label = transform_label(&ops, ops.len())?;
        transformations.push(TableRow { ops: ops.iter().copied().map(op_name).collect(), state: label.to_string() });
    }

    let mut swaps = Vec::with_capacity(reference.swaps.len());
    for s in &reference.swaps {
        let p: GhzLabel = s.p.parse()?;
        let q: GhzLabel = s.q.parse()?;
        let dist = swap_distribution::<f64>(&p, &q)?;
        let support = dist
            .support()
            .map(|(outcomes, probability)| SupportEntry { outcomes: outcomes.to_vec(), probability })
            .collect();
        swaps.push(SwapTable { name: s.name.clone(), p: s.p.clone(), q: s.q.clone(), support });
    }
    Ok(Tables { transformations, swaps })
}

/// Differences between regenerated and golden tables; empty on a match.
pub fn diff_tables(golden: &Tables, fresh: &Tables) -> Vec<String> {
    let mut diffs = Vec::new();
    let golden_rows: BTreeMap<&Vec<String>, &String> =
        golden.transformations.iter().map(|r| (&r.ops, &r.state)).collect();
    let fresh_rows: BTreeMap<&Vec<String>, &String> =
        fresh.transformations.iter().map(|r| (&r.ops, &r.state)).collect();
    for (ops, state) in &fresh_rows {
        match golden_rows.get(ops) {
            Some(g) if g == state => {}
            Some(g) => diffs.push(format!("transformations {}: expected {g}, got {state}", ops.join("⊗"))),
            None => diffs.push(format!("transformations {}: missing from fixture (got {state})", ops.join("⊗"))),
        }
    }
    if golden.transformations.len() != 8 {
        diffs.push(format!("transformations: fixture has {} rows, expected 8", golden.transformations.len()));
    }
    for (g, f) in golden.swaps.iter().zip(&fresh.swaps) {
        let want: BTreeMap<&Vec<BellOutcome>, f64> = g.support.iter().map(|e| (&e.outcomes, e.probability)).collect();
        let got: BTreeMap<&Vec<BellOutcome>, f64> = f.support.iter().map(|e| (&e.outcomes, e.probability)).collect();
        let show = |t: &Vec<BellOutcome>| t.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ");
        for (t, p) in &got {
            match want.get(t) {
                Some(w) if (w - p).abs() <= 1e-9 => {}
                Some(w) => diffs.push(format!("{} ({}): expected {w}, got {p}", g.name, show(t))),
                None => diffs.push(format!("{} ({}): unexpected outcome with probability {p}", g.name, show(t))),
            }
        }
        for t in want.keys().filter(|t| !got.contains_key(*t)) {
            diffs.push(format!("{} ({}): listed in fixture but has probability 0", g.name, show(t)));
        }
    }
    diffs
}

fn print_tables(tables: &Tables) {
    println!("GHZ transformation table (operators on T, A1, A2):");
    for row in &tables.transformations {
        println!("  {:<12} -> {}", row.ops.join(" ⊗ "), row.state);
    }
    for s in &tables.swaps {
        println!("Swapping support {} = {} ⊗ {} ({} outcomes):", s.name, s.p, s.q, s.support.len());
        for e in &s.support {
            let t: Vec<String> = e.outcomes.iter().map(|o| o.to_string()).collect();
            println!("  {:<20} {:.6}", t.join(" "), e.probability);
        }
    }
}

pub fn verify_tables(fixture_text: &str) -> Result<(Tables, Vec<String>), CliError> {
    let golden: Tables = serde_json::from_str(fixture_text)?;
    let fresh = regenerate(&golden)?;
    let diffs = diff_tables(&golden, &fresh);
    Ok((fresh, diffs))
}

pub fn cmd_verify_tables(cli: &Cli, fixture: Option<&Path>) -> i32 {
    let result = (|| {
        let text = match fixture {
            Some(path) => read(path)?,
            None => GOLDEN_TABLES.to_owned(),
        };
        let (fresh, diffs) = verify_tables(&text)?;
        print_tables(&fresh);
        if let Some(path) = &cli.out {
            emit(Some(path), &serde_json::to_string_pretty(&fresh)?)?;
        }
        if diffs.is_empty() {
            println!("all tables match the fixture");
            Ok::<_, CliError>(EXIT_OK)
        } else {
            eprintln!("{} mismatch(es) against the fixture:", diffs.len());
            for d in &diffs {
                eprintln!("  {d}");
            }
            Ok(EXIT_REJECTED)
        }
    })();
    result.unwrap_or_else(|e| report_usage(&e))
}

/// Parses `args` (including the program name) and runs the command.
/// Argument errors exit 1 so they stay distinct from a failed check (2).
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run => cmd_run(cli),
        Command::Sweep { trials } => cmd_sweep(cli, *trials),
        Command::VerifyTables { fixture } => cmd_verify_tables(cli, fixture.as_deref()),
    }
}
