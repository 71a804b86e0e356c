mod state_arg;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qit_core::identity::{check_promise, Promise};
use qit_core::lowerbound::{sweep_csv, DEFAULT_FALSE_ALARM};
use qit_core::pauli::pauli_count;
use qit_core::sampling::{derive_seed, domain, stream_rng};
use qit_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::state_arg::{resolve_pair, StateArg};

const EXIT_YES: u8 = 0;
const EXIT_NO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "qit",
    version,
    about = "Identity testing of quantum states with Pauli measurements"
)]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether two n-qubit states are identical or far in trace distance.
    Identity(IdentityArgs),
    /// Run the collection tester on explicit bias tables.
    Collection(CollectionArgs),
    /// Sweep the mixedness-testing advantage over measurement budgets.
    Mixedness(MixednessArgs),
    /// Print the per-row sampling schedule.
    Schedule(ScheduleArgs),
    /// Find the smallest L meeting the 2/3 guarantees empirically.
    Calibrate(CalibrateArgs),
    /// Check the exact identities behind the reduction.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
struct TesterArgs {
    /// Distance parameter.
    #[arg(long)]
    eps: f64,
    /// Repetition constant of the collection tester.
    #[arg(long = "L", default_value_t = DEFAULT_L)]
    l: u64,
    /// Row weights ceil(k^(1+mu)) + 1 instead of k^2 + 1.
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    /// Qubit count; inferred from the states when possible.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    tester: TesterArgs,
    #[arg(long, default_value = "mixed")]
    rho: String,
    #[arg(long, default_value = "mixed")]
    sigma: String,
    /// Master seed; drawn from OS entropy and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Drop the identity Pauli from the collection.
    #[arg(long)]
    exclude_identity: bool,
    /// Write the schedule CSV to this path.
    #[arg(long)]
    emit_schedule: Option<PathBuf>,
    /// Record wall-clock time (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CollectionArgs {
    /// JSON file `{"alpha": [...], "beta": [...]}`.
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    tester: TesterArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Run every row even after a rejection.
    #[arg(long)]
    no_early_exit: bool,
    #[arg(long)]
    emit_schedule: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct MixednessArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "full")]
    family: Family,
    /// Total budgets, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "shots")]
    budgets: Vec<u64>,
    /// Per-index shot counts, comma separated; budget = shots * family size.
    #[arg(long, value_delimiter = ',')]
    shots: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "uniform-split")]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 300)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_FALSE_ALARM)]
    false_alarm: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Qubit count: schedule of the quantum reduction with m = 4^n.
    #[arg(long, conflicts_with = "m", required_unless_present = "m")]
    n: Option<usize>,
    /// Collection size: schedule of the raw collection tester.
    #[arg(long)]
    m: Option<u64>,
    #[command(flatten)]
    tester: TesterArgs,
    #[arg(long, requires = "n")]
    exclude_identity: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 256)]
    m: u64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Candidate L values, tried in increasing order.
    #[arg(
        long = "L-grid",
        value_delimiter = ',',
        default_value = "1,2,5,10,20,50,100"
    )]
    l_grid: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T> = std::result::Result<T, Failure>;

trait UsageContext<T> {
    fn usage(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for std::result::Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_YES };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run `qit --help` for usage");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Outcome<u8> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .runtime()?;
    }
    let parallel = cli.threads != 1;
    match cli.command {
        Command::Identity(args) => identity(args, parallel),
        Command::Collection(args) => collection(args, parallel),
        Command::Mixedness(args) => mixedness(args),
        Command::Schedule(args) => schedule(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Selftest(args) => selftest(args),
    }
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn emit(output: &OutputArgs, text: &str) -> Outcome<()> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .runtime(),
        None => io::stdout().write_all(text.as_bytes()).runtime(),
    }
}

fn check_trials(trials: u64) -> Outcome<()> {
    if trials == 0 {
        return Err(Failure::Usage(anyhow!("--trials must be at least 1")));
    }
    Ok(())
}

fn csv_text<T: Serialize>(rows: &[T]) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).runtime()?;
    }
    String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}")).runtime()?).runtime()
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Exit code for a batch: No wins when it is the strict majority.
fn majority_code(no: u64, trials: u64) -> u8 {
    if 2 * no > trials {
        EXIT_NO
    } else {
        EXIT_YES
    }
}

#[derive(Serialize)]
struct IdentityRow<'a> {
    trial: u64,
    seed: u64,
    verdict: Verdict,
    total_samples: u64,
    triggering_index: Option<u64>,
    triggering_pauli: Option<&'a str>,
    n: usize,
    eps: f64,
    #[serde(rename = "L")]
    l: u64,
    mu: Option<f64>,
    m: u64,
    rho: &'a str,
    sigma: &'a str,
}

fn identity(args: IdentityArgs, parallel: bool) -> Outcome<u8> {
    check_trials(args.trials)?;
    let rho = StateArg::parse(&args.rho).context("--rho").usage()?;
    let sigma = StateArg::parse(&args.sigma).context("--sigma").usage()?;
    let (rho, rho_label, sigma, sigma_label) = resolve_pair(rho, sigma, args.n).usage()?;
    let master = seed_or_entropy(args.seed);
    let mut base = QitInstance::new(rho, sigma, args.tester.eps, master);
    base.l = args.tester.l;
    base.mu = args.tester.mu;
    base.exclude_identity = args.exclude_identity;
    base.parallel = parallel;
    base.record_timing = args.timing;
    base.validate().usage()?;
    let n = base.n();
    let m = pauli_count(n) - u64::from(args.exclude_identity);
    let schedule = build_schedule(m, reduction_eps(n, base.eps), base.l, base.mu).usage()?;
    if let Promise::Violated { trace_distance } = check_promise(&base).runtime()? {
        eprintln!(
            "warning: trace distance {trace_distance} is neither 0 nor above eps = {}",
            base.eps
        );
    }
    if let Some(path) = &args.emit_schedule {
        fs::write(path, schedule.to_csv())
            .with_context(|| format!("writing {}", path.display()))
            .runtime()?;
    }

    let mut reports = Vec::with_capacity(args.trials as usize);
    for t in 0..args.trials {
        let mut inst = base.clone();
        if args.trials > 1 {
            inst.seed = derive_seed(master, &[domain::INSTANCE, t]);
        }
        let (_, mut report) = test_identity(&inst).runtime()?;
        report.rho = rho_label.clone();
        report.sigma = sigma_label.clone();
        reports.push(report);
    }
    let no = reports.iter().filter(|r| r.verdict.is_no()).count() as u64;

    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json if args.trials == 1 => reports[0].to_json_pretty() + "\n",
        Format::Json => json_line(&json!({
            "command": "identity",
            "master_seed": master,
            "trials": args.trials,
            "no": no,
            "yes": args.trials - no,
            "predicted_budget": schedule.total_samples(),
            "reports": reports,
        })),
        Format::Csv => {
            let rows: Vec<IdentityRow> = reports
                .iter()
                .enumerate()
                .map(|(t, r)| IdentityRow {
                    trial: t as u64,
                    seed: r.seed,
                    verdict: r.verdict,
                    total_samples: r.total_samples,
                    triggering_index: r.triggering_index,
                    triggering_pauli: r.triggering_pauli.as_deref(),
                    n: r.n,
                    eps: r.eps,
                    l: r.l,
                    mu: r.mu,
                    m: r.m,
                    rho: &r.rho,
                    sigma: &r.sigma,
                })
                .collect();
            csv_text(&rows)?
        }
    };
    emit(&args.output, &text)?;
    Ok(majority_code(no, args.trials))
}

#[derive(serde::Deserialize)]
struct CollectionFile {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Serialize)]
struct CollectionRow {
    trial: u64,
    seed: u64,
    verdict: Verdict,
    total_samples: u64,
    trigger_k: Option<u32>,
    trigger_position: Option<u64>,
    trigger_index: Option<u64>,
    m: u64,
    eps: f64,
    #[serde(rename = "L")]
    l: u64,
    mu: Option<f64>,
}

fn collection(args: CollectionArgs, parallel: bool) -> Outcome<u8> {
    check_trials(args.trials)?;
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))
        .usage()?;
    let file: CollectionFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.spec.display()))
        .usage()?;
    let table = BiasTable::new(file.alpha, file.beta).usage()?;
    let m = table.len() as u64;
    let schedule = build_schedule(m, args.tester.eps, args.tester.l, args.tester.mu).usage()?;
    if let Some(path) = &args.emit_schedule {
        fs::write(path, schedule.to_csv())
            .with_context(|| format!("writing {}", path.display()))
            .runtime()?;
    }
    let config = CollectionConfig {
        eps: args.tester.eps,
        l: args.tester.l,
        mu: args.tester.mu,
        early_exit: !args.no_early_exit,
        parallel,
    };
    let master = seed_or_entropy(args.seed);
    let mut rows = Vec::new();
    for t in 0..args.trials {
        let seed = if args.trials > 1 {
            derive_seed(master, &[domain::INSTANCE, t])
        } else {
            master
        };
        let oracle = PairOracle::new(table.clone(), seed);
        let v = test_collection(&oracle, &config).runtime()?;
        rows.push(CollectionRow {
            trial: t,
            seed,
            verdict: v.verdict,
            total_samples: v.total_samples,
            trigger_k: v.trigger.map(|x| x.k),
            trigger_position: v.trigger.map(|x| x.position),
            trigger_index: v.trigger.map(|x| x.index),
            m,
            eps: config.eps,
            l: config.l,
            mu: config.mu,
        });
    }
    let no = rows.iter().filter(|r| r.verdict.is_no()).count() as u64;
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => json_line(&json!({
            "command": "collection",
            "spec": args.spec.display().to_string(),
            "m": m,
            "eps": config.eps,
            "L": config.l,
            "mu": config.mu,
            "early_exit": config.early_exit,
            "master_seed": master,
            "predicted_budget": schedule.total_samples(),
            "no": no,
            "yes": args.trials - no,
            "runs": rows,
        })),
        Format::Csv => csv_text(&rows)?,
    };
    emit(&args.output, &text)?;
    Ok(majority_code(no, args.trials))
}

fn mixedness(args: MixednessArgs) -> Outcome<u8> {
    let ensemble = NeedleEnsemble::new(args.n, args.eps, args.family).usage()?;
    let budgets: Vec<u64> = if !args.shots.is_empty() {
        args.shots.iter().map(|s| s * ensemble.size()).collect()
    } else if !args.budgets.is_empty() {
        args.budgets.clone()
    } else {
        return Err(Failure::Usage(anyhow!("pass --budgets or --shots")));
    };
    if budgets.contains(&0) {
        return Err(Failure::Usage(anyhow!("budgets must be positive")));
    }
    if args.trials < 100 {
        return Err(Failure::Usage(anyhow!("sweeps need --trials >= 100")));
    }
    if !(args.false_alarm > 0.0 && args.false_alarm < 1.0) {
        return Err(Failure::Usage(anyhow!("--false-alarm must lie in (0, 1)")));
    }
    let seed = seed_or_entropy(args.seed);
    let cells = sweep_advantage(
        &ensemble,
        &budgets,
        &args.strategies,
        args.trials,
        args.false_alarm,
        seed,
    )
    .runtime()?;
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep_csv(&cells),
        Format::Json => json_line(&json!({
            "command": "mixedness",
            "false_alarm": args.false_alarm,
            "cells": cells,
        })),
    };
    emit(&args.output, &text)?;
    Ok(EXIT_YES)
}

fn schedule(args: ScheduleArgs) -> Outcome<u8> {
    let (m, eps) = match (args.n, args.m) {
        (Some(n), None) => {
            if n == 0 || n > qit_core::pauli::MAX_DENSE_QUBITS {
                return Err(Failure::Usage(anyhow!("--n must lie in 1..=8")));
            }
            (
                pauli_count(n) - u64::from(args.exclude_identity),
                reduction_eps(n, args.tester.eps),
            )
        }
        (None, Some(m)) => (m, args.tester.eps),
        _ => return Err(Failure::Usage(anyhow!("pass exactly one of --n, --m"))),
    };
    let schedule = build_schedule(m, eps, args.tester.l, args.tester.mu).usage()?;
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => schedule.to_csv(),
        Format::Json => json_line(&json!({
            "command": "schedule",
            "n": args.n,
            "input_eps": args.tester.eps,
            "schedule": schedule,
            "total_samples": schedule.total_samples(),
            "false_rejection_bound": schedule.false_rejection_bound(),
        })),
    };
    emit(&args.output, &text)?;
    Ok(EXIT_YES)
}

#[derive(Serialize)]
struct CalibrationRow {
    #[serde(rename = "L")]
    l: u64,
    trials: u64,
    acceptance_identical: f64,
    rejection_spread: f64,
    rejection_concentrated: Option<f64>,
    predicted_budget: u64,
    passed: bool,
}

fn calibration_rate(
    trials: u64,
    config: &CollectionConfig,
    seed: u64,
    make: impl Fn(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>),
    count_no: bool,
) -> Outcome<f64> {
    let mut hits = 0u64;
    for t in 0..trials {
        let s = derive_seed(seed, &[domain::INSTANCE, t]);
        let (alpha, beta) = make(&mut stream_rng(derive_seed(s, &[1])));
        let oracle = PairOracle::new(BiasTable::new(alpha, beta).runtime()?, s);
        let v = test_collection(&oracle, config).runtime()?;
        hits += u64::from(v.verdict.is_no() == count_no);
    }
    Ok(hits as f64 / trials as f64)
}

fn calibrate(args: CalibrateArgs) -> Outcome<u8> {
    check_trials(args.trials)?;
    let m = args.m;
    if m == 0 || args.l_grid.is_empty() || args.l_grid.contains(&0) {
        return Err(Failure::Usage(anyhow!("--m and every L must be positive")));
    }
    let gap = 2f64.sqrt() * args.eps;
    if !(args.eps > 0.0 && gap < 2.0) {
        return Err(Failure::Usage(anyhow!("--eps must lie in (0, sqrt 2)")));
    }
    let concentrated_ok = (m as f64) * args.eps * args.eps <= 2.0;
    let seed = seed_or_entropy(args.seed);
    let mut grid = args.l_grid.clone();
    grid.sort_unstable();
    grid.dedup();

    let mut rows = Vec::new();
    for &l in &grid {
        let config = CollectionConfig {
            l,
            parallel: false,
            ..CollectionConfig::new(args.eps)
        };
        let uniform = |rng: &mut ChaCha8Rng, hi: f64| -> Vec<f64> {
            (0..m).map(|_| rng.random_range(-1.0..=hi)).collect()
        };
        let accept = calibration_rate(
            args.trials,
            &config,
            derive_seed(seed, &[1, l]),
            |rng| {
                let a = uniform(rng, 1.0);
                (a.clone(), a)
            },
            false,
        )?;
        let spread = calibration_rate(
            args.trials,
            &config,
            derive_seed(seed, &[2, l]),
            |rng| {
                let a = uniform(rng, 1.0 - gap);
                let b = a.iter().map(|x| x + gap).collect();
                (a, b)
            },
            true,
        )?;
        let concentrated = if concentrated_ok {
            // One index carries all of the distance: (a - b)^2 / 2 = m eps^2.
            let delta = (2.0 * m as f64).sqrt() * args.eps;
            Some(calibration_rate(
                args.trials,
                &config,
                derive_seed(seed, &[3, l]),
                |rng| {
                    let mut a = uniform(rng, 1.0);
                    let mut b = a.clone();
                    let j = rng.random_range(0..m as usize);
                    a[j] = delta / 2.0;
                    b[j] = -delta / 2.0;
                    (a, b)
                },
                true,
            )?)
        } else {
            None
        };
        let budget = build_schedule(m, args.eps, l, None)
            .usage()?
            .total_samples();
        let passed = [Some(accept), Some(spread), concentrated]
            .into_iter()
            .flatten()
            .all(|r| r >= 2.0 / 3.0);
        rows.push(CalibrationRow {
            l,
            trials: args.trials,
            acceptance_identical: accept,
            rejection_spread: spread,
            rejection_concentrated: concentrated,
            predicted_budget: budget,
            passed,
        });
    }
    let smallest = rows.iter().find(|r| r.passed).map(|r| r.l);
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_text(&rows)?,
        Format::Json => json_line(&json!({
            "command": "calibrate",
            "m": m,
            "eps": args.eps,
            "seed": seed,
            "smallest_passing_L": smallest,
            "rows": rows,
        })),
    };
    emit(&args.output, &text)?;
    match smallest {
        Some(l) => {
            eprintln!("smallest passing L: {l}");
            Ok(EXIT_YES)
        }
        None => {
            eprintln!("no L in the grid passed");
            Ok(EXIT_NO)
        }
    }
}

fn selftest(args: SelftestArgs) -> Outcome<u8> {
    if args.pairs == 0 {
        return Err(Failure::Usage(anyhow!("--pairs must be positive")));
    }
    let seed = seed_or_entropy(args.seed);
    let checks = qit_core::selftest::run(seed, args.pairs).runtime()?;
    let all = checks.iter().all(|c| c.passed);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Csv => csv_text(&checks)?,
        Format::Json => json_line(&json!({
            "command": "selftest",
            "seed": seed,
            "pairs": args.pairs,
            "passed": all,
            "checks": checks,
        })),
    };
    emit(&args.output, &text)?;
    Ok(if all { EXIT_YES } else { EXIT_NO })
}
