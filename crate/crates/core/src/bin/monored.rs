//! `monored`: reduce an input file against an interestingness command.
//!
//! Exit status: 0 success, 1 the input (or the re-verified output) is not
//! interesting, 2 usage or input error, 3 hard oracle error.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use monored::engine::{reduce, Mode, ReduceError, ReductionConfig};
use monored::oracle::{CachingOracle, ExternalOracle, OracleError, OracleSpec};
use monored::trace::{parse_draws, write_trace, Report, TraceHeader};
use monored::universe::{tokenize, TokenizerMode};

#[derive(Debug, Parser)]
#[command(name = "monored", version, about = "ddmin test-case reducer with probabilistic test skipping")]
struct Args {
    /// File to reduce.
    #[arg(long)]
    input: PathBuf,
    /// Interestingness command; exit 0 means interesting. `{}` is replaced
    /// by the candidate path, otherwise the path is appended.
    #[arg(long)]
    oracle: String,
    #[arg(long, value_enum, default_value_t = Mode::Pma)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = TokenizerMode::Lines)]
    tokenizer: TokenizerMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File of uniform draws in (0, 1), one per line, used instead of the PRNG.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, value_name = "SECONDS", default_value_t = 60.0)]
    timeout_per_test: f64,
    /// Total wall-clock budget; on expiry the best result so far is written.
    #[arg(long, value_name = "SECONDS")]
    budget: Option<f64>,
    /// Answer exact duplicate candidates from a cache.
    #[arg(long)]
    cache: bool,
    /// JSON Lines trace of every proposed candidate.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Defaults to `<input>.reduced`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Metrics JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Executed-candidate history, one `<outcome> <cardinality> <hex>` per line.
    #[arg(long)]
    history_dump: Option<PathBuf>,
    #[arg(long)]
    keep_temps: bool,
    #[arg(long)]
    verbose: bool,
}

enum Failure {
    NotInteresting(String),
    Usage(String),
    Oracle(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::NotInteresting(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Oracle(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::NotInteresting(m) | Failure::Usage(m) | Failure::Oracle(m) => m,
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidSpec(_) => Failure::Usage(e.to_string()),
            _ => Failure::Oracle(e.to_string()),
        }
    }
}

impl From<ReduceError> for Failure {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::Oracle(e) => e.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn seconds(flag: &str, value: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(value)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Failure::Usage(format!("--{flag} must be a positive number of seconds")))
}

fn run(args: Args) -> Result<(), Failure> {
    let verbose = args.verbose;
    let say = |msg: String| {
        if verbose {
            eprintln!("monored: {msg}");
        }
    };

    let bytes = fs::read(&args.input).map_err(|e| io_failure(&args.input, e))?;
    let universe = tokenize(&bytes, args.tokenizer)
        .map_err(|e| io_failure(&args.input, e))?
        .with_source_path(&args.input);
    let size = universe.len();
    say(format!("{size} elements in {:?} mode", args.tokenizer));

    let replay_draws = match &args.replay {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            Some(parse_draws(&text).map_err(|e| io_failure(path, e))?)
        }
        None => None,
    };

    let per_test_timeout = seconds("timeout-per-test", args.timeout_per_test)?;
    let total_budget = args.budget.map(|b| seconds("budget", b)).transpose()?;

    let mut spec = OracleSpec::from_command_line(&args.oracle)?;
    spec.per_test_timeout = per_test_timeout;
    spec.keep_temps = args.keep_temps;
    if let Some(name) = args.input.file_name() {
        spec.candidate_name = name.to_string_lossy().into_owned();
    }
    if verbose {
        let mut logs = args.input.clone().into_os_string();
        logs.push(".logs");
        spec.log_dir = Some(PathBuf::from(logs));
    }

    let full_bytes = universe.render(&universe.full());
    let mut oracle = CachingOracle::new(ExternalOracle::new(spec, universe)?, args.cache);

    let initial = oracle.inner_mut().run_bytes(&full_bytes)?;
    if !initial.verdict.is_interesting() {
        return Err(Failure::NotInteresting(format!(
            "the unreduced input is not interesting (exit code {:?}, timeout {})",
            initial.exit_code, initial.was_timeout
        )));
    }

    let config = ReductionConfig {
        initial_granularity: 2,
        mode: args.mode,
        per_test_timeout,
        total_budget,
        seed: args.seed,
        replay_draws: replay_draws.clone(),
    };
    let result = reduce(size, &mut oracle, &config)?;
    say(format!(
        "{} -> {} elements, {} executed, {} skipped, {} cache hits{}",
        size,
        result.minimal.cardinality(),
        result.metrics.executed_tests,
        result.metrics.skipped_tests,
        result.cache_hits,
        if result.truncated { " (budget exhausted)" } else { "" }
    ));

    let output = args.output.clone().unwrap_or_else(|| {
        let mut p = args.input.clone().into_os_string();
        p.push(".reduced");
        PathBuf::from(p)
    });
    let rendered = oracle.inner().universe().render(&result.minimal);
    fs::write(&output, &rendered).map_err(|e| io_failure(&output, e))?;

    if let Some(path) = &args.trace {
        let header = TraceHeader::new(args.mode, args.seed, replay_draws.is_some(), size);
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        write_trace(BufWriter::new(file), &header, &result.trace).map_err(|e| io_failure(path, e))?;
    }
    if let Some(path) = &args.report {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        Report::from_result(&result, args.mode, args.seed)
            .write(BufWriter::new(file))
            .map_err(|e| io_failure(path, e))?;
    }
    if let Some(path) = &args.history_dump {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        result
            .history
            .dump(BufWriter::new(file))
            .map_err(|e| io_failure(path, e))?;
    }

    let written = fs::read(&output).map_err(|e| io_failure(&output, e))?;
    let check = oracle.inner_mut().run_bytes(&written)?;
    if !check.verdict.is_interesting() {
        return Err(Failure::NotInteresting(format!(
            "re-verification of {} failed (exit code {:?})",
            output.display(),
            check.exit_code
        )));
    }
    say(format!("wrote {}", output.display()));
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("monored: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
