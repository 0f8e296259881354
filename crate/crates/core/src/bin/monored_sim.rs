//! `monored-sim`: desk-scale sweeps over synthetic monotone spaces.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use monored::engine::Mode;
use monored::simlab::{sweep, write_sweep_csv};

#[derive(Debug, Parser)]
#[command(name = "monored-sim", version, about = "Compare ddmin and pma on random monotone targets")]
struct Args {
    /// Universe sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    sizes: Vec<usize>,
    /// Seeds: a comma-separated list, or a half-open range `a..b`.
    #[arg(long, default_value = "0..20", value_parser = parse_seeds)]
    seeds: SeedList,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ddmin,pma")]
    modes: Vec<Mode>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(SeedList(Vec::new()));
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("bad seed `{x}`: {e}")))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let rows = match sweep(&args.sizes, &args.modes, &args.seeds.0) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("monored-sim: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &args.out {
        Some(path) => File::create(path)
            .map_err(Into::into)
            .and_then(|f| write_sweep_csv(&rows, BufWriter::new(f))),
        None => write_sweep_csv(&rows, io::stdout().lock()),
    };
    if let Err(e) = written.and_then(|_| io::stdout().flush().map_err(Into::into)) {
        eprintln!("monored-sim: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
