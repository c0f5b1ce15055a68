//! `sensorsift` command-line tool.
//!
//! Exit status: 0 success, 2 user or configuration error, 3 data error,
//! 4 internal error.

/// `print!` that exits quietly when stdout is a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {
        $crate::write_stdout(format_args!($($arg)*))
    };
}

macro_rules! outln {
    () => {
        out!("\n")
    };
    ($($arg:tt)*) => {
        out!("{}\n", format_args!($($arg)*))
    };
}

mod bench;
mod error;
mod options;
mod search;
mod simulate;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use sensorsift_core::corpus::{generate, write_corpus, GeneratorConfig, FIVE_PROPERTIES, TEN_PROPERTIES};
use sensorsift_core::PropertyRegistry;
use sensorsift_service::Engine;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the directory that holds `corpus.jsonl` when
/// `--data` or `--out` is omitted.
pub const DATA_DIR_ENV: &str = "SENSORSIFT_DATA_DIR";
const DEFAULT_CORPUS: &str = "corpus.jsonl";

#[derive(Parser)]
#[command(name = "sensorsift", version, about = "Context-aware sensor search and ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus and print its row count and SHA-256.
    Generate {
        #[arg(long)]
        count: usize,
        /// 5, 10, or a comma-separated list of property keys.
        #[arg(long, default_value = "5")]
        properties: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter and rank a corpus.
    Search(search::SearchArgs),
    /// Time filter/prune/rank and measure heuristic accuracy over a grid.
    Bench(bench::BenchArgs),
    /// Run a simulated distributed search, or print the saving table.
    Simulate(simulate::SimulateArgs),
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

pub fn write_stdout(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("internal error: cannot write to stdout: {e}");
            std::process::exit(4);
        }
        std::process::exit(0);
    }
}

/// `explicit`, or `corpus.jsonl` under the data directory.
pub fn data_path(explicit: Option<PathBuf>) -> CliResult<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Ok(PathBuf::from(dir).join(DEFAULT_CORPUS)),
        None => Err(CliError::User(format!(
            "no corpus path given and {DATA_DIR_ENV} is not set"
        ))),
    }
}

pub fn load_corpus(path: &std::path::Path) -> CliResult<sensorsift_core::Corpus> {
    sensorsift_core::corpus::load(path, &PropertyRegistry::canonical())
        .map_err(|e| CliError::from(e).as_data())
        .map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
}

pub fn property_list(spec: &str) -> Vec<String> {
    match spec.trim() {
        "5" => FIVE_PROPERTIES.iter().map(|s| s.to_string()).collect(),
        "10" => TEN_PROPERTIES.iter().map(|s| s.to_string()).collect(),
        list => list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
    }
}

fn run_generate(count: usize, properties: &str, seed: u64, out: Option<PathBuf>) -> CliResult {
    let keys = property_list(properties);
    let config = GeneratorConfig::new(count, seed).with_properties(&keys);
    config.validate_with(&PropertyRegistry::canonical())?;
    let corpus = generate(config)?;
    let mut bytes = Vec::new();
    write_corpus(&corpus, &mut bytes)?;
    let out = data_path(out)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(&out, &bytes).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    outln!("rows {}", corpus.len());
    outln!("sha256 {}", hex::encode(Sha256::digest(&bytes)));
    Ok(())
}

fn run_serve(data: Option<PathBuf>, addr: SocketAddr) -> CliResult {
    let engine = Engine::new();
    let path = match data {
        Some(p) => Some(p),
        None => data_path(None).ok().filter(|p| p.exists()),
    };
    if let Some(path) = &path {
        let info = engine.install(load_corpus(path)?)?;
        eprintln!("loaded {} sensors from {}", info.sensors, path.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    eprintln!("listening on http://{addr}");
    let base = std::env::current_dir().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime
        .block_on(sensorsift_service::serve(addr, Arc::new(engine), base))
        .map_err(|e| CliError::User(format!("cannot serve on {addr}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            count,
            properties,
            seed,
            out,
        } => run_generate(count, &properties, seed, out),
        Command::Search(args) => search::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Serve { data, addr } => run_serve(data, addr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
