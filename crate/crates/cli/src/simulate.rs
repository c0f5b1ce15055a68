use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sensorsift_core::corpus::{generate, GeneratorConfig, FIVE_PROPERTIES};
use sensorsift_distributed::{
    fit_record_size, render_table3, table3_report, LinkValues, NodeFile, ProcessingFile, SearchOutcome, Strategy,
    TopologyFile,
};
use sensorsift_service::{Engine, FilterInput, Heuristic, SearchRequest, SimulateRequest, StrategyRequest};

use crate::error::{CliError, CliResult};
use crate::options::parse_priorities;
use crate::{load_corpus, Format};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Chain,
    Parallel,
    #[value(name = "parallel_k")]
    ParallelK,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Print the analytic saving table with the fitted record size and exit.
    #[arg(long)]
    table3: bool,
    /// Topology JSON file; node corpora are resolved relative to it.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Corpus to partition across nodes that name no corpus of their own.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Node count for a generated uniform topology.
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Sensors per node when generating a corpus.
    #[arg(long, default_value_t = 1000)]
    per_node: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    latency_ms: f64,
    /// Fixed per-node processing time; measured wall time when omitted.
    #[arg(long)]
    processing_ms: Option<f64>,
    #[arg(long, default_value_t = 200)]
    record_size: u64,
    #[arg(long, value_enum, default_value = "parallel")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Defaults to equal sliders over the five standard properties.
    #[arg(long)]
    priorities: Option<String>,
    #[arg(long, default_value = "")]
    query: String,
    #[arg(long)]
    margin: Option<f64>,
    /// Print the event timeline.
    #[arg(long)]
    events: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

fn uniform_topology(args: &SimulateArgs) -> TopologyFile {
    TopologyFile {
        nodes: vec![NodeFile::default(); args.nodes],
        record_size: args.record_size,
        latency_ms: LinkValues::Uniform(args.latency_ms),
        bandwidth_mb_s: None,
        processing: match args.processing_ms {
            Some(ms) => ProcessingFile::Fixed {
                ms: vec![ms; args.nodes],
            },
            None => ProcessingFile::Measured,
        },
        merge_ms: 0.0,
    }
}

fn print_table3(format: Format) -> CliResult {
    let report = table3_report(fit_record_size());
    match format {
        Format::Table => out!("{}", render_table3(&report)),
        Format::Machine => outln!(
            "{}",
            serde_json::to_string(&report).map_err(|e| CliError::Internal(e.to_string()))?
        ),
    }
    Ok(())
}

fn print_outcome(outcome: &SearchOutcome, events: bool) {
    outln!("strategy        {}", outcome.strategy.name());
    outln!("total_ms        {:.3}", outcome.total_time_ns as f64 / 1e6);
    outln!("remote_phase_ms {:.3}", outcome.remote_phase_ns as f64 / 1e6);
    outln!("sri_local_ms    {:.3}", outcome.sri_local_ns as f64 / 1e6);
    outln!("rounds          {}", outcome.rounds);
    outln!("total_bytes     {}", outcome.total_bytes);
    for l in &outcome.bytes_by_link {
        outln!("  {} -> {}  {} bytes", l.src, l.dst, l.bytes);
    }
    outln!();
    outln!("{:>4}  {:<14} {:>10}", "rank", "uid", "cpwi");
    for (i, e) in outcome.result.entries.iter().enumerate() {
        outln!("{:>4}  {:<14} {:>10.6}", i + 1, e.uid, e.cpwi);
    }
    if events {
        outln!();
        for e in &outcome.events {
            outln!("{}", serde_json::to_string(e).unwrap_or_default());
        }
    }
}

pub fn run(args: SimulateArgs) -> CliResult {
    if args.table3 {
        return print_table3(args.format);
    }
    let (topology, base) = match &args.topology {
        Some(path) => {
            let file = TopologyFile::read(path)?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (file, base)
        }
        None => {
            if args.nodes == 0 {
                return Err(CliError::User("--nodes must be at least 1".into()));
            }
            (
                uniform_topology(&args),
                std::env::current_dir().map_err(|e| CliError::Internal(e.to_string()))?,
            )
        }
    };
    let corpus = match &args.data {
        Some(path) => load_corpus(path)?,
        None => generate(GeneratorConfig::new(topology.nodes.len() * args.per_node, args.seed))?,
    };
    let engine = Engine::with_corpus(corpus)?;

    let priorities = match &args.priorities {
        Some(text) => parse_priorities(text, 100.0)?,
        None => parse_priorities(&FIVE_PROPERTIES.join(","), 100.0)?,
    };
    let strategy = match args.strategy {
        StrategyArg::Chain => Strategy::Chain,
        StrategyArg::Parallel => Strategy::Parallel,
        StrategyArg::ParallelK => Strategy::ParallelK { k: args.k },
    };
    let request = SimulateRequest {
        topology,
        request: SearchRequest {
            filter: FilterInput::Text(args.query.clone()),
            priorities,
            ideal: None,
            n: args.n,
            heuristic: args.margin.map(|m| Heuristic {
                enabled: true,
                margin_m: Some(m),
            }),
            strategy: StrategyRequest::Local,
            report_timing: false,
        },
        strategy,
    };
    let outcome = engine.simulate(&request, &base)?;
    match args.format {
        Format::Table => print_outcome(&outcome, args.events),
        Format::Machine => {
            let mut value = serde_json::to_value(&outcome).map_err(|e| CliError::Internal(e.to_string()))?;
            if !args.events {
                if let Some(obj) = value.as_object_mut() {
                    obj.remove("events");
                }
            }
            outln!("{value}");
        }
    }
    Ok(())
}
