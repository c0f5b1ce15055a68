use std::path::PathBuf;

use clap::Args;
use sensorsift_service::{Engine, FilterInput, Heuristic, SearchRequest, SearchResponse, StrategyRequest};

use crate::error::{CliError, CliResult};
use crate::options::{parse_ideal, parse_priorities};
use crate::{data_path, load_corpus, Format};

#[derive(Args)]
pub struct SearchArgs {
    /// Corpus file; defaults to corpus.jsonl in $SENSORSIFT_DATA_DIR.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Filter expression, e.g. "accuracy >= 80 AND type = temperature".
    #[arg(long, conflicts_with = "query_file")]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Slider positions: "accuracy=80,response_time=20".
    #[arg(long)]
    priorities: String,
    #[arg(long, default_value_t = 100.0)]
    scale: f64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Enable heuristic pruning with this margin of error (0-100).
    #[arg(long)]
    margin: Option<f64>,
    /// Ideal values in native units: "accuracy=95,latency=3".
    #[arg(long)]
    ideal: Option<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

pub fn render_table(response: &SearchResponse, keys: &[String]) -> String {
    let mut out = format!("{:>4}  {:<14} {:>10}", "rank", "uid", "cpwi");
    for k in keys {
        out.push_str(&format!(" {:>14}", truncate(k, 14)));
    }
    out.push('\n');
    for (i, e) in response.entries.iter().enumerate() {
        out.push_str(&format!("{:>4}  {:<14} {:>10.6}", i + 1, e.uid, e.cpwi));
        for k in keys {
            match e.raw_values.get(k) {
                Some(v) => out.push_str(&format!(" {v:>14.3}")),
                None => out.push_str(&format!(" {:>14}", "-")),
            }
        }
        out.push('\n');
    }
    out
}

fn truncate(s: &str, width: usize) -> &str {
    match s.char_indices().nth(width) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub fn run(args: SearchArgs) -> CliResult {
    let filter = match (&args.query, &args.query_file) {
        (Some(q), _) => q.clone(),
        (None, Some(path)) => {
            std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?
        }
        (None, None) => String::new(),
    };
    let request = SearchRequest {
        filter: FilterInput::Text(filter),
        priorities: parse_priorities(&args.priorities, args.scale)?,
        ideal: args.ideal.as_deref().map(parse_ideal).transpose()?,
        n: args.n,
        heuristic: args.margin.map(|m| Heuristic {
            enabled: true,
            margin_m: Some(m),
        }),
        strategy: StrategyRequest::Local,
        report_timing: false,
    };
    let engine = Engine::with_corpus(load_corpus(&data_path(args.data)?)?)?;
    let response = engine.search(&request).map_err(|e| {
        let mut e = CliError::from(e);
        if let (CliError::User(m), Some(path)) = (&mut e, &args.query_file) {
            *m = format!("{}: {m}", path.display());
        }
        e
    })?;
    match args.format {
        Format::Machine => outln!(
            "{}",
            serde_json::to_string(&response).map_err(|e| CliError::Internal(e.to_string()))?
        ),
        Format::Table => {
            let keys: Vec<String> = request.priorities.included_keys();
            out!("{}", render_table(&response, &keys));
        }
    }
    if response.entries.len() < args.n {
        eprintln!(
            "notice: {} of {} requested sensors matched",
            response.entries.len(),
            args.n
        );
    }
    Ok(())
}
