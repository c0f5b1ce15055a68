use clap::Args;
use sensorsift_core::corpus::{generate, GeneratorConfig};
use sensorsift_core::query::FilterExpr;
use sensorsift_core::ranking::{cphf_accuracy, PrioritySpec};
use sensorsift_core::search::{run_search, PhaseTiming, SearchParams};
use sensorsift_core::PropertyRegistry;

use crate::error::{CliError, CliResult};
use crate::options::parse_list;
use crate::{property_list, Format};

#[derive(Args)]
pub struct BenchArgs {
    /// Use the full experiment grid: 10^3..10^6 sensors, 5 and 10 properties.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value = "1000,10000")]
    sizes: String,
    /// Property counts to try (5 and/or 10).
    #[arg(long, default_value = "5,10")]
    properties: String,
    #[arg(long, default_value = "0,25,50,75,100")]
    margins: String,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Corpora per cell; accuracy and timings are averaged over them.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

struct Row {
    sensors: usize,
    properties: usize,
    mode: String,
    timing: PhaseTiming,
    accuracy: f64,
}

/// Sliders descend with key order so every property has a distinct share.
fn priorities(keys: &[String]) -> PrioritySpec {
    keys.iter()
        .enumerate()
        .fold(PrioritySpec::new(100.0), |s, (i, k)| s.with(k, (100 - 9 * i) as f64))
}

fn add(a: &mut PhaseTiming, b: PhaseTiming) {
    a.filter_ms += b.filter_ms;
    a.prune_ms += b.prune_ms;
    a.rank_ms += b.rank_ms;
}

fn scale(t: PhaseTiming, by: f64) -> PhaseTiming {
    PhaseTiming {
        filter_ms: t.filter_ms / by,
        prune_ms: t.prune_ms / by,
        rank_ms: t.rank_ms / by,
    }
}

fn cell(sensors: usize, props: usize, margins: &[f64], n: usize, seeds: u64) -> CliResult<Vec<Row>> {
    let keys = property_list(&props.to_string());
    if keys.len() != props {
        return Err(CliError::User(format!(
            "--properties: only 5 and 10 are supported, got {props}"
        )));
    }
    let spec = priorities(&keys);
    let filter = FilterExpr::all();
    let mut exact_timing = PhaseTiming::default();
    let mut cphf: Vec<(PhaseTiming, f64)> = vec![(PhaseTiming::default(), 0.0); margins.len()];
    for seed in 0..seeds {
        let corpus = generate(GeneratorConfig::new(sensors, seed).with_properties(&keys))?;
        let mut registry = PropertyRegistry::canonical();
        corpus.observe_into(&mut registry)?;
        let params = |margin_m| SearchParams {
            filter: &filter,
            priorities: &spec,
            ideal: None,
            n,
            margin_m,
        };
        let exact = run_search(&corpus, &registry, &params(None))?;
        add(&mut exact_timing, exact.timing);
        for (slot, &m) in cphf.iter_mut().zip(margins) {
            let run = run_search(&corpus, &registry, &params(Some(m)))?;
            add(&mut slot.0, run.timing);
            slot.1 += cphf_accuracy(&exact.result, &run.result)?;
        }
    }
    let by = seeds as f64;
    let mut rows = vec![Row {
        sensors,
        properties: props,
        mode: "exact".into(),
        timing: scale(exact_timing, by),
        accuracy: 1.0,
    }];
    for ((timing, acc), m) in cphf.into_iter().zip(margins) {
        rows.push(Row {
            sensors,
            properties: props,
            mode: format!("cphf(M={m})"),
            timing: scale(timing, by),
            accuracy: acc / by,
        });
    }
    Ok(rows)
}

pub fn run(args: BenchArgs) -> CliResult {
    let sizes: Vec<usize> = if args.grid {
        vec![1_000, 10_000, 100_000, 1_000_000]
    } else {
        parse_list(&args.sizes, "--sizes")?
    };
    let props: Vec<usize> = if args.grid {
        vec![5, 10]
    } else {
        parse_list(&args.properties, "--properties")?
    };
    let margins: Vec<f64> = parse_list(&args.margins, "--margins")?;
    if args.seeds == 0 {
        return Err(CliError::User("--seeds must be at least 1".into()));
    }
    if let Some(m) = margins.iter().find(|m| !(0.0..=100.0).contains(*m)) {
        return Err(CliError::User(format!("--margins: {m} is outside [0, 100]")));
    }

    if args.format == Format::Table {
        outln!(
            "{:>9} {:>5}  {:<14} {:>10} {:>10} {:>10} {:>10} {:>9}",
            "sensors",
            "props",
            "mode",
            "filter_ms",
            "prune_ms",
            "rank_ms",
            "total_ms",
            "accuracy"
        );
    }
    for &sensors in &sizes {
        for &p in &props {
            for row in cell(sensors, p, &margins, args.n, args.seeds)? {
                let t = row.timing;
                let total = t.filter_ms + t.prune_ms + t.rank_ms;
                match args.format {
                    Format::Table => outln!(
                        "{:>9} {:>5}  {:<14} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>9.3}",
                        row.sensors,
                        row.properties,
                        row.mode,
                        t.filter_ms,
                        t.prune_ms,
                        t.rank_ms,
                        total,
                        row.accuracy
                    ),
                    Format::Machine => outln!(
                        "{}",
                        serde_json::json!({
                            "sensors": row.sensors,
                            "properties": row.properties,
                            "mode": row.mode,
                            "filter_ms": t.filter_ms,
                            "prune_ms": t.prune_ms,
                            "rank_ms": t.rank_ms,
                            "total_ms": total,
                            "accuracy": row.accuracy,
                        })
                    ),
                }
            }
        }
    }
    Ok(())
}
