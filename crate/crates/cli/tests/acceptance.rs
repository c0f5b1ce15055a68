//! Acceptance suite. Runs every primary criterion at its stated tolerance,
//! prints one PASS/FAIL line per criterion and exits nonzero on any failure.
//!
//! `cargo test -p sensorsift --test acceptance --release`

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensorsift_core::corpus::{generate, GeneratorConfig, FIVE_PROPERTIES};
use sensorsift_core::query::{evaluate, parse_filter, FilterExpr};
use sensorsift_core::ranking::{cphf_accuracy, cphf_prune, rank_and_select, PrioritySpec};
use sensorsift_core::search::{run_search, SearchParams};
use sensorsift_core::{Bounds, Corpus, Polarity, PropertyRegistry, SensorDescription};
use sensorsift_distributed::analytic::{chain_time_ns, parallel_time_ns};
use sensorsift_distributed::{
    fit_record_size, search_chain, search_parallel, simulate_timeline, table3_report, ClusterTopology, Link,
    ProcessingModel, Strategy,
};
use sensorsift_oracle::{brute_force_filter, brute_force_rank, scenario_filter, Criterion, SCENARIO_COUNT};

type Outcome = Result<String, String>;

fn setup(count: usize, seed: u64) -> (Corpus, PropertyRegistry) {
    let corpus = generate(GeneratorConfig::new(count, seed)).expect("generate");
    let mut reg = PropertyRegistry::canonical();
    corpus.observe_into(&mut reg).expect("observe");
    (corpus, reg)
}

/// A non-empty random subset of the five properties with sliders in 1..=100.
fn random_spec(rng: &mut ChaCha8Rng) -> PrioritySpec {
    let mut spec = PrioritySpec::new(100.0);
    let first = rng.random_range(0..FIVE_PROPERTIES.len());
    for (i, key) in FIVE_PROPERTIES.iter().enumerate() {
        if i == first || rng.random_bool(0.6) {
            spec = spec.with(key, rng.random_range(1..=100) as f64);
        }
    }
    spec
}

fn criteria(spec: &PrioritySpec, reg: &PropertyRegistry) -> Vec<Criterion> {
    spec.included()
        .map(|e| Criterion {
            key: e.key.clone(),
            slider: e.slider,
            lower_is_better: reg.polarity(&e.key).unwrap() == Polarity::LowerIsBetter,
        })
        .collect()
}

fn check_time(started: Instant, limit: Duration) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

/// Seeds and parameters shared by the exact-rank and no-op checks.
fn oracle_corpora() -> impl Iterator<Item = (Corpus, PropertyRegistry, PrioritySpec, usize)> {
    (0..200u64).map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let count = rng.random_range(1..=1_000);
        let (corpus, reg) = setup(count, seed);
        let spec = random_spec(&mut rng);
        let n = rng.random_range(1..=count.min(100));
        (corpus, reg, spec, n)
    })
}

fn exact_ranking_oracle() -> Outcome {
    let started = Instant::now();
    for (i, (corpus, reg, spec, n)) in oracle_corpora().enumerate() {
        let engine = rank_and_select(&corpus, &corpus.all_rows(), &spec, None, n, &reg).map_err(|e| e.to_string())?;
        let records: Vec<SensorDescription> = corpus.records().collect();
        let oracle = brute_force_rank(&records, &records, &criteria(&spec, &reg), n);
        let got: Vec<&str> = engine.uids();
        let want: Vec<&str> = oracle.iter().map(|(u, _)| u.as_str()).collect();
        if got != want {
            return Err(format!("corpus {i}: uid sequence differs from oracle"));
        }
    }
    let took = check_time(started, Duration::from_secs(30))?;
    Ok(format!("200 corpora identical to oracle in {took:.2?}"))
}

fn cphf_noop_law() -> Outcome {
    for (i, (corpus, reg, spec, n)) in oracle_corpora().enumerate() {
        let all = corpus.all_rows();
        let exact = rank_and_select(&corpus, &all, &spec, None, n, &reg).map_err(|e| e.to_string())?;
        let pruned = cphf_prune(&corpus, &all, &spec, n, 100.0, &reg).map_err(|e| e.to_string())?;
        let heuristic = rank_and_select(&corpus, &pruned, &spec, None, n, &reg).map_err(|e| e.to_string())?;
        let a = serde_json::to_vec(&exact).unwrap();
        let b = serde_json::to_vec(&heuristic).unwrap();
        if a != b {
            return Err(format!("corpus {i}: M=100 output differs from exact"));
        }
    }
    Ok("200 corpora byte-identical".into())
}

fn cphf_accuracy_trend() -> Outcome {
    const MARGINS: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];
    const SEEDS: u64 = 30;
    const N: usize = 50;
    let started = Instant::now();
    let mut sums = [0.0; 5];
    for seed in 0..SEEDS {
        let (corpus, reg) = setup(100_000, 7_000 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng);
        let all = corpus.all_rows();
        let exact = rank_and_select(&corpus, &all, &spec, None, N, &reg).map_err(|e| e.to_string())?;
        for (sum, &m) in sums.iter_mut().zip(&MARGINS) {
            let pruned = cphf_prune(&corpus, &all, &spec, N, m, &reg).map_err(|e| e.to_string())?;
            let heuristic = rank_and_select(&corpus, &pruned, &spec, None, N, &reg).map_err(|e| e.to_string())?;
            *sum += cphf_accuracy(&exact, &heuristic).map_err(|e| e.to_string())?;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / SEEDS as f64).collect();
    let shown: Vec<String> = MARGINS
        .iter()
        .zip(&means)
        .map(|(m, a)| format!("M={m}: {a:.4}"))
        .collect();
    let shown = shown.join(", ");
    let drops: Vec<f64> = means.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
    if drops.len() > 1 || drops.iter().any(|d| *d > 0.02) {
        return Err(format!("trend not non-decreasing: {shown}"));
    }
    if means[4] != 1.0 {
        return Err(format!("mean at M=100 is not 1.0: {shown}"));
    }
    let took = check_time(started, Duration::from_secs(300))?;
    Ok(format!("{shown} in {took:.2?}"))
}

fn table3_reconstruction() -> Outcome {
    let started = Instant::now();
    let r = fit_record_size();
    let report = table3_report(r);
    let fraction = report.matched as f64 / report.cells.len() as f64;
    let cell = |k: u64, n: u64| {
        report
            .cells
            .iter()
            .find(|c| c.k == k && c.n == n)
            .map(|c| c.within_tolerance)
            .unwrap_or(false)
    };
    let took = check_time(started, Duration::from_secs(5))?;
    let detail = format!(
        "r = {r:.2} B, {}/{} cells within max(5%, 0.3 MB), {took:.2?}",
        report.matched,
        report.cells.len()
    );
    if fraction < 0.9 {
        return Err(detail);
    }
    if !cell(10, 100) || !cell(500_000, 1_000_000) {
        return Err(format!("{detail}; a named cell is out of tolerance"));
    }
    Ok(detail)
}

fn closed_form_timing() -> Outcome {
    const MS: u64 = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let filter = FilterExpr::all();
    let spec = PrioritySpec::uniform(&FIVE_PROPERTIES);
    for case in 0..50 {
        let nodes = rng.random_range(1..=8);
        let t_pro: Vec<u64> = (0..nodes).map(|_| rng.random_range(0..50 * MS)).collect();
        let mut t = ClusterTopology::uniform(
            nodes,
            0,
            200,
            ProcessingModel::Fixed {
                per_node_ns: t_pro.clone(),
            },
        );
        for i in 0..nodes {
            for j in i + 1..nodes {
                let l = Link::latency(rng.random_range(0..30 * MS));
                t.links[i][j] = l;
                t.links[j][i] = l;
            }
        }
        let whole = generate(GeneratorConfig::new(nodes * 40, case)).unwrap();
        let mut reg = PropertyRegistry::canonical();
        whole.observe_into(&mut reg).unwrap();
        let corpora = whole.split(nodes).unwrap();
        let params = SearchParams {
            filter: &filter,
            priorities: &spec,
            ideal: None,
            n: 10,
            margin_m: None,
        };
        let chain = search_chain(&t, &corpora, &reg, &params).map_err(|e| e.to_string())?;
        if Some(chain.total_time_ns) != chain_time_ns(&t, &t_pro) {
            return Err(format!(
                "case {case}: chain {} ns vs closed form {:?}",
                chain.total_time_ns,
                chain_time_ns(&t, &t_pro)
            ));
        }
        let parallel = search_parallel(&t, &corpora, &reg, &params).map_err(|e| e.to_string())?;
        if Some(parallel.remote_phase_ns) != parallel_time_ns(&t, &t_pro) {
            return Err(format!(
                "case {case}: parallel {} ns vs closed form {:?}",
                parallel.remote_phase_ns,
                parallel_time_ns(&t, &t_pro)
            ));
        }
    }
    Ok("50 parameterizations exact".into())
}

fn strategy_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let filter = FilterExpr::all();
    let mut runs = 0;
    for instance in 0..100u64 {
        let per_node: Vec<usize> = (0..4).map(|_| rng.random_range(50..=2_000)).collect();
        // One corpus cut into uneven slices keeps uids unique across nodes.
        let whole = generate(GeneratorConfig::new(per_node.iter().sum(), instance)).unwrap();
        let mut records = whole.records();
        let corpora: Vec<Corpus> = per_node
            .iter()
            .map(|&c| Corpus::from_records(records.by_ref().take(c)).unwrap())
            .collect();
        let mut reg = PropertyRegistry::canonical();
        for c in &corpora {
            c.observe_into(&mut reg).unwrap();
        }
        let spec = random_spec(&mut rng);
        let n = rng.random_range(11..=100);
        let processing = ProcessingModel::Fixed {
            per_node_ns: (0..4).map(|_| rng.random_range(0..10_000_000)).collect(),
        };
        let t = ClusterTopology::uniform(4, rng.random_range(0..5_000_000), 200, processing);
        let params = SearchParams {
            filter: &filter,
            priorities: &spec,
            ideal: None,
            n,
            margin_m: None,
        };
        let all: Vec<SensorDescription> = corpora.iter().flat_map(|c| c.records()).collect();
        let oracle: Vec<String> = brute_force_rank(&all, &all, &criteria(&spec, &reg), n)
            .into_iter()
            .map(|(u, _)| u)
            .collect();
        let mut reference: Option<Vec<String>> = None;
        for strategy in [
            Strategy::Chain,
            Strategy::Parallel,
            Strategy::ParallelK { k: 2 },
            Strategy::ParallelK { k: 5 },
            Strategy::ParallelK { k: 10 },
        ] {
            let out = simulate_timeline(strategy, &t, &corpora, &reg, &params).map_err(|e| e.to_string())?;
            runs += 1;
            let uids: Vec<String> = out.result.entries.iter().map(|e| e.uid.clone()).collect();
            match &reference {
                None => reference = Some(uids.clone()),
                Some(r) if *r != uids => {
                    return Err(format!("instance {instance}: {} differs from chain", strategy.name()));
                }
                Some(_) => {}
            }
            if uids != oracle {
                return Err(format!(
                    "instance {instance}: {} differs from the global oracle",
                    strategy.name()
                ));
            }
            if let Strategy::ParallelK { k } = strategy {
                let pool: BTreeSet<&String> = out.candidate_pool.iter().collect();
                if !oracle.iter().all(|u| pool.contains(u)) {
                    return Err(format!("instance {instance}: k={k} fetch misses a global top-N record"));
                }
            }
        }
    }
    Ok(format!(
        "100 instances, {runs} runs agree; every k-extension pool covers the top N"
    ))
}

fn filter_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seen = BTreeSet::new();
    let mut corpus_data: Option<(Corpus, PropertyRegistry, Vec<SensorDescription>)> = None;
    for i in 0..500u32 {
        if i % 50 == 0 {
            let (c, reg) = setup(1_000, 300 + u64::from(i));
            let records = c.records().collect();
            corpus_data = Some((c, reg, records));
        }
        let (corpus, reg, records) = corpus_data.as_ref().unwrap();
        let scenario = (i % u32::from(SCENARIO_COUNT)) as u8 + 1;
        seen.insert(scenario);
        let f = scenario_filter(&mut rng, scenario, &FIVE_PROPERTIES, records);
        let got: Vec<String> = evaluate(&f, corpus, reg)
            .map_err(|e| e.to_string())?
            .rows
            .iter()
            .map(|&r| corpus.uid(r).to_string())
            .collect();
        if got != brute_force_filter(&f, records) {
            return Err(format!(
                "filter {i} (scenario {scenario}) `{f}` differs from brute force"
            ));
        }
        let reparsed = parse_filter(&f.to_string()).map_err(|e| format!("filter {i}: {e}"))?;
        if reparsed != f.coalesced() {
            return Err(format!("filter {i}: text form does not round-trip"));
        }
    }
    Ok(format!("500 filters over {} scenario shapes match", seen.len()))
}

fn registry_with(values: &[f64]) -> PropertyRegistry {
    let mut reg = PropertyRegistry::canonical();
    for &v in values {
        reg.register_observation("accuracy", v).unwrap();
    }
    reg
}

fn normalization_suite() -> Outcome {
    const CASES: u32 = 10_000;
    let values = || prop::collection::vec(-1e6..1e6f64, 1..20);
    let runner = || {
        TestRunner::new(Config {
            cases: CASES,
            failure_persistence: None,
            ..Config::default()
        })
    };
    let mut total = 0;
    let mut run = |name: &str, result: Result<(), String>| -> Result<(), String> {
        total += CASES;
        result.map_err(|e| format!("{name}: {e}"))
    };

    run(
        "bounds",
        runner()
            .run(&values(), |vs| {
                let reg = registry_with(&vs);
                for &v in &vs {
                    let x = reg.normalize("accuracy", v).unwrap();
                    prop_assert!((0.0..=1.0).contains(&x));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;
    run(
        "monotonicity",
        runner()
            .run(&values(), |vs| {
                let reg = registry_with(&vs);
                let mut sorted = vs.clone();
                sorted.sort_by(f64::total_cmp);
                let xs: Vec<f64> = sorted.iter().map(|&v| reg.normalize("accuracy", v).unwrap()).collect();
                prop_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;
    run(
        "renormalization",
        runner()
            .run(&(values(), -1e6..1e6f64), |(first, extra)| {
                let mut reg = registry_with(&first);
                reg.register_observation("accuracy", extra).unwrap();
                let lo = first.iter().copied().chain([extra]).fold(f64::INFINITY, f64::min);
                let hi = first.iter().copied().chain([extra]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(reg.bounds("accuracy").unwrap(), Bounds { min: lo, max: hi });
                for &v in first.iter().chain([&extra]) {
                    let expected = if hi == lo { 0.5 } else { (v - lo) / (hi - lo) };
                    prop_assert_eq!(reg.normalize("accuracy", v).unwrap(), expected);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;
    run(
        "degenerate domain",
        runner()
            .run(&(-1e6..1e6f64, 1usize..5), |(v, repeats)| {
                let reg = registry_with(&vec![v; repeats]);
                prop_assert_eq!(reg.normalize("accuracy", v).unwrap(), 0.5);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;
    Ok(format!("4 properties, {total} generated cases"))
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn desk_scale_performance() -> Outcome {
    let gen_started = Instant::now();
    let (corpus, reg) = setup(1_000_000, 9);
    let generated = gen_started.elapsed();
    let filter = parse_filter("accuracy >= 20 AND reliability in [10, 95]").map_err(|e| e.to_string())?;
    let spec = PrioritySpec::new(100.0)
        .with("accuracy", 90.0)
        .with("availability", 40.0)
        .with("cost_of_data_generation", 25.0)
        .with("reliability", 70.0)
        .with("response_time", 55.0);
    let params = SearchParams {
        filter: &filter,
        priorities: &spec,
        ideal: None,
        n: 50,
        margin_m: Some(50.0),
    };
    let started = Instant::now();
    let run = run_search(&corpus, &reg, &params).map_err(|e| e.to_string())?;
    let took = started.elapsed();
    let t = run.timing;
    let peak = peak_rss_bytes();
    let peak_text = peak.map_or("unavailable".to_string(), |b| format!("{:.0} MB", b as f64 / 1e6));
    let detail = format!(
        "filter {:.1} ms, prune {:.1} ms, rank {:.1} ms, total {took:.2?} (corpus built in {generated:.2?}); peak RSS {peak_text}",
        t.filter_ms, t.prune_ms, t.rank_ms
    );
    if took >= Duration::from_secs(60) {
        return Err(detail);
    }
    if peak.is_some_and(|b| b >= 4_000_000_000) {
        return Err(detail);
    }
    if run.result.entries.len() != 50 {
        return Err(format!("{detail}; returned {} entries", run.result.entries.len()));
    }
    Ok(detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact ranking oracle", exact_ranking_oracle),
        ("CPHF no-op at M=100", cphf_noop_law),
        ("CPHF accuracy trend", cphf_accuracy_trend),
        ("saving table reconstruction", table3_reconstruction),
        ("closed-form timing agreement", closed_form_timing),
        ("strategy equivalence", strategy_equivalence),
        ("filter oracle", filter_oracle),
        ("normalization properties", normalization_suite),
        ("desk-scale performance", desk_scale_performance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
