//! End-to-end local search: filter, optionally prune, rank, select.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RowId};
use crate::error::Result;
use crate::model::PropertyRegistry;
use crate::query::{evaluate, FilterExpr};
use crate::ranking::{
    compute_weights, cphf_prune, ideal_from_native, rank_and_select, IdealSensor, PrioritySpec, RankedResult,
    WeightVector,
};

#[derive(Debug, Clone)]
pub struct SearchParams<'a> {
    pub filter: &'a FilterExpr,
    pub priorities: &'a PrioritySpec,
    /// User ideal in native units; unspecified keys use the best corner.
    pub ideal: Option<&'a BTreeMap<String, f64>>,
    pub n: usize,
    /// CPHF margin in percent, `None` to rank every candidate.
    pub margin_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub filter_ms: f64,
    pub prune_ms: f64,
    pub rank_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub candidates_before: usize,
    pub candidates_after_prune: usize,
    pub excluded_missing_property: usize,
    /// How many fewer sensors than requested were available.
    pub shortfall: usize,
}

#[derive(Debug, Clone)]
pub struct SearchRun {
    pub result: RankedResult,
    pub weights: WeightVector,
    pub ideal: IdealSensor,
    pub diagnostics: SearchDiagnostics,
    pub timing: PhaseTiming,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Filter rows, then drop rows lacking any included priority property.
pub fn candidates(
    corpus: &Corpus,
    registry: &PropertyRegistry,
    filter: &FilterExpr,
    priorities: &PrioritySpec,
) -> Result<(Vec<RowId>, usize)> {
    let selection = evaluate(filter, corpus, registry)?;
    let mut excluded = selection.excluded_missing;
    let keys = priorities.included_keys();
    let columns: Vec<Option<&[f64]>> = keys.iter().map(|k| corpus.column(k)).collect();
    let rows: Vec<RowId> = selection
        .rows
        .into_iter()
        .filter(|&r| {
            let ok = columns.iter().all(|c| c.is_some_and(|c| !c[r as usize].is_nan()));
            excluded += usize::from(!ok);
            ok
        })
        .collect();
    Ok((rows, excluded))
}

pub fn run_search(corpus: &Corpus, registry: &PropertyRegistry, params: &SearchParams<'_>) -> Result<SearchRun> {
    params.priorities.validate_with(registry)?;
    let weights = compute_weights(params.priorities)?;
    let keys: Vec<&str> = weights.keys().collect();
    let empty = BTreeMap::new();
    let ideal = ideal_from_native(registry, &keys, params.ideal.unwrap_or(&empty))?;

    let t = Instant::now();
    let (rows, excluded) = candidates(corpus, registry, params.filter, params.priorities)?;
    let filter_ms = ms_since(t);

    let t = Instant::now();
    let before = rows.len();
    let rows = match params.margin_m {
        Some(m) => cphf_prune(corpus, &rows, params.priorities, params.n, m, registry)?,
        None => rows,
    };
    let prune_ms = ms_since(t);

    let t = Instant::now();
    let result = rank_and_select(corpus, &rows, params.priorities, Some(&ideal), params.n, registry)?;
    let rank_ms = ms_since(t);

    Ok(SearchRun {
        diagnostics: SearchDiagnostics {
            candidates_before: before,
            candidates_after_prune: rows.len(),
            excluded_missing_property: excluded,
            shortfall: params.n.saturating_sub(before),
        },
        result,
        weights,
        ideal,
        timing: PhaseTiming {
            filter_ms,
            prune_ms,
            rank_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, GeneratorConfig};
    use crate::query::parse_filter;

    fn setup() -> (Corpus, PropertyRegistry) {
        let corpus = generate(GeneratorConfig::new(500, 11)).unwrap();
        let mut reg = PropertyRegistry::canonical();
        corpus.observe_into(&mut reg).unwrap();
        (corpus, reg)
    }

    #[test]
    fn shortfall_when_fewer_matches_than_n() {
        let (c, reg) = setup();
        let filter = parse_filter("accuracy >= 99").unwrap();
        let spec = PrioritySpec::uniform(&["accuracy", "latency"]);
        // latency is not in the corpus; every match is excluded
        let run = run_search(
            &c,
            &reg,
            &SearchParams {
                filter: &filter,
                priorities: &PrioritySpec::uniform(&["accuracy"]),
                ideal: None,
                n: 500,
                margin_m: None,
            },
        )
        .unwrap();
        assert_eq!(run.result.len(), run.diagnostics.candidates_before);
        assert_eq!(run.diagnostics.shortfall, 500 - run.result.len());

        let (rows, excluded) = candidates(&c, &reg, &filter, &spec).unwrap();
        assert!(rows.is_empty());
        assert!(excluded > 0);
    }

    #[test]
    fn full_margin_equals_no_heuristic() {
        let (c, reg) = setup();
        let filter = FilterExpr::all();
        let spec = PrioritySpec::new(100.0)
            .with("accuracy", 80.0)
            .with("response_time", 20.0);
        let run = |margin_m| {
            run_search(
                &c,
                &reg,
                &SearchParams {
                    filter: &filter,
                    priorities: &spec,
                    ideal: None,
                    n: 20,
                    margin_m,
                },
            )
            .unwrap()
            .result
        };
        assert_eq!(run(Some(100.0)), run(None));
    }
}
