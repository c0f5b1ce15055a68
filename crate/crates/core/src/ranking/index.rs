//! Weighted distance to an ideal sensor, and exact top-n selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::priority::{compute_weights, PrioritySpec, WeightVector};
use crate::corpus::{Corpus, RowId};
use crate::error::{Error, Result};
use crate::model::{NormalizedVector, PropertyRegistry, SensorDescription};

const PARALLEL_SCORE_MIN: usize = 1 << 15;

/// Target point in normalized property space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealSensor {
    pub values: BTreeMap<String, f64>,
}

impl IdealSensor {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// The best possible sensor: 1 for properties where higher is better, 0
/// where lower is better.
pub fn default_ideal<S: AsRef<str>>(registry: &PropertyRegistry, keys: &[S]) -> Result<IdealSensor> {
    let mut values = BTreeMap::new();
    for key in keys {
        let key = key.as_ref();
        values.insert(key.to_string(), registry.polarity(key)?.best());
    }
    Ok(IdealSensor { values })
}

/// Ideal sensor from user-entered native-unit values. Keys without a value
/// default to the polarity-best corner. Values beyond the observed bounds
/// are clamped onto them.
pub fn ideal_from_native<S: AsRef<str>>(
    registry: &PropertyRegistry,
    keys: &[S],
    native: &BTreeMap<String, f64>,
) -> Result<IdealSensor> {
    let key_set: BTreeSet<&str> = keys.iter().map(AsRef::as_ref).collect();
    let extra: Vec<String> = native
        .keys()
        .filter(|k| !key_set.contains(k.as_str()))
        .cloned()
        .collect();
    if !extra.is_empty() {
        return Err(Error::KeyMismatch {
            left_only: extra,
            right_only: Vec::new(),
        });
    }
    let mut ideal = default_ideal(registry, keys)?;
    for (key, &value) in native {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("ideal value for `{key}` is not finite")));
        }
        let bounds = registry.bounds(key)?;
        let clamped = value.clamp(bounds.min, bounds.max);
        ideal.values.insert(key.clone(), bounds.normalize(clamped));
    }
    Ok(ideal)
}

fn key_mismatch<'a>(expected: impl Iterator<Item = &'a str>, actual: impl Iterator<Item = &'a str>) -> Option<Error> {
    let expected: BTreeSet<&str> = expected.collect();
    let actual: BTreeSet<&str> = actual.collect();
    if expected == actual {
        return None;
    }
    Some(Error::KeyMismatch {
        left_only: actual.difference(&expected).map(|s| s.to_string()).collect(),
        right_only: expected.difference(&actual).map(|s| s.to_string()).collect(),
    })
}

/// `sqrt(sum_i w_i * (ideal_i - sensor_i)^2)`, summed in ascending key order.
pub fn cpwi(sensor: &NormalizedVector, ideal: &IdealSensor, weights: &WeightVector) -> Result<f64> {
    if let Some(e) = key_mismatch(weights.keys(), sensor.values.keys().map(String::as_str)) {
        return Err(e);
    }
    if let Some(e) = key_mismatch(weights.keys(), ideal.keys()) {
        return Err(e);
    }
    let sum: f64 = weights
        .weights
        .iter()
        .map(|(k, w)| {
            let d = ideal.values[k] - sensor.values[k];
            w * (d * d)
        })
        .sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub uid: String,
    pub cpwi: f64,
}

/// Ascending by CPWI, ties ascending by uid.
pub fn entry_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    a.cpwi.total_cmp(&b.cpwi).then_with(|| a.uid.cmp(&b.uid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub entries: Vec<RankedEntry>,
    pub truncated_to: usize,
}

impl RankedResult {
    pub fn uids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.uid.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges several ranked lists and keeps the best `n`.
    pub fn merge<'a>(lists: impl IntoIterator<Item = &'a [RankedEntry]>, n: usize) -> RankedResult {
        let mut all: Vec<RankedEntry> = lists.into_iter().flat_map(|l| l.iter().cloned()).collect();
        all.sort_by(entry_order);
        all.dedup_by(|a, b| a.uid == b.uid);
        all.truncate(n);
        RankedResult {
            entries: all,
            truncated_to: n,
        }
    }
}

/// Everything needed to score rows of one corpus.
struct Scorer {
    pub keys: Vec<String>,
    weights: Vec<f64>,
    ideal: Vec<f64>,
    columns: Vec<Arc<[f64]>>,
}

impl Scorer {
    pub fn new(
        corpus: &Corpus,
        spec: &PrioritySpec,
        ideal: Option<&IdealSensor>,
        registry: &PropertyRegistry,
    ) -> Result<(Scorer, WeightVector)> {
        let weights = compute_weights(spec)?;
        for key in weights.keys() {
            registry.get(key)?;
        }
        let ideal = match ideal {
            Some(ideal) => {
                if let Some(e) = key_mismatch(weights.keys(), ideal.keys()) {
                    return Err(e);
                }
                ideal.clone()
            }
            None => default_ideal(registry, &weights.keys().collect::<Vec<_>>())?,
        };
        let keys: Vec<String> = weights.keys().map(str::to_string).collect();
        let columns = keys
            .iter()
            .map(|k| corpus.normalized_column(registry, k))
            .collect::<Result<_>>()?;
        Ok((
            Scorer {
                weights: keys.iter().map(|k| weights.weights[k]).collect(),
                ideal: keys.iter().map(|k| ideal.values[k]).collect(),
                keys,
                columns,
            },
            weights,
        ))
    }

    pub fn score(&self, corpus: &Corpus, row: RowId) -> Result<f64> {
        let mut sum = 0.0;
        for (i, col) in self.columns.iter().enumerate() {
            let s = col[row as usize];
            if s.is_nan() {
                return Err(Error::MissingProperty {
                    key: self.keys[i].clone(),
                    uid: corpus.uid(row).to_string(),
                });
            }
            let d = self.ideal[i] - s;
            sum += self.weights[i] * (d * d);
        }
        Ok(sum.sqrt())
    }

    pub fn score_all(&self, corpus: &Corpus, rows: &[RowId]) -> Result<Vec<(f64, RowId)>> {
        if rows.len() >= PARALLEL_SCORE_MIN {
            rows.par_iter().map(|&r| Ok((self.score(corpus, r)?, r))).collect()
        } else {
            rows.iter().map(|&r| Ok((self.score(corpus, r)?, r))).collect()
        }
    }
}

fn score_order(a: &(f64, RowId), b: &(f64, RowId)) -> Ordering {
    // rows are uid-ordered, so the row id is the uid tie-break
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Ranks `candidates` by CPWI and keeps the best `n`. With fewer than `n`
/// candidates every candidate is returned, ranked.
pub fn rank_and_select(
    corpus: &Corpus,
    candidates: &[RowId],
    spec: &PrioritySpec,
    ideal: Option<&IdealSensor>,
    n: usize,
    registry: &PropertyRegistry,
) -> Result<RankedResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let (scorer, _) = Scorer::new(corpus, spec, ideal, registry)?;
    let mut scored = scorer.score_all(corpus, candidates)?;
    if scored.len() > n {
        scored.select_nth_unstable_by(n - 1, score_order);
        scored.truncate(n);
    }
    scored.sort_unstable_by(score_order);
    Ok(RankedResult {
        entries: scored
            .into_iter()
            .map(|(cpwi, row)| RankedEntry {
                uid: corpus.uid(row).to_string(),
                cpwi,
            })
            .collect(),
        truncated_to: n,
    })
}

/// Record-level convenience over [`rank_and_select`].
pub fn rank_records(
    candidates: &[SensorDescription],
    spec: &PrioritySpec,
    ideal: Option<&IdealSensor>,
    n: usize,
    registry: &PropertyRegistry,
) -> Result<RankedResult> {
    let corpus = Corpus::from_records(candidates.iter().cloned())?;
    rank_and_select(&corpus, &corpus.all_rows(), spec, ideal, n, registry)
}
