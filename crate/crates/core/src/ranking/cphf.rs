//! Priority-ordered heuristic pruning of ranking candidates.
//!
//! With `r = |candidates| - n` sensors removable, every included property
//! gets a share `q_i = w_i / sum(w)` of that budget. Properties are visited
//! in descending `q_i`; each pass orders the surviving sensors best-first
//! on that property (polarity adjusted) and drops
//! `floor(r * q_i * (100 - m) / 100)` from the bottom. The margin `m`
//! (percent) keeps part of the budget: `m = 100` removes nothing.
//!
//! Passes compound: each one sorts what the previous pass left.

use std::cmp::Ordering;

use super::index::RankedResult;
use super::priority::{compute_weights, PrioritySpec};
use crate::corpus::{Corpus, RowId};
use crate::error::{Error, Result};
use crate::model::PropertyRegistry;

/// Absorbs rounding in `q_i` so that an exact share such as 40% of 100
/// removes 40 rather than 39.
const REMOVAL_SLACK: f64 = 1e-9;

/// Number of sensors a single pass removes.
pub fn removal_count(removable: usize, share: f64, margin_m: f64) -> usize {
    let x = removable as f64 * share * (100.0 - margin_m) / 100.0;
    (x + REMOVAL_SLACK).floor().max(0.0) as usize
}

/// Prunes `candidates` to a superset of size at least `n` to feed
/// [`rank_and_select`](super::rank_and_select). Output is ascending by uid.
pub fn cphf_prune(
    corpus: &Corpus,
    candidates: &[RowId],
    spec: &PrioritySpec,
    n: usize,
    margin_m: f64,
    registry: &PropertyRegistry,
) -> Result<Vec<RowId>> {
    if !(0.0..=100.0).contains(&margin_m) {
        return Err(Error::InvalidArgument(format!("margin {margin_m} is outside [0, 100]")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let weights = compute_weights(spec)?;
    if candidates.len() <= n {
        return Ok(candidates.to_vec());
    }
    let removable = candidates.len() - n;

    let mut order: Vec<(String, f64)> = weights.fractions().into_iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut surviving = candidates.to_vec();
    for (key, share) in order {
        let polarity = registry.polarity(&key)?;
        let column = corpus.normalized_column(registry, &key)?;
        if let Some(&row) = surviving.iter().find(|&&r| column[r as usize].is_nan()) {
            return Err(Error::MissingProperty {
                key,
                uid: corpus.uid(row).to_string(),
            });
        }
        let remove = removal_count(removable, share, margin_m).min(surviving.len() - n);
        if remove == 0 {
            continue;
        }
        let keep = surviving.len() - remove;
        // best first; ties by uid
        let best_first = |a: &RowId, b: &RowId| -> Ordering {
            let va = polarity.adjust(column[*a as usize]);
            let vb = polarity.adjust(column[*b as usize]);
            vb.total_cmp(&va).then(a.cmp(b))
        };
        surviving.select_nth_unstable_by(keep - 1, best_first);
        surviving.truncate(keep);
    }
    surviving.sort_unstable();
    Ok(surviving)
}

/// Fraction of the exact top-n that the heuristic run also selected.
pub fn cphf_accuracy(exact: &RankedResult, heuristic: &RankedResult) -> Result<f64> {
    if exact.truncated_to != heuristic.truncated_to {
        return Err(Error::KeyMismatch {
            left_only: vec![format!("n={}", exact.truncated_to)],
            right_only: vec![format!("n={}", heuristic.truncated_to)],
        });
    }
    let n = exact.truncated_to;
    if n == 0 {
        return Ok(1.0);
    }
    let exact: std::collections::HashSet<&str> = exact.entries.iter().map(|e| e.uid.as_str()).collect();
    let common = heuristic
        .entries
        .iter()
        .filter(|e| exact.contains(e.uid.as_str()))
        .count();
    Ok(common as f64 / n as f64)
}
