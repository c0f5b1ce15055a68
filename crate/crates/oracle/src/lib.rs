//! Slow, obviously-correct reference implementations.
//!
//! Nothing here calls into the engine's evaluation or ranking code; only the
//! plain data types are shared. Every function works on whole
//! [`SensorDescription`] records and recomputes everything from scratch.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use sensorsift_core::query::{Atom, CategoricalField, CmpOp, FilterExpr, Interval};
use sensorsift_core::SensorDescription;

/// Direct predicate evaluation of one atom.
pub fn atom_matches(atom: &Atom, s: &SensorDescription) -> bool {
    match atom {
        Atom::CategoricalEq { field, value } => match field {
            CategoricalField::SensorType => s.sensor_type == *value,
            CategoricalField::Region => s.region == *value,
        },
        Atom::Comparison { key, op, threshold } => match s.raw_values.get(key) {
            None => false,
            Some(&v) => match op {
                CmpOp::Lt => v < *threshold,
                CmpOp::Gt => v > *threshold,
                CmpOp::Le => v <= *threshold,
                CmpOp::Ge => v >= *threshold,
                CmpOp::Eq => (v - threshold).abs() <= 1e-9,
            },
        },
        Atom::RangeUnion { key, ranges } => match s.raw_values.get(key) {
            None => false,
            Some(&v) => ranges.iter().any(|r| r.lo <= v && v <= r.hi),
        },
    }
}

pub fn filter_matches(f: &FilterExpr, s: &SensorDescription) -> bool {
    f.conjuncts.iter().all(|a| atom_matches(a, s))
}

/// Uids of matching sensors, ascending.
pub fn brute_force_filter(f: &FilterExpr, records: &[SensorDescription]) -> Vec<String> {
    let mut out: Vec<String> = records
        .iter()
        .filter(|s| filter_matches(f, s))
        .map(|s| s.uid.clone())
        .collect();
    out.sort();
    out
}

/// One ranking criterion: property key, slider position and whether lower
/// raw values are better.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub key: String,
    pub slider: f64,
    pub lower_is_better: bool,
}

/// Exhaustive ranking: min/max over `bounds_from`, weights from the slider
/// spread, polarity-best ideal, full sort by (distance, uid).
pub fn brute_force_rank(
    records: &[SensorDescription],
    bounds_from: &[SensorDescription],
    criteria: &[Criterion],
    n: usize,
) -> Vec<(String, f64)> {
    let mut sorted: Vec<&Criterion> = criteria.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));

    let lo_slider = sorted.iter().map(|c| c.slider).fold(f64::INFINITY, f64::min);
    let hi_slider = sorted.iter().map(|c| c.slider).fold(f64::NEG_INFINITY, f64::max);
    let spread = hi_slider - lo_slider;

    let mut bounds: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for c in &sorted {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in bounds_from {
            if let Some(&v) = s.raw_values.get(&c.key) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        bounds.insert(&c.key, (lo, hi));
    }

    let mut scored: Vec<(String, f64)> = records
        .iter()
        .map(|s| {
            let mut total = 0.0;
            for c in &sorted {
                let (lo, hi) = bounds[c.key.as_str()];
                let v = s.raw_values[&c.key];
                let norm = if hi == lo { 0.5 } else { (v - lo) / (hi - lo) };
                let ideal = if c.lower_is_better { 0.0 } else { 1.0 };
                let w = if spread > 0.0 { c.slider / spread } else { 1.0 };
                total += w * ((ideal - norm) * (ideal - norm));
            }
            (s.uid.clone(), total.sqrt())
        })
        .collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}

/// Number of distinct filter shapes produced by [`scenario_filter`].
pub const SCENARIO_COUNT: u8 = 18;

fn pick_value<R: Rng>(rng: &mut R, records: &[SensorDescription], key: &str) -> f64 {
    let s = records.choose(rng).expect("non-empty corpus");
    s.raw_values.get(key).copied().unwrap_or(50.0)
}

fn ranges<R: Rng>(rng: &mut R, count: usize) -> Vec<Interval> {
    (0..count)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..100.0);
            let b: f64 = rng.random_range(0.0..100.0);
            Interval {
                lo: a.min(b),
                hi: a.max(b),
            }
        })
        .collect()
}

/// Random filter in one of the 18 relational-expression shapes over five
/// properties, numbered `1..=18`:
///
/// 1. no relational operator; 2–5. one to four properties restricted by
/// `>=`; 6–10. all five by `>=`, `<=`, `=`, `<`, `>`; 11–14. one to four
/// properties restricted by `>=` and `<=`; 15. all five by `<=` and `>=`;
/// 16. all five by `<` and `>`; 17. two ranges per property; 18. three.
pub fn scenario_filter<R: Rng>(
    rng: &mut R,
    scenario: u8,
    keys: &[&str; 5],
    records: &[SensorDescription],
) -> FilterExpr {
    let mut conjuncts = Vec::new();
    let cmp = |key: &str, op: CmpOp, threshold: f64| Atom::Comparison {
        key: key.to_string(),
        op,
        threshold,
    };
    let mut shuffled = keys.to_vec();
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    match scenario {
        1 => {}
        2..=5 => {
            for key in &shuffled[..(scenario - 1) as usize] {
                conjuncts.push(cmp(key, CmpOp::Ge, rng.random_range(0.0..60.0)));
            }
        }
        6..=10 => {
            for key in keys {
                let atom = match scenario {
                    6 => cmp(key, CmpOp::Ge, rng.random_range(0.0..40.0)),
                    7 => cmp(key, CmpOp::Le, rng.random_range(60.0..100.0)),
                    8 => cmp(key, CmpOp::Eq, pick_value(rng, records, key)),
                    9 => cmp(key, CmpOp::Lt, rng.random_range(60.0..100.0)),
                    _ => cmp(key, CmpOp::Gt, rng.random_range(0.0..40.0)),
                };
                conjuncts.push(atom);
            }
        }
        11..=15 => {
            let count = if scenario == 15 { 5 } else { (scenario - 10) as usize };
            for key in &shuffled[..count] {
                let lo = rng.random_range(0.0..50.0);
                let hi = rng.random_range(lo..100.0);
                if rng.random_bool(0.5) {
                    conjuncts.push(cmp(key, CmpOp::Ge, lo));
                    conjuncts.push(cmp(key, CmpOp::Le, hi));
                } else {
                    conjuncts.push(Atom::RangeUnion {
                        key: key.to_string(),
                        ranges: vec![Interval { lo, hi }],
                    });
                }
            }
        }
        16 => {
            for key in keys {
                let lo = rng.random_range(0.0..40.0);
                let hi = rng.random_range(60.0..100.0);
                conjuncts.push(cmp(key, CmpOp::Gt, lo));
                conjuncts.push(cmp(key, CmpOp::Lt, hi));
            }
        }
        17 | 18 => {
            let count = if scenario == 17 { 2 } else { 3 };
            for key in keys {
                conjuncts.push(Atom::RangeUnion {
                    key: key.to_string(),
                    ranges: ranges(rng, count),
                });
            }
        }
        other => panic!("no scenario {other}"),
    }
    if rng.random_bool(0.25) {
        let s = records.choose(rng).expect("non-empty corpus");
        conjuncts.push(Atom::CategoricalEq {
            field: CategoricalField::SensorType,
            value: s.sensor_type.clone(),
        });
    }
    if rng.random_bool(0.15) {
        conjuncts.push(Atom::CategoricalEq {
            field: CategoricalField::Region,
            value: "nowhere".to_string(),
        });
    }
    FilterExpr::new(conjuncts).expect("generated filters are well formed")
}
