use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ast::{Atom, CategoricalField, FilterExpr};
use crate::corpus::{Corpus, RowId};
use crate::error::Result;
use crate::model::{PropertyRegistry, SensorDescription};

/// Corpora at least this large are scanned in parallel chunks.
const PARALLEL_SCAN_MIN: usize = 1 << 16;
const CHUNK: usize = 1 << 14;

/// Rows matching a filter, ascending by uid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub rows: Vec<RowId>,
    /// Rows dropped because they lack a property the filter references.
    pub excluded_missing: usize,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

enum Compiled<'a> {
    Never,
    Code {
        codes: &'a [u32],
        code: u32,
    },
    Column {
        values: &'a [f64],
        atom: &'a Atom,
    },
    /// The corpus has no column for the referenced property.
    Missing,
}

struct Plan<'a> {
    checks: Vec<Compiled<'a>>,
    /// Columns referenced by the filter; a NaN in any of them excludes the row.
    referenced: Vec<&'a [f64]>,
    any_missing_column: bool,
}

impl Plan<'_> {
    /// `(matches, excluded_for_missing)`.
    fn test(&self, row: usize) -> (bool, bool) {
        if self.any_missing_column || self.referenced.iter().any(|c| c[row].is_nan()) {
            return (false, true);
        }
        let ok = self.checks.iter().all(|c| match c {
            Compiled::Never | Compiled::Missing => false,
            Compiled::Code { codes, code } => codes[row] == *code,
            Compiled::Column { values, atom } => atom.holds_on(values[row]),
        });
        (ok, false)
    }
}

fn compile<'a>(filter: &'a FilterExpr, corpus: &'a Corpus, registry: &PropertyRegistry) -> Result<Plan<'a>> {
    for key in filter.properties() {
        registry.get(key)?;
    }
    let mut referenced: Vec<&[f64]> = Vec::new();
    let mut any_missing_column = false;
    let mut checks = Vec::with_capacity(filter.conjuncts.len());
    for atom in &filter.conjuncts {
        let compiled = match atom {
            Atom::CategoricalEq { field, value } => {
                let (codes, code) = match field {
                    CategoricalField::SensorType => (corpus.type_codes(), corpus.type_code(value)),
                    CategoricalField::Region => (corpus.region_codes(), corpus.region_code(value)),
                };
                match code {
                    Some(code) => Compiled::Code { codes, code },
                    None => Compiled::Never,
                }
            }
            Atom::Comparison { key, .. } | Atom::RangeUnion { key, .. } => match corpus.column(key) {
                Some(values) => {
                    if !referenced.iter().any(|c| std::ptr::eq(*c, values)) {
                        referenced.push(values);
                    }
                    Compiled::Column { values, atom }
                }
                None => {
                    any_missing_column = true;
                    Compiled::Missing
                }
            },
        };
        checks.push(compiled);
    }
    Ok(Plan {
        checks,
        referenced,
        any_missing_column,
    })
}

fn scan(plan: &Plan<'_>, start: usize, end: usize) -> (Vec<RowId>, usize) {
    let mut rows = Vec::new();
    let mut excluded = 0;
    for row in start..end {
        let (ok, missing) = plan.test(row);
        if ok {
            rows.push(row as RowId);
        }
        excluded += missing as usize;
    }
    (rows, excluded)
}

/// Returns the rows of `corpus` satisfying every conjunct, ascending by uid.
///
/// Sensors lacking any referenced property are excluded and counted in
/// [`Selection::excluded_missing`].
pub fn evaluate(filter: &FilterExpr, corpus: &Corpus, registry: &PropertyRegistry) -> Result<Selection> {
    let plan = compile(filter, corpus, registry)?;
    let n = corpus.len();
    if n < PARALLEL_SCAN_MIN {
        let (rows, excluded_missing) = scan(&plan, 0, n);
        return Ok(Selection { rows, excluded_missing });
    }
    let parts: Vec<(Vec<RowId>, usize)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| scan(&plan, c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .collect();
    let mut rows = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
    let mut excluded_missing = 0;
    for (part, excluded) in parts {
        rows.extend(part);
        excluded_missing += excluded;
    }
    Ok(Selection { rows, excluded_missing })
}

/// Number of matching rows, without materializing them.
pub fn count_matches(filter: &FilterExpr, corpus: &Corpus, registry: &PropertyRegistry) -> Result<usize> {
    let plan = compile(filter, corpus, registry)?;
    let n = corpus.len();
    let count = |start: usize, end: usize| (start..end).filter(|&r| plan.test(r).0).count();
    if n < PARALLEL_SCAN_MIN {
        return Ok(count(0, n));
    }
    Ok((0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| count(c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .sum())
}

/// Record-level evaluation, for callers holding [`SensorDescription`]s.
/// Output is ascending by uid.
pub fn evaluate_records<'a>(
    filter: &FilterExpr,
    records: impl IntoIterator<Item = &'a SensorDescription>,
    registry: &PropertyRegistry,
) -> Result<Vec<SensorDescription>> {
    let corpus = Corpus::from_records(records.into_iter().cloned())?;
    let selection = evaluate(filter, &corpus, registry)?;
    Ok(selection.rows.iter().map(|&r| corpus.record(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::query::{parse_filter, CmpOp, Interval};

    fn corpus_with_accuracy(values: &[f64]) -> Corpus {
        Corpus::from_records(values.iter().enumerate().map(|(i, v)| {
            SensorDescription::new(format!("s{i}"), "temperature", "canberra").with_value("accuracy", *v)
        }))
        .unwrap()
    }

    fn registry() -> PropertyRegistry {
        PropertyRegistry::canonical()
    }

    fn uids(corpus: &Corpus, sel: &Selection) -> Vec<String> {
        sel.rows.iter().map(|&r| corpus.uid(r).to_string()).collect()
    }

    #[test]
    fn vacuous_filter_returns_everything() {
        let c = corpus_with_accuracy(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let sel = evaluate(&FilterExpr::all(), &c, &registry()).unwrap();
        assert_eq!(sel.rows, [0, 1, 2, 3, 4]);
        assert_eq!(
            count_matches(&FilterExpr::all(), &corpus_with_accuracy(&[0.0; 7]), &registry()).unwrap(),
            7
        );
    }

    #[test]
    fn greater_or_equal_threshold() {
        let c = corpus_with_accuracy(&[70.0, 80.0, 90.0]);
        let f = FilterExpr::new(vec![Atom::Comparison {
            key: "accuracy".into(),
            op: CmpOp::Ge,
            threshold: 80.0,
        }])
        .unwrap();
        assert_eq!(uids(&c, &evaluate(&f, &c, &registry()).unwrap()), ["s1", "s2"]);
    }

    #[test]
    fn range_union() {
        let c = corpus_with_accuracy(&[55.0, 70.0, 90.0]);
        let f = FilterExpr::new(vec![Atom::RangeUnion {
            key: "accuracy".into(),
            ranges: vec![Interval { lo: 80.0, hi: 95.0 }, Interval { lo: 50.0, hi: 60.0 }],
        }])
        .unwrap();
        assert_eq!(uids(&c, &evaluate(&f, &c, &registry()).unwrap()), ["s0", "s2"]);
    }

    #[test]
    fn nothing_matches() {
        let c = corpus_with_accuracy(&[1.0, 2.0]);
        let f = parse_filter("accuracy > 100").unwrap();
        assert_eq!(count_matches(&f, &c, &registry()).unwrap(), 0);
    }

    #[test]
    fn equality_uses_tolerance() {
        let c = corpus_with_accuracy(&[80.0, 80.0 + 5e-10, 80.0 + 1e-6]);
        let f = parse_filter("accuracy = 80").unwrap();
        assert_eq!(evaluate(&f, &c, &registry()).unwrap().rows, [0, 1]);
    }

    #[test]
    fn missing_property_excludes_and_counts() {
        let c = Corpus::from_records([
            SensorDescription::new("a", "t", "r").with_value("accuracy", 90.0),
            SensorDescription::new("b", "t", "r"),
            SensorDescription::new("c", "t", "r").with_value("trust", 1.0),
        ])
        .unwrap();
        let f = parse_filter("accuracy >= 0").unwrap();
        let sel = evaluate(&f, &c, &registry()).unwrap();
        assert_eq!(sel.rows, [0]);
        assert_eq!(sel.excluded_missing, 2);

        // no sensor carries `latency` at all
        let f = parse_filter("latency >= 0").unwrap();
        let sel = evaluate(&f, &c, &registry()).unwrap();
        assert!(sel.rows.is_empty());
        assert_eq!(sel.excluded_missing, 3);
    }

    #[test]
    fn unknown_property_is_an_error() {
        let c = corpus_with_accuracy(&[1.0]);
        let f = parse_filter("colour >= 1").unwrap();
        assert!(matches!(evaluate(&f, &c, &registry()), Err(Error::UnknownProperty(_))));
        assert!(matches!(
            count_matches(&f, &c, &registry()),
            Err(Error::UnknownProperty(_))
        ));
    }

    #[test]
    fn categorical_filters() {
        let c = Corpus::from_records([
            SensorDescription::new("a", "temperature", "canberra"),
            SensorDescription::new("b", "humidity", "canberra"),
            SensorDescription::new("c", "temperature", "sydney"),
        ])
        .unwrap();
        let f = parse_filter("type = temperature AND region = canberra").unwrap();
        assert_eq!(evaluate(&f, &c, &registry()).unwrap().rows, [0]);
        let f = parse_filter("type = thermometer").unwrap();
        assert!(evaluate(&f, &c, &registry()).unwrap().is_empty());
    }

    #[test]
    fn parallel_scan_matches_sequential_order() {
        let n = PARALLEL_SCAN_MIN + 12_345;
        let values: Vec<f64> = (0..n).map(|i| (i * 7919 % 1000) as f64 / 10.0).collect();
        let c = Corpus::from_records(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| SensorDescription::new(format!("s{i:08}"), "t", "r").with_value("accuracy", *v)),
        )
        .unwrap();
        let f = parse_filter("(accuracy in [10, 20] OR accuracy in [70, 75.5])").unwrap();
        let sel = evaluate(&f, &c, &registry()).unwrap();
        let expected: Vec<RowId> = (0..n as RowId)
            .filter(|&r| {
                let v = values[r as usize];
                (10.0..=20.0).contains(&v) || (70.0..=75.5).contains(&v)
            })
            .collect();
        assert_eq!(sel.rows, expected);
        assert_eq!(count_matches(&f, &c, &registry()).unwrap(), expected.len());
    }

    #[test]
    fn record_level_evaluation_sorts_by_uid() {
        let records = vec![
            SensorDescription::new("z", "t", "r").with_value("accuracy", 90.0),
            SensorDescription::new("a", "t", "r").with_value("accuracy", 95.0),
        ];
        let out = evaluate_records(&parse_filter("accuracy >= 80").unwrap(), &records, &registry()).unwrap();
        assert_eq!(out.iter().map(|s| s.uid.as_str()).collect::<Vec<_>>(), ["a", "z"]);
    }
}
