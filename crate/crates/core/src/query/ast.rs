use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used by `=` on real-valued properties, in native units.
pub const EQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Lt => value < threshold,
            CmpOp::Gt => value > threshold,
            CmpOp::Le => value <= threshold,
            CmpOp::Ge => value >= threshold,
            CmpOp::Eq => (value - threshold).abs() <= EQ_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalField {
    SensorType,
    Region,
}

impl CategoricalField {
    pub fn from_ident(ident: &str) -> Option<Self> {
        match ident {
            "type" | "sensor_type" => Some(CategoricalField::SensorType),
            "region" | "location" => Some(CategoricalField::Region),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CategoricalField::SensorType => "type",
            CategoricalField::Region => "region",
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidFilter(format!(
                "interval [{lo}, {hi}] is empty or not finite"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    CategoricalEq { field: CategoricalField, value: String },
    Comparison { key: String, op: CmpOp, threshold: f64 },
    RangeUnion { key: String, ranges: Vec<Interval> },
}

impl Atom {
    /// Property referenced by the atom, if any.
    pub fn property(&self) -> Option<&str> {
        match self {
            Atom::CategoricalEq { .. } => None,
            Atom::Comparison { key, .. } | Atom::RangeUnion { key, .. } => Some(key),
        }
    }

    /// Evaluates the atom on a raw value of its property.
    pub fn holds_on(&self, value: f64) -> bool {
        match self {
            Atom::CategoricalEq { .. } => false,
            Atom::Comparison { op, threshold, .. } => op.holds(value, *threshold),
            Atom::RangeUnion { ranges, .. } => ranges.iter().any(|r| r.contains(value)),
        }
    }
}

/// Conjunction of atoms. The empty conjunction matches every sensor.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterExpr {
    pub conjuncts: Vec<Atom>,
}

impl FilterExpr {
    pub fn all() -> Self {
        FilterExpr::default()
    }

    /// Builds a filter, checking the structural invariants.
    pub fn new(conjuncts: Vec<Atom>) -> Result<Self> {
        let mut unions = BTreeSet::new();
        for atom in &conjuncts {
            match atom {
                Atom::RangeUnion { key, ranges } => {
                    if ranges.is_empty() {
                        return Err(Error::InvalidFilter(format!("range union on `{key}` has no ranges")));
                    }
                    for r in ranges {
                        Interval::new(r.lo, r.hi)?;
                    }
                    if !unions.insert(key.as_str()) {
                        return Err(Error::InvalidFilter(format!(
                            "more than one range union on `{key}`; put all ranges in one union"
                        )));
                    }
                }
                Atom::Comparison { key, threshold, .. } if !threshold.is_finite() => {
                    return Err(Error::InvalidFilter(format!("threshold for `{key}` is not finite")));
                }
                _ => {}
            }
        }
        Ok(FilterExpr { conjuncts })
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Property keys referenced anywhere in the filter, ascending.
    pub fn properties(&self) -> BTreeSet<&str> {
        self.conjuncts.iter().filter_map(Atom::property).collect()
    }

    /// Folds a `p >= a AND p <= b` pair into `p in [a, b]`.
    ///
    /// Only applies when the property has exactly one `>=`, exactly one `<=`,
    /// no existing range union, and `a <= b`. Strict bounds are left alone
    /// because a closed interval would admit the endpoints.
    pub fn coalesced(&self) -> FilterExpr {
        #[derive(Default)]
        struct Seen {
            ge: Vec<usize>,
            le: Vec<usize>,
            union: bool,
        }
        let mut per_key: BTreeMap<&str, Seen> = BTreeMap::new();
        for (i, atom) in self.conjuncts.iter().enumerate() {
            match atom {
                Atom::Comparison { key, op: CmpOp::Ge, .. } => per_key.entry(key).or_default().ge.push(i),
                Atom::Comparison { key, op: CmpOp::Le, .. } => per_key.entry(key).or_default().le.push(i),
                Atom::RangeUnion { key, .. } => per_key.entry(key).or_default().union = true,
                _ => {}
            }
        }
        let mut replace: BTreeMap<usize, Atom> = BTreeMap::new();
        let mut drop = BTreeSet::new();
        for (key, seen) in per_key {
            if seen.union || seen.ge.len() != 1 || seen.le.len() != 1 {
                continue;
            }
            let (gi, li) = (seen.ge[0], seen.le[0]);
            let threshold = |i: usize| match &self.conjuncts[i] {
                Atom::Comparison { threshold, .. } => *threshold,
                _ => unreachable!(),
            };
            let (lo, hi) = (threshold(gi), threshold(li));
            if lo > hi {
                continue;
            }
            replace.insert(
                gi.min(li),
                Atom::RangeUnion {
                    key: key.to_string(),
                    ranges: vec![Interval { lo, hi }],
                },
            );
            drop.insert(gi.max(li));
        }
        let conjuncts = self
            .conjuncts
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(i, a)| replace.remove(&i).unwrap_or_else(|| a.clone()))
            .collect();
        FilterExpr { conjuncts }
    }
}

impl<'de> Deserialize<'de> for FilterExpr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            conjuncts: Vec<Atom>,
        }
        let raw = Raw::deserialize(deserializer)?;
        FilterExpr::new(raw.conjuncts).map_err(serde::de::Error::custom)
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `Display` for f64 is the shortest string that parses back to `v`.
    write!(f, "{v}")
}

fn is_bare_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
        && !matches!(s.to_ascii_lowercase().as_str(), "and" | "or" | "in")
}

fn write_text(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_bare_word(s) {
        return f.write_str(s);
    }
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_interval(f: &mut fmt::Formatter<'_>, key: &str, r: &Interval) -> fmt::Result {
    write!(f, "{key} in [")?;
    write_number(f, r.lo)?;
    f.write_str(", ")?;
    write_number(f, r.hi)?;
    f.write_str("]")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::CategoricalEq { field, value } => {
                write!(f, "{} = ", field.name())?;
                write_text(f, value)
            }
            Atom::Comparison { key, op, threshold } => {
                write!(f, "{key} {} ", op.symbol())?;
                write_number(f, *threshold)
            }
            Atom::RangeUnion { key, ranges } if ranges.len() == 1 => write_interval(f, key, &ranges[0]),
            Atom::RangeUnion { key, ranges } => {
                f.write_str("(")?;
                for (i, r) in ranges.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    write_interval(f, key, r)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}
