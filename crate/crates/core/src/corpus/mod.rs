//! Columnar in-memory sensor corpus.
//!
//! Rows are kept sorted by uid, so row order doubles as the deterministic
//! tie-break order everywhere downstream. Property values live in one
//! `Vec<f64>` per property with `NaN` marking "no value" (finite values are
//! enforced on the way in, so `NaN` is never a real measurement).

mod generate;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::model::{Bounds, PropertyRegistry, SensorDescription};

pub use generate::{generate, Distribution, Generator, GeneratorConfig, FIVE_PROPERTIES, TEN_PROPERTIES};
pub use io::{load, read_corpus, save, write_corpus, CORPUS_FORMAT, CORPUS_VERSION};

/// Index of a row inside a [`Corpus`].
pub type RowId = u32;

type CacheEntry = ((u64, u64), Arc<[f64]>);

pub struct Corpus {
    uids: Vec<String>,
    sensor_types: Vec<u32>,
    regions: Vec<u32>,
    type_names: Vec<String>,
    region_names: Vec<String>,
    columns: BTreeMap<String, Vec<f64>>,
    normalized: Mutex<HashMap<String, CacheEntry>>,
}

impl Corpus {
    pub fn empty() -> Self {
        CorpusBuilder::default().finish().expect("empty corpus is valid")
    }

    /// Builds a corpus from records in any order. Fails on duplicate uids or
    /// non-finite values.
    pub fn from_records(records: impl IntoIterator<Item = SensorDescription>) -> Result<Self> {
        let mut builder = CorpusBuilder::default();
        for record in records {
            builder.push(record)?;
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.uids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uids.is_empty()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = RowId> + '_ {
        (0..self.uids.len() as RowId).into_iter()
    }

    pub fn all_rows(&self) -> Vec<RowId> {
        self.rows().collect()
    }

    pub fn uid(&self, row: RowId) -> &str {
        &self.uids[row as usize]
    }

    pub fn uids(&self) -> &[String] {
        &self.uids
    }

    pub fn row_of(&self, uid: &str) -> Option<RowId> {
        self.uids
            .binary_search_by(|u| u.as_str().cmp(uid))
            .ok()
            .map(|i| i as RowId)
    }

    pub fn sensor_type(&self, row: RowId) -> &str {
        &self.type_names[self.sensor_types[row as usize] as usize]
    }

    pub fn region(&self, row: RowId) -> &str {
        &self.region_names[self.regions[row as usize] as usize]
    }

    pub(crate) fn type_codes(&self) -> &[u32] {
        &self.sensor_types
    }

    pub(crate) fn region_codes(&self) -> &[u32] {
        &self.regions
    }

    pub(crate) fn type_code(&self, name: &str) -> Option<u32> {
        self.type_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub(crate) fn region_code(&self, name: &str) -> Option<u32> {
        self.region_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    /// Property keys that have a column in this corpus, ascending.
    pub fn property_keys(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Raw column for `key`; `NaN` entries are missing values.
    pub fn column(&self, key: &str) -> Option<&[f64]> {
        self.columns.get(key).map(Vec::as_slice)
    }

    pub fn value(&self, row: RowId, key: &str) -> Option<f64> {
        self.columns.get(key).map(|c| c[row as usize]).filter(|v| !v.is_nan())
    }

    pub fn record(&self, row: RowId) -> SensorDescription {
        let raw_values = self
            .columns
            .iter()
            .filter_map(|(k, col)| {
                let v = col[row as usize];
                (!v.is_nan()).then(|| (k.clone(), v))
            })
            .collect();
        SensorDescription {
            uid: self.uid(row).to_string(),
            sensor_type: self.sensor_type(row).to_string(),
            region: self.region(row).to_string(),
            raw_values,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = SensorDescription> + '_ {
        self.rows().map(|r| self.record(r))
    }

    pub fn get(&self, uid: &str) -> Option<SensorDescription> {
        self.row_of(uid).map(|r| self.record(r))
    }

    /// Registers every raw value with the registry, widening its bounds.
    pub fn observe_into(&self, registry: &mut PropertyRegistry) -> Result<()> {
        for (key, col) in &self.columns {
            registry.get(key)?;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in col.iter().filter(|v| !v.is_nan()) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo <= hi {
                registry.register_observation(key, lo)?;
                registry.register_observation(key, hi)?;
            }
        }
        Ok(())
    }

    /// Checks every property key against the registry.
    pub fn validate(&self, registry: &PropertyRegistry) -> Result<()> {
        for key in self.columns.keys() {
            registry.get(key)?;
        }
        Ok(())
    }

    /// Normalized column for `key` under the registry's current bounds.
    ///
    /// Cached per corpus; the cache entry is keyed by the exact bounds, so
    /// any widening of the bounds forces a recompute on the next call.
    pub fn normalized_column(&self, registry: &PropertyRegistry, key: &str) -> Result<Arc<[f64]>> {
        registry.get(key)?;
        let Some(raw) = self.columns.get(key) else {
            return Ok(vec![f64::NAN; self.len()].into());
        };
        let bounds = registry.bounds(key)?;
        let tag = (bounds.min.to_bits(), bounds.max.to_bits());
        if let Some((cached_tag, col)) = self.normalized.lock().unwrap().get(key) {
            if *cached_tag == tag {
                return Ok(Arc::clone(col));
            }
        }
        let col: Arc<[f64]> = normalize_column(key, raw, bounds)?.into();
        self.normalized
            .lock()
            .unwrap()
            .insert(key.to_string(), (tag, Arc::clone(&col)));
        Ok(col)
    }

    /// Deterministic round-robin partition into `parts` disjoint corpora.
    pub fn split(&self, parts: usize) -> Result<Vec<Corpus>> {
        if parts == 0 {
            return Err(Error::InvalidArgument("cannot split into zero parts".into()));
        }
        let mut builders: Vec<CorpusBuilder> = (0..parts).map(|_| CorpusBuilder::default()).collect();
        for row in self.rows() {
            builders[row as usize % parts].push(self.record(row))?;
        }
        builders.into_iter().map(CorpusBuilder::finish).collect()
    }

    /// Union of disjoint corpora.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a Corpus>) -> Result<Corpus> {
        let mut builder = CorpusBuilder::default();
        for part in parts {
            for record in part.records() {
                builder.push(record)?;
            }
        }
        builder.finish()
    }
}

fn normalize_column(key: &str, raw: &[f64], bounds: Bounds) -> Result<Vec<f64>> {
    raw.iter()
        .map(|&v| {
            if v.is_nan() {
                Ok(f64::NAN)
            } else if bounds.contains(v) {
                Ok(bounds.normalize(v))
            } else {
                Err(Error::OutOfBounds {
                    key: key.to_string(),
                    value: v,
                    min: bounds.min,
                    max: bounds.max,
                })
            }
        })
        .collect()
}

impl Clone for Corpus {
    fn clone(&self) -> Self {
        Corpus {
            uids: self.uids.clone(),
            sensor_types: self.sensor_types.clone(),
            regions: self.regions.clone(),
            type_names: self.type_names.clone(),
            region_names: self.region_names.clone(),
            columns: self.columns.clone(),
            normalized: Mutex::default(),
        }
    }
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.records().eq(other.records())
    }
}

impl std::fmt::Debug for Corpus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Corpus")
            .field("len", &self.len())
            .field("properties", &self.columns.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Accumulates records and produces a uid-sorted [`Corpus`].
#[derive(Default)]
pub struct CorpusBuilder {
    records: Vec<Staged>,
    type_names: Vec<String>,
    type_index: HashMap<String, u32>,
    region_names: Vec<String>,
    region_index: HashMap<String, u32>,
    keys: BTreeSet<String>,
}

struct Staged {
    uid: String,
    sensor_type: u32,
    region: u32,
    values: Vec<(String, f64)>,
}

fn intern(names: &mut Vec<String>, index: &mut HashMap<String, u32>, name: String) -> u32 {
    if let Some(&id) = index.get(&name) {
        return id;
    }
    let id = names.len() as u32;
    names.push(name.clone());
    index.insert(name, id);
    id
}

impl CorpusBuilder {
    pub fn with_capacity(n: usize) -> Self {
        CorpusBuilder {
            records: Vec::with_capacity(n),
            ..Default::default()
        }
    }

    pub fn push(&mut self, record: SensorDescription) -> Result<()> {
        if record.uid.is_empty() {
            return Err(Error::InvalidArgument("empty sensor uid".into()));
        }
        for (k, v) in &record.raw_values {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "sensor `{}` has non-finite value for `{k}`",
                    record.uid
                )));
            }
            if !self.keys.contains(k) {
                self.keys.insert(k.clone());
            }
        }
        let sensor_type = intern(&mut self.type_names, &mut self.type_index, record.sensor_type);
        let region = intern(&mut self.region_names, &mut self.region_index, record.region);
        self.records.push(Staged {
            uid: record.uid,
            sensor_type,
            region,
            values: record.raw_values.into_iter().collect(),
        });
        Ok(())
    }

    pub fn finish(mut self) -> Result<Corpus> {
        if !self.records.windows(2).all(|w| w[0].uid < w[1].uid) {
            self.records.sort_by(|a, b| a.uid.cmp(&b.uid));
            if let Some(w) = self.records.windows(2).find(|w| w[0].uid == w[1].uid) {
                return Err(Error::DuplicateUid(w[0].uid.clone()));
            }
        }
        let n = self.records.len();
        let mut columns: BTreeMap<String, Vec<f64>> = self.keys.into_iter().map(|k| (k, vec![f64::NAN; n])).collect();
        let mut uids = Vec::with_capacity(n);
        let mut sensor_types = Vec::with_capacity(n);
        let mut regions = Vec::with_capacity(n);
        for (row, staged) in self.records.into_iter().enumerate() {
            for (k, v) in staged.values {
                columns.get_mut(&k).expect("key registered on push")[row] = v;
            }
            uids.push(staged.uid);
            sensor_types.push(staged.sensor_type);
            regions.push(staged.region);
        }
        Ok(Corpus {
            uids,
            sensor_types,
            regions,
            type_names: self.type_names,
            region_names: self.region_names,
            columns,
            normalized: Mutex::default(),
        })
    }
}
