//! Seeded synthetic corpus generation.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusBuilder};
use crate::error::{Error, Result};
use crate::model::{PropertyRegistry, SensorDescription};

/// Five-property experiment shape.
pub const FIVE_PROPERTIES: [&str; 5] = [
    "accuracy",
    "availability",
    "cost_of_data_generation",
    "reliability",
    "response_time",
];

/// Ten-property experiment shape.
pub const TEN_PROPERTIES: [&str; 10] = [
    "accuracy",
    "availability",
    "battery_life",
    "cost_of_data_generation",
    "frequency",
    "latency",
    "operating_power_range",
    "reliability",
    "response_time",
    "trust",
];

/// Width of the zero-padded numeric part of generated uids.
const UID_DIGITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal draw clamped to `[lo, hi]`.
    Normal {
        mean: f64,
        std_dev: f64,
        lo: f64,
        hi: f64,
    },
}

impl Default for Distribution {
    fn default() -> Self {
        Distribution::Uniform { lo: 0.0, hi: 100.0 }
    }
}

impl Distribution {
    fn validate(&self, key: &str) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            Distribution::Normal { mean, std_dev, lo, hi } => {
                mean.is_finite()
                    && std_dev.is_finite()
                    && std_dev >= 0.0
                    && lo.is_finite()
                    && hi.is_finite()
                    && lo <= hi
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid distribution for `{key}`: {self:?}")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } if lo == hi => lo,
            Distribution::Uniform { lo, hi } => rng.random_range(lo..=hi),
            Distribution::Normal { mean, std_dev, lo, hi } => {
                let draw = if std_dev == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std_dev).expect("validated").sample(rng)
                };
                draw.clamp(lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub count: usize,
    pub property_keys: Vec<String>,
    pub seed: u64,
    /// Per-key overrides; keys not listed use `default_distribution`.
    pub distributions: BTreeMap<String, Distribution>,
    pub default_distribution: Distribution,
    pub sensor_types: Vec<(String, f64)>,
    pub regions: Vec<(String, f64)>,
    /// Added to the row index when forming uids, so that corpora generated
    /// for different nodes never collide.
    pub uid_offset: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            count: 0,
            property_keys: FIVE_PROPERTIES.iter().map(|s| s.to_string()).collect(),
            seed: 0,
            distributions: BTreeMap::new(),
            default_distribution: Distribution::default(),
            sensor_types: weighted(&[
                ("temperature", 4.0),
                ("humidity", 3.0),
                ("pressure", 2.0),
                ("wind_speed", 1.0),
            ]),
            regions: weighted(&[
                ("canberra", 3.0),
                ("sydney", 3.0),
                ("melbourne", 2.0),
                ("brisbane", 1.0),
                ("perth", 1.0),
            ]),
            uid_offset: 0,
        }
    }
}

fn weighted(items: &[(&str, f64)]) -> Vec<(String, f64)> {
    items.iter().map(|(n, w)| (n.to_string(), *w)).collect()
}

impl GeneratorConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        GeneratorConfig {
            count,
            seed,
            ..Default::default()
        }
    }

    pub fn with_properties<S: AsRef<str>>(mut self, keys: &[S]) -> Self {
        self.property_keys = keys.iter().map(|k| k.as_ref().to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, key) in self.property_keys.iter().enumerate() {
            if self.property_keys[..i].contains(key) {
                return Err(Error::Config(format!("property `{key}` listed twice")));
            }
        }
        for (key, dist) in &self.distributions {
            if !self.property_keys.contains(key) {
                return Err(Error::Config(format!(
                    "distribution given for `{key}`, which is not a generated property"
                )));
            }
            dist.validate(key)?;
        }
        self.default_distribution.validate("<default>")?;
        for (what, pool) in [("sensor_types", &self.sensor_types), ("regions", &self.regions)] {
            if pool.is_empty() {
                return Err(Error::Config(format!("{what} pool is empty")));
            }
            if pool.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) || pool.iter().all(|(_, w)| *w == 0.0) {
                return Err(Error::Config(format!(
                    "{what} weights must be non-negative with a positive total"
                )));
            }
        }
        if self.uid_offset.checked_add(self.count as u64).is_none() {
            return Err(Error::Config("uid range overflows".into()));
        }
        Ok(())
    }

    /// Validates the config and additionally checks every key against `registry`.
    pub fn validate_with(&self, registry: &PropertyRegistry) -> Result<()> {
        self.validate()?;
        for key in &self.property_keys {
            registry.get(key)?;
        }
        Ok(())
    }

    pub fn uid(&self, index: usize) -> String {
        format!("s{:0width$}", self.uid_offset + index as u64, width = UID_DIGITS)
    }
}

/// Deterministic stream of synthetic sensors.
pub struct Generator {
    config: GeneratorConfig,
    rng: ChaCha8Rng,
    types: WeightedIndex<f64>,
    regions: WeightedIndex<f64>,
    dists: Vec<Distribution>,
    next: usize,
}

impl Generator {
    pub fn new(config: GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let types = WeightedIndex::new(config.sensor_types.iter().map(|(_, w)| *w))
            .map_err(|e| Error::Config(e.to_string()))?;
        let regions =
            WeightedIndex::new(config.regions.iter().map(|(_, w)| *w)).map_err(|e| Error::Config(e.to_string()))?;
        let dists = config
            .property_keys
            .iter()
            .map(|k| {
                config
                    .distributions
                    .get(k)
                    .copied()
                    .unwrap_or(config.default_distribution)
            })
            .collect();
        Ok(Generator {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            types,
            regions,
            dists,
            next: 0,
        })
    }
}

impl Iterator for Generator {
    type Item = SensorDescription;

    fn next(&mut self) -> Option<SensorDescription> {
        if self.next >= self.config.count {
            return None;
        }
        let uid = self.config.uid(self.next);
        self.next += 1;
        let sensor_type = self.config.sensor_types[self.types.sample(&mut self.rng)].0.clone();
        let region = self.config.regions[self.regions.sample(&mut self.rng)].0.clone();
        let mut sensor = SensorDescription::new(uid, sensor_type, region);
        for (key, dist) in self.config.property_keys.iter().zip(&self.dists) {
            sensor.raw_values.insert(key.clone(), dist.sample(&mut self.rng));
        }
        Some(sensor)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.config.count - self.next;
        (left, Some(left))
    }
}

/// Generates a full corpus in memory.
pub fn generate(config: GeneratorConfig) -> Result<Corpus> {
    let mut builder = CorpusBuilder::with_capacity(config.count);
    for sensor in Generator::new(config)? {
        builder.push(sensor)?;
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_is_empty() {
        assert!(generate(GeneratorConfig::new(0, 1)).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let a: Vec<_> = Generator::new(GeneratorConfig::new(3, 42)).unwrap().collect();
        let b: Vec<_> = Generator::new(GeneratorConfig::new(3, 42)).unwrap().collect();
        assert_eq!(a, b);
        let c: Vec<_> = Generator::new(GeneratorConfig::new(3, 43)).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn uids_are_zero_padded_and_offset() {
        let mut cfg = GeneratorConfig::new(2, 0);
        cfg.uid_offset = 7;
        let uids: Vec<_> = Generator::new(cfg).unwrap().map(|s| s.uid).collect();
        assert_eq!(uids, ["s0000000007", "s0000000008"]);
    }

    #[test]
    fn uniform_mean_is_within_lln_bound() {
        let n = 100_000;
        let corpus = generate(GeneratorConfig::new(n, 9).with_properties(&["accuracy"])).unwrap();
        let col = corpus.column("accuracy").unwrap();
        let mean = col.iter().sum::<f64>() / n as f64;
        // four standard errors of a uniform[0, 100] sample mean
        let bound = 100.0 / (12.0 * n as f64).sqrt() * 4.0;
        assert!((mean - 50.0).abs() <= bound, "mean {mean}, bound {bound}");
        assert!(col.iter().all(|v| (0.0..=100.0).contains(v)));
    }

    #[test]
    fn normal_draws_are_clamped() {
        let mut cfg = GeneratorConfig::new(2_000, 5).with_properties(&["latency"]);
        cfg.distributions.insert(
            "latency".into(),
            Distribution::Normal {
                mean: 10.0,
                std_dev: 50.0,
                lo: 0.0,
                hi: 20.0,
            },
        );
        let corpus = generate(cfg).unwrap();
        assert!(corpus
            .column("latency")
            .unwrap()
            .iter()
            .all(|v| (0.0..=20.0).contains(v)));
    }

    #[test]
    fn distribution_for_unlisted_key_is_a_config_error() {
        let mut cfg = GeneratorConfig::new(1, 0).with_properties(&["accuracy"]);
        cfg.distributions.insert("trust".into(), Distribution::default());
        assert!(matches!(generate(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn inverted_range_is_a_config_error() {
        let mut cfg = GeneratorConfig::new(1, 0).with_properties(&["accuracy"]);
        cfg.distributions
            .insert("accuracy".into(), Distribution::Uniform { lo: 5.0, hi: 1.0 });
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_registry_key_is_reported() {
        let cfg = GeneratorConfig::new(1, 0).with_properties(&["colour"]);
        let reg = PropertyRegistry::canonical();
        assert!(matches!(cfg.validate_with(&reg), Err(Error::UnknownProperty(_))));
    }
}
