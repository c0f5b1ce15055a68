//! Sensor and context-property domain types.
//!
//! Raw property values are kept in their native units. Everything that
//! compares sensors goes through [`PropertyRegistry::normalize`], which maps a
//! value onto `[0, 1]` using the lowest and highest value observed so far for
//! that property. The bounds only ever widen.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical property list shipped with the crate.
pub const CANONICAL_PROPERTIES: &str = include_str!("../data/properties.v1.tsv");

/// Normalized value used when a property has only ever seen a single value.
pub const DEGENERATE_NORMALIZED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    HigherIsBetter,
    LowerIsBetter,
}

impl Polarity {
    /// Normalized value of the best possible sensor.
    pub fn best(self) -> f64 {
        match self {
            Polarity::HigherIsBetter => 1.0,
            Polarity::LowerIsBetter => 0.0,
        }
    }

    /// Maps a normalized value so that larger always means better.
    pub fn adjust(self, normalized: f64) -> f64 {
        match self {
            Polarity::HigherIsBetter => normalized,
            Polarity::LowerIsBetter => 1.0 - normalized,
        }
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "higher" | "higher_is_better" | "higherisbetter" => Ok(Polarity::HigherIsBetter),
            "lower" | "lower_is_better" | "lowerisbetter" => Ok(Polarity::LowerIsBetter),
            other => Err(Error::InvalidArgument(format!("unknown polarity `{other}`"))),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::HigherIsBetter => "higher",
            Polarity::LowerIsBetter => "lower",
        })
    }
}

/// Closed interval of values observed for one property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn point(value: f64) -> Self {
        Bounds { min: value, max: value }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.min <= value && value <= self.max
    }

    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }

    /// Widens the interval to include `value`; returns whether it changed.
    pub fn widen(&mut self, value: f64) -> bool {
        let mut changed = false;
        if value > self.max {
            self.max = value;
            changed = true;
        }
        if value < self.min {
            self.min = value;
            changed = true;
        }
        changed
    }

    pub fn normalize(&self, value: f64) -> f64 {
        if self.is_degenerate() {
            DEGENERATE_NORMALIZED
        } else {
            (value - self.min) / (self.max - self.min)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub key: String,
    pub unit: String,
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl PropertyDef {
    pub fn new(key: impl Into<String>, unit: impl Into<String>, polarity: Polarity) -> Self {
        PropertyDef {
            key: key.into(),
            unit: unit.into(),
            polarity,
            bounds: None,
        }
    }

    pub fn observed_min(&self) -> Option<f64> {
        self.bounds.map(|b| b.min)
    }

    pub fn observed_max(&self) -> Option<f64> {
        self.bounds.map(|b| b.max)
    }
}

/// Ordered set of property definitions, unique by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyRegistry {
    defs: Vec<PropertyDef>,
    index: HashMap<String, usize>,
}

impl PropertyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the 30 canonical context properties, all unobserved.
    pub fn canonical() -> Self {
        Self::from_tsv(CANONICAL_PROPERTIES).expect("bundled property list is well formed")
    }

    /// Parses a property list: one `key<TAB>unit<TAB>polarity` record per
    /// line, `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut registry = PropertyRegistry::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Load {
                    line: idx + 1,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let polarity = fields[2].parse().map_err(|e: Error| Error::Load {
                line: idx + 1,
                message: e.to_string(),
            })?;
            registry
                .register(PropertyDef::new(fields[0].trim(), fields[1].trim(), polarity))
                .map_err(|e| Error::Load {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(registry)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# key\tunit\tpolarity\n");
        for def in &self.defs {
            out.push_str(&format!("{}\t{}\t{}\n", def.key, def.unit, def.polarity));
        }
        out
    }

    pub fn register(&mut self, def: PropertyDef) -> Result<()> {
        if def.key.is_empty() {
            return Err(Error::InvalidArgument("empty property key".into()));
        }
        if self.index.contains_key(&def.key) {
            return Err(Error::InvalidArgument(format!(
                "property `{}` is already registered",
                def.key
            )));
        }
        if let Some(b) = def.bounds {
            if !(b.min <= b.max) {
                return Err(Error::InvalidArgument(format!("bounds for `{}` are inverted", def.key)));
            }
        }
        self.index.insert(def.key.clone(), self.defs.len());
        self.defs.push(def);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Result<&PropertyDef> {
        self.index
            .get(key)
            .map(|&i| &self.defs[i])
            .ok_or_else(|| Error::UnknownProperty(key.to_string()))
    }

    pub fn defs(&self) -> impl Iterator<Item = &PropertyDef> {
        self.defs.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.key.as_str())
    }

    pub fn polarity(&self, key: &str) -> Result<Polarity> {
        Ok(self.get(key)?.polarity)
    }

    pub fn bounds(&self, key: &str) -> Result<Bounds> {
        self.get(key)?.bounds.ok_or_else(|| Error::Unobserved(key.to_string()))
    }

    /// Records a value seen for `key`, widening its bounds when needed.
    /// Returns `true` when the bounds changed, which invalidates every
    /// normalized value previously derived for this property.
    pub fn register_observation(&mut self, key: &str, value: f64) -> Result<bool> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {value} for `{key}`")));
        }
        let idx = *self
            .index
            .get(key)
            .ok_or_else(|| Error::UnknownProperty(key.to_string()))?;
        let def = &mut self.defs[idx];
        match &mut def.bounds {
            Some(bounds) => Ok(bounds.widen(value)),
            slot @ None => {
                *slot = Some(Bounds::point(value));
                Ok(true)
            }
        }
    }

    /// Maps `value` onto `[0, 1]` against the current bounds of `key`.
    pub fn normalize(&self, key: &str, value: f64) -> Result<f64> {
        let bounds = self.bounds(key)?;
        if !bounds.contains(value) {
            return Err(Error::OutOfBounds {
                key: key.to_string(),
                value,
                min: bounds.min,
                max: bounds.max,
            });
        }
        Ok(bounds.normalize(value))
    }

    pub fn normalized_vector(&self, sensor: &SensorDescription, keys: &[impl AsRef<str>]) -> Result<NormalizedVector> {
        let mut values = BTreeMap::new();
        for key in keys {
            let key = key.as_ref();
            self.get(key)?;
            let raw = sensor.raw_values.get(key).ok_or_else(|| Error::MissingProperty {
                key: key.to_string(),
                uid: sensor.uid.clone(),
            })?;
            values.insert(key.to_string(), self.normalize(key, *raw)?);
        }
        Ok(NormalizedVector { values })
    }

    /// Checks that every raw value of `sensor` belongs to a known property.
    pub fn validate(&self, sensor: &SensorDescription) -> Result<()> {
        for key in sensor.raw_values.keys() {
            self.get(key)?;
        }
        Ok(())
    }

    pub fn observe_sensor(&mut self, sensor: &SensorDescription) -> Result<()> {
        for (key, value) in &sensor.raw_values {
            self.register_observation(key, *value)?;
        }
        Ok(())
    }
}

impl Serialize for PropertyRegistry {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.defs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PropertyRegistry {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let defs = Vec::<PropertyDef>::deserialize(deserializer)?;
        let mut registry = PropertyRegistry::new();
        for def in defs {
            registry.register(def).map_err(serde::de::Error::custom)?;
        }
        Ok(registry)
    }
}

/// One sensor as stored in a corpus file or returned by the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorDescription {
    pub uid: String,
    pub sensor_type: String,
    pub region: String,
    pub raw_values: BTreeMap<String, f64>,
}

impl SensorDescription {
    pub fn new(uid: impl Into<String>, sensor_type: impl Into<String>, region: impl Into<String>) -> Self {
        SensorDescription {
            uid: uid.into(),
            sensor_type: sensor_type.into(),
            region: region.into(),
            raw_values: BTreeMap::new(),
        }
    }

    pub fn with_value(mut self, key: impl Into<String>, value: f64) -> Self {
        self.raw_values.insert(key.into(), value);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizedVector {
    pub values: BTreeMap<String, f64>,
}

impl NormalizedVector {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry_with(key: &str, min: f64, max: f64) -> PropertyRegistry {
        let mut reg = PropertyRegistry::canonical();
        reg.register_observation(key, min).unwrap();
        reg.register_observation(key, max).unwrap();
        reg
    }

    #[test]
    fn canonical_registry_has_thirty_properties() {
        let reg = PropertyRegistry::canonical();
        assert_eq!(reg.len(), 30);
        let lower: Vec<&str> = reg
            .defs()
            .filter(|d| d.polarity == Polarity::LowerIsBetter)
            .map(|d| d.key.as_str())
            .collect();
        assert_eq!(
            lower,
            [
                "response_time",
                "latency",
                "drift",
                "detection_limit",
                "operating_power_range",
                "cost_of_data_transmission",
                "cost_of_data_generation",
                "data_ownership_cost",
            ]
        );
        assert!(reg.defs().all(|d| d.bounds.is_none()));
    }

    #[test]
    fn tsv_round_trip() {
        let reg = PropertyRegistry::canonical();
        assert_eq!(PropertyRegistry::from_tsv(&reg.to_tsv()).unwrap(), reg);
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let mut reg = PropertyRegistry::canonical();
        let err = reg
            .register(PropertyDef::new("accuracy", "%", Polarity::HigherIsBetter))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn observation_inside_bounds_is_a_no_op() {
        let mut reg = registry_with("accuracy", 0.0, 100.0);
        assert!(!reg.register_observation("accuracy", 50.0).unwrap());
        assert_eq!(reg.bounds("accuracy").unwrap(), Bounds { min: 0.0, max: 100.0 });
    }

    #[test]
    fn observation_above_max_widens_max() {
        let mut reg = registry_with("accuracy", 0.0, 100.0);
        assert!(reg.register_observation("accuracy", 200.0).unwrap());
        assert_eq!(reg.bounds("accuracy").unwrap(), Bounds { min: 0.0, max: 200.0 });
    }

    #[test]
    fn observation_below_min_widens_min() {
        let mut reg = registry_with("accuracy", 0.0, 100.0);
        reg.register_observation("accuracy", -10.0).unwrap();
        // oracle: min/max over every value observed so far
        let seen = [0.0_f64, 100.0, -10.0];
        let min = seen.iter().copied().fold(f64::INFINITY, f64::min);
        let max = seen.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(reg.bounds("accuracy").unwrap(), Bounds { min, max });
    }

    #[test]
    fn unknown_key_errors() {
        let mut reg = PropertyRegistry::canonical();
        assert!(matches!(
            reg.register_observation("colour", 1.0),
            Err(Error::UnknownProperty(k)) if k == "colour"
        ));
        assert!(matches!(reg.normalize("colour", 1.0), Err(Error::UnknownProperty(_))));
    }

    #[test]
    fn normalize_examples() {
        let reg = registry_with("accuracy", 0.0, 100.0);
        assert_eq!(reg.normalize("accuracy", 50.0).unwrap(), 0.5);

        let mut reg = reg;
        reg.register_observation("accuracy", 200.0).unwrap();
        assert_eq!(reg.normalize("accuracy", 50.0).unwrap(), 0.25);

        let reg = registry_with("latency", 7.0, 7.0);
        assert_eq!(reg.normalize("latency", 7.0).unwrap(), 0.5);
    }

    #[test]
    fn normalize_outside_bounds_errors() {
        let reg = registry_with("accuracy", 0.0, 100.0);
        assert!(matches!(
            reg.normalize("accuracy", 101.0),
            Err(Error::OutOfBounds { .. })
        ));
        let reg = PropertyRegistry::canonical();
        assert!(matches!(reg.normalize("accuracy", 1.0), Err(Error::Unobserved(_))));
    }

    #[test]
    fn non_finite_observation_is_rejected() {
        let mut reg = PropertyRegistry::canonical();
        assert!(reg.register_observation("accuracy", f64::NAN).is_err());
        assert!(reg.get("accuracy").unwrap().bounds.is_none());
    }

    #[test]
    fn normalized_vector_examples() {
        let mut reg = registry_with("accuracy", 0.0, 100.0);
        reg.register_observation("latency", 0.0).unwrap();
        reg.register_observation("latency", 100.0).unwrap();

        let s = SensorDescription::new("s1", "temperature", "canberra").with_value("accuracy", 100.0);
        let v = reg.normalized_vector(&s, &["accuracy"]).unwrap();
        assert_eq!(v.get("accuracy"), Some(1.0));

        let s = SensorDescription::new("s2", "temperature", "canberra")
            .with_value("accuracy", 80.0)
            .with_value("latency", 20.0);
        let v = reg.normalized_vector(&s, &["accuracy", "latency"]).unwrap();
        assert_eq!(v.get("accuracy"), Some(0.8));
        assert_eq!(v.get("latency"), Some(0.2));

        let err = reg.normalized_vector(&s, &["trust"]).unwrap_err();
        assert!(matches!(err, Error::MissingProperty { key, uid } if key == "trust" && uid == "s2"));
    }

    #[test]
    fn registry_serializes_as_definition_list() {
        let reg = registry_with("accuracy", 1.0, 2.0);
        let json = serde_json::to_string(&reg).unwrap();
        let back: PropertyRegistry = serde_json::from_str(&json).unwrap();
        assert_eq!(back, reg);
    }
}
