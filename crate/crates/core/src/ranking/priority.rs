use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PropertyRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityEntry {
    pub key: String,
    pub slider: f64,
    #[serde(default = "included_default")]
    pub included: bool,
}

fn included_default() -> bool {
    true
}

/// Slider positions for the properties the user cares about. A slider at 1
/// means "no priority"; the top of the slider is `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritySpec {
    pub entries: Vec<PriorityEntry>,
    #[serde(default = "scale_default")]
    pub scale: f64,
}

fn scale_default() -> f64 {
    100.0
}

impl PrioritySpec {
    pub fn new(scale: f64) -> Self {
        PrioritySpec {
            entries: Vec::new(),
            scale,
        }
    }

    /// Every key included with the slider at 1, i.e. equal weights.
    pub fn uniform<S: AsRef<str>>(keys: &[S]) -> Self {
        let mut spec = PrioritySpec::new(scale_default());
        for k in keys {
            spec = spec.with(k.as_ref(), 1.0);
        }
        spec
    }

    pub fn with(mut self, key: &str, slider: f64) -> Self {
        self.entries.push(PriorityEntry {
            key: key.to_string(),
            slider,
            included: true,
        });
        self
    }

    pub fn with_excluded(mut self, key: &str, slider: f64) -> Self {
        self.entries.push(PriorityEntry {
            key: key.to_string(),
            slider,
            included: false,
        });
        self
    }

    pub fn included(&self) -> impl Iterator<Item = &PriorityEntry> {
        self.entries.iter().filter(|e| e.included)
    }

    /// Included keys, ascending.
    pub fn included_keys(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.included().map(|e| e.key.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale >= 1.0) {
            return Err(Error::InvalidPriority(format!(
                "scale {} must be at least 1",
                self.scale
            )));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.key.as_str()) {
                return Err(Error::InvalidPriority(format!("`{}` appears twice", e.key)));
            }
            if !e.slider.is_finite() || e.slider < 1.0 {
                return Err(Error::InvalidPriority(format!(
                    "slider for `{}` is {}, sliders start at 1",
                    e.key, e.slider
                )));
            }
            if e.included && e.slider > self.scale {
                return Err(Error::InvalidPriority(format!(
                    "slider for `{}` is {}, above the scale maximum {}",
                    e.key, e.slider, self.scale
                )));
            }
        }
        if self.included().next().is_none() {
            return Err(Error::EmptyPriority);
        }
        Ok(())
    }

    pub fn validate_with(&self, registry: &PropertyRegistry) -> Result<()> {
        self.validate()?;
        for e in &self.entries {
            registry.get(&e.key)?;
        }
        Ok(())
    }
}

/// Per-property weights derived from slider positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: BTreeMap<String, f64>,
}

impl WeightVector {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.weights.get(key).copied()
    }

    /// Each weight as a fraction of the total.
    pub fn fractions(&self) -> BTreeMap<String, f64> {
        let total: f64 = self.weights.values().sum();
        self.weights.iter().map(|(k, w)| (k.clone(), w / total)).collect()
    }
}

/// Turns slider positions into weights: each included slider divided by
/// the spread (max - min) of the included sliders. When every included
/// slider sits at the same position the spread is zero and all weights are 1.
pub fn compute_weights(spec: &PrioritySpec) -> Result<WeightVector> {
    spec.validate()?;
    let (lo, hi) = spec.included().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.slider), hi.max(e.slider))
    });
    let range = hi - lo;
    let weights = spec
        .included()
        .map(|e| {
            let w = if range > 0.0 { e.slider / range } else { 1.0 };
            (e.key.clone(), w)
        })
        .collect();
    Ok(WeightVector { weights })
}
