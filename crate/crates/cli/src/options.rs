//! Parsers for the compact `key=value` flag syntax.

use std::collections::BTreeMap;

use sensorsift_core::ranking::PrioritySpec;

use crate::error::{CliError, CliResult};

fn pairs(text: &str, what: &str) -> CliResult<Vec<(String, Option<f64>)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match item.split_once('=') {
            None => Ok((item.to_string(), None)),
            Some((k, v)) => v
                .trim()
                .parse::<f64>()
                .map(|v| (k.trim().to_string(), Some(v)))
                .map_err(|_| CliError::User(format!("{what}: `{v}` in `{item}` is not a number"))),
        })
        .collect()
}

/// `accuracy=80,latency=20,trust` where a bare key has slider 1 and a key
/// prefixed with `-` is listed but excluded.
pub fn parse_priorities(text: &str, scale: f64) -> CliResult<PrioritySpec> {
    let mut spec = PrioritySpec::new(scale);
    for (key, slider) in pairs(text, "--priorities")? {
        let slider = slider.unwrap_or(1.0);
        spec = match key.strip_prefix('-') {
            Some(key) => spec.with_excluded(key, slider),
            None => spec.with(&key, slider),
        };
    }
    if spec.entries.is_empty() {
        return Err(CliError::User("--priorities names no property".into()));
    }
    Ok(spec)
}

/// `accuracy=95,latency=3`.
pub fn parse_ideal(text: &str) -> CliResult<BTreeMap<String, f64>> {
    pairs(text, "--ideal")?
        .into_iter()
        .map(|(k, v)| {
            v.map(|v| (k.clone(), v))
                .ok_or_else(|| CliError::User(format!("--ideal: `{k}` needs a value")))
        })
        .collect()
}

pub fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.replace('_', "")
                .parse::<T>()
                .map_err(|_| CliError::User(format!("{flag}: cannot parse `{s}`")))
        })
        .collect()
}
