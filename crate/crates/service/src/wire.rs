//! Request and response documents. Every type here round-trips through
//! JSON unchanged.

use std::collections::BTreeMap;

use sensorsift_core::corpus::GeneratorConfig;
use sensorsift_core::query::{parse_filter, FilterExpr};
use sensorsift_core::ranking::PrioritySpec;
use sensorsift_core::search::{PhaseTiming, SearchDiagnostics};
use sensorsift_distributed::{LinkBytes, Strategy, TopologyFile};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// Schema version reported by `GET /` and carried in error bodies.
pub const WIRE_VERSION: u32 = 1;

/// Filter as query text or as an already-structured expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterInput {
    Text(String),
    Structured(FilterExpr),
}

impl Default for FilterInput {
    fn default() -> Self {
        FilterInput::Text(String::new())
    }
}

impl FilterInput {
    pub fn resolve(&self) -> Result<FilterExpr, ApiError> {
        match self {
            FilterInput::Text(text) => Ok(parse_filter(text)?),
            FilterInput::Structured(expr) => Ok(expr.coalesced()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heuristic {
    pub enabled: bool,
    /// Only meaningful when enabled; 50 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_m: Option<f64>,
}

pub const DEFAULT_MARGIN: f64 = 50.0;

impl Heuristic {
    pub fn margin(&self) -> Result<Option<f64>, ApiError> {
        match (self.enabled, self.margin_m) {
            (false, None) => Ok(None),
            (false, Some(_)) => Err(ApiError::invalid(
                "margin_m is only allowed when the heuristic is enabled",
            )),
            (true, m) => {
                let m = m.unwrap_or(DEFAULT_MARGIN);
                if !(0.0..=100.0).contains(&m) {
                    return Err(ApiError::invalid(format!("margin_m {m} is outside [0, 100]")));
                }
                Ok(Some(m))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyRequest {
    #[default]
    Local,
    Chain,
    Parallel,
    ParallelK {
        k: usize,
    },
}

impl StrategyRequest {
    pub fn distributed(self) -> Option<Strategy> {
        match self {
            StrategyRequest::Local => None,
            StrategyRequest::Chain => Some(Strategy::Chain),
            StrategyRequest::Parallel => Some(Strategy::Parallel),
            StrategyRequest::ParallelK { k } => Some(Strategy::ParallelK { k }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub filter: FilterInput,
    pub priorities: PrioritySpec,
    /// Native-unit ideal values; omitted keys use the best observed value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<BTreeMap<String, f64>>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic: Option<Heuristic>,
    #[serde(default)]
    pub strategy: StrategyRequest,
    /// Include wall-clock phase timings. Off by default so responses depend
    /// only on the snapshot and the request.
    #[serde(default)]
    pub report_timing: bool,
}

impl SearchRequest {
    pub fn margin(&self) -> Result<Option<f64>, ApiError> {
        match &self.heuristic {
            Some(h) => h.margin(),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub uid: String,
    pub cpwi: f64,
    pub raw_values: BTreeMap<String, f64>,
}

/// Network cost of a distributed search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedSummary {
    pub nodes: usize,
    pub total_time_ns: u64,
    pub remote_phase_ns: u64,
    pub total_bytes: u64,
    pub bytes_by_link: Vec<LinkBytes>,
    pub rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub snapshot_id: u64,
    /// Ascending by CPWI, ties by uid.
    pub entries: Vec<ResponseEntry>,
    pub weights: BTreeMap<String, f64>,
    pub diagnostics: SearchDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<PhaseTiming>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distributed: Option<DistributedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum LoadRequest {
    /// A corpus file on the server's filesystem.
    Path(String),
    /// A freshly generated corpus.
    Generate(GeneratorConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub snapshot_id: u64,
    pub sensors: usize,
    pub properties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub topology: TopologyFile,
    pub request: SearchRequest,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyInfo {
    pub nodes: usize,
}
