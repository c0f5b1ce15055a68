//! Transport-independent request handling over an atomically swapped
//! corpus snapshot.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use sensorsift_core::corpus::{self, generate};
use sensorsift_core::ranking::compute_weights;
use sensorsift_core::search::{candidates, run_search, SearchDiagnostics, SearchParams};
use sensorsift_core::{Corpus, PropertyDef, PropertyRegistry, SensorDescription};
use sensorsift_distributed::{simulate_timeline, ClusterTopology, DistError, SearchOutcome, TopologyFile};

use crate::error::ApiError;
use crate::wire::{
    DistributedSummary, LoadRequest, ResponseEntry, SearchRequest, SearchResponse, SimulateRequest, SnapshotInfo,
    StrategyRequest, TopologyInfo,
};

/// An immutable corpus together with the registry observed over it.
pub struct Snapshot {
    pub id: u64,
    pub corpus: Corpus,
    pub registry: PropertyRegistry,
    partitions: Mutex<HashMap<usize, Arc<Vec<Corpus>>>>,
}

impl Snapshot {
    pub fn info(&self) -> SnapshotInfo {
        SnapshotInfo {
            snapshot_id: self.id,
            sensors: self.corpus.len(),
            properties: self.corpus.property_keys().map(str::to_string).collect(),
        }
    }

    /// Round-robin split across `nodes`, computed once per node count.
    fn partition(&self, nodes: usize) -> Result<Arc<Vec<Corpus>>, ApiError> {
        let mut cache = self.partitions.lock().expect("partition cache poisoned");
        if let Some(parts) = cache.get(&nodes) {
            return Ok(parts.clone());
        }
        let parts = Arc::new(self.corpus.split(nodes)?);
        cache.insert(nodes, parts.clone());
        Ok(parts)
    }
}

#[derive(Default)]
pub struct Engine {
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    topology: RwLock<Option<Arc<ClusterTopology>>>,
    next_id: AtomicU64,
}

fn check_k(req: &SearchRequest) -> Result<(), ApiError> {
    if let StrategyRequest::ParallelK { k } = req.strategy {
        if k == 0 || k >= req.n {
            return Err(DistError::InvalidK { k, n: req.n }.into());
        }
    }
    Ok(())
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_corpus(corpus: Corpus) -> Result<Self, ApiError> {
        let engine = Self::new();
        engine.install(corpus)?;
        Ok(engine)
    }

    /// Makes `corpus` the current snapshot. Searches already running keep
    /// the snapshot they started with.
    pub fn install(&self, corpus: Corpus) -> Result<SnapshotInfo, ApiError> {
        let mut registry = PropertyRegistry::canonical();
        corpus.observe_into(&mut registry)?;
        let snapshot = Arc::new(Snapshot {
            id: self.next_id.fetch_add(1, Ordering::SeqCst) + 1,
            corpus,
            registry,
            partitions: Mutex::new(HashMap::new()),
        });
        let info = snapshot.info();
        *self.snapshot.write().expect("snapshot lock poisoned") = Some(snapshot);
        Ok(info)
    }

    pub fn load(&self, req: &LoadRequest) -> Result<SnapshotInfo, ApiError> {
        let corpus = match req {
            LoadRequest::Path(path) => corpus::load(path, &PropertyRegistry::canonical())?,
            LoadRequest::Generate(config) => generate(config.clone())?,
        };
        self.install(corpus)
    }

    pub fn snapshot(&self) -> Result<Arc<Snapshot>, ApiError> {
        self.snapshot
            .read()
            .expect("snapshot lock poisoned")
            .clone()
            .ok_or_else(ApiError::no_corpus)
    }

    pub fn set_topology(&self, file: &TopologyFile) -> Result<TopologyInfo, ApiError> {
        let topology = file.to_topology()?;
        let info = TopologyInfo {
            nodes: topology.node_count,
        };
        *self.topology.write().expect("topology lock poisoned") = Some(Arc::new(topology));
        Ok(info)
    }

    fn topology(&self) -> Result<Arc<ClusterTopology>, ApiError> {
        self.topology
            .read()
            .expect("topology lock poisoned")
            .clone()
            .ok_or_else(|| {
                ApiError::new(
                    axum::http::StatusCode::CONFLICT,
                    "no_topology",
                    "distributed strategies need a topology; POST /topology first",
                )
            })
    }

    pub fn sensor(&self, uid: &str) -> Result<SensorDescription, ApiError> {
        self.snapshot()?
            .corpus
            .get(uid)
            .ok_or_else(|| ApiError::not_found(format!("no sensor `{uid}`")))
    }

    /// Registry of the current snapshot, or the canonical one before any
    /// corpus is loaded.
    pub fn properties(&self) -> Vec<PropertyDef> {
        match self.snapshot() {
            Ok(s) => s.registry.defs().cloned().collect(),
            Err(_) => PropertyRegistry::canonical().defs().cloned().collect(),
        }
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse, ApiError> {
        let snap = self.snapshot()?;
        let filter = req.filter.resolve()?;
        if req.n == 0 {
            return Err(ApiError::invalid("n must be at least 1"));
        }
        check_k(req)?;
        let params = SearchParams {
            filter: &filter,
            priorities: &req.priorities,
            ideal: req.ideal.as_ref(),
            n: req.n,
            margin_m: req.margin()?,
        };
        let entries = |result: &sensorsift_core::ranking::RankedResult| -> Vec<ResponseEntry> {
            result
                .entries
                .iter()
                .map(|e| ResponseEntry {
                    uid: e.uid.clone(),
                    cpwi: e.cpwi,
                    raw_values: snap.corpus.get(&e.uid).map(|s| s.raw_values).unwrap_or_default(),
                })
                .collect()
        };

        let Some(strategy) = req.strategy.distributed() else {
            let run = run_search(&snap.corpus, &snap.registry, &params)?;
            return Ok(SearchResponse {
                snapshot_id: snap.id,
                entries: entries(&run.result),
                weights: run.weights.weights,
                diagnostics: run.diagnostics,
                timing: req.report_timing.then_some(run.timing),
                distributed: None,
            });
        };

        let topology = self.topology()?;
        let parts = snap.partition(topology.node_count)?;
        let outcome = simulate_timeline(strategy, &topology, &parts, &snap.registry, &params)?;
        let weights = compute_weights(&req.priorities)?;
        let (rows, excluded) = candidates(&snap.corpus, &snap.registry, &filter, &req.priorities)?;
        Ok(SearchResponse {
            snapshot_id: snap.id,
            entries: entries(&outcome.result),
            weights: weights.weights,
            diagnostics: SearchDiagnostics {
                candidates_before: rows.len(),
                candidates_after_prune: outcome.candidate_pool.len(),
                excluded_missing_property: excluded,
                shortfall: req.n.saturating_sub(rows.len()),
            },
            timing: None,
            distributed: Some(DistributedSummary {
                nodes: topology.node_count,
                total_time_ns: outcome.total_time_ns,
                remote_phase_ns: outcome.remote_phase_ns,
                total_bytes: outcome.total_bytes,
                bytes_by_link: outcome.bytes_by_link,
                rounds: outcome.rounds,
            }),
        })
    }

    /// Runs one simulated distributed search. Node corpora come from the
    /// topology's corpus paths when every node has one, otherwise from the
    /// current snapshot split round-robin.
    pub fn simulate(&self, req: &SimulateRequest, base: &Path) -> Result<SearchOutcome, ApiError> {
        if req.request.strategy != StrategyRequest::Local {
            return Err(ApiError::invalid(
                "give the strategy at the top level of a simulate request, not inside `request`",
            ));
        }
        let topology = req.topology.to_topology()?;
        let paths = req.topology.corpus_paths(base);
        let corpora: Arc<Vec<Corpus>> = if paths.iter().all(Option::is_some) {
            let canonical = PropertyRegistry::canonical();
            Arc::new(
                paths
                    .iter()
                    .map(|p| corpus::load(p.as_ref().expect("checked above"), &canonical))
                    .collect::<Result<_, _>>()?,
            )
        } else if paths.iter().all(Option::is_none) {
            self.snapshot()?.partition(topology.node_count)?
        } else {
            return Err(DistError::InvalidTopology("either every node or no node names a corpus".into()).into());
        };
        let mut registry = PropertyRegistry::canonical();
        for c in corpora.iter() {
            c.observe_into(&mut registry)?;
        }
        let filter = req.request.filter.resolve()?;
        let params = SearchParams {
            filter: &filter,
            priorities: &req.request.priorities,
            ideal: req.request.ideal.as_ref(),
            n: req.request.n,
            margin_m: req.request.margin()?,
        };
        if params.n == 0 {
            return Err(ApiError::invalid("n must be at least 1"));
        }
        Ok(simulate_timeline(
            req.strategy,
            &topology,
            &corpora,
            &registry,
            &params,
        )?)
    }
}
