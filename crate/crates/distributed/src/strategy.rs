//! The three distribution protocols, each driven through the simulator.

use std::time::Instant;

use sensorsift_core::ranking::{entry_order, RankedEntry, RankedResult};
use sensorsift_core::search::{run_search, SearchParams};
use sensorsift_core::{Corpus, PropertyRegistry};
use serde::{Deserialize, Serialize};

use crate::error::{DistError, Result};
use crate::sim::{ComputeKind, Event, MessageKind, Sim};
use crate::topology::ClusterTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Chain,
    Parallel,
    ParallelK { k: usize },
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Chain => "chain",
            Strategy::Parallel => "parallel",
            Strategy::ParallelK { .. } => "parallel_k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkBytes {
    pub src: usize,
    pub dst: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub strategy: Strategy,
    pub result: RankedResult,
    pub total_time_ns: u64,
    /// Arrival of the last record-carrying message at the SRI. For the
    /// parallel strategy this is the closed-form max over remote nodes.
    pub remote_phase_ns: u64,
    /// The SRI's own local ranking time.
    pub sri_local_ns: u64,
    pub bytes_by_link: Vec<LinkBytes>,
    pub total_bytes: u64,
    pub rounds: u32,
    /// Uids the SRI held when it made the final selection, ascending.
    pub candidate_pool: Vec<String>,
    pub events: Vec<Event>,
}

struct Local {
    list: Vec<RankedEntry>,
    duration_ns: u64,
}

fn rank_locals(
    topology: &ClusterTopology,
    corpora: &[Corpus],
    registry: &PropertyRegistry,
    params: &SearchParams<'_>,
) -> Result<Vec<Local>> {
    topology.validate()?;
    if corpora.len() != topology.node_count {
        return Err(DistError::InvalidTopology(format!(
            "{} corpora for {} nodes",
            corpora.len(),
            topology.node_count
        )));
    }
    corpora
        .iter()
        .enumerate()
        .map(|(node, corpus)| {
            let t = Instant::now();
            let run = run_search(corpus, registry, params)?;
            let measured = t.elapsed().as_nanos() as u64;
            Ok(Local {
                list: run.result.entries,
                duration_ns: topology.processing.duration_ns(node, corpus.len(), measured),
            })
        })
        .collect()
}

fn pool_uids<'a>(entries: impl IntoIterator<Item = &'a RankedEntry>) -> Vec<String> {
    let mut uids: Vec<String> = entries.into_iter().map(|e| e.uid.clone()).collect();
    uids.sort();
    uids.dedup();
    uids
}

#[allow(clippy::too_many_arguments)]
fn outcome(
    strategy: Strategy,
    sim: Sim<'_>,
    result: RankedResult,
    total_time_ns: u64,
    remote_phase_ns: u64,
    sri_local_ns: u64,
    rounds: u32,
    candidate_pool: Vec<String>,
) -> SearchOutcome {
    let bytes_by_link: Vec<LinkBytes> = sim
        .bytes
        .iter()
        .map(|(&(src, dst), &bytes)| LinkBytes { src, dst, bytes })
        .collect();
    SearchOutcome {
        strategy,
        result,
        total_time_ns,
        remote_phase_ns,
        sri_local_ns,
        total_bytes: bytes_by_link.iter().map(|l| l.bytes).sum(),
        bytes_by_link,
        rounds,
        candidate_pool,
        events: sim.events,
    }
}

/// Node 0 ranks and forwards its top N; each following node merges the
/// incoming list with its own ranking and forwards the best N; the last
/// node sends the final list back to node 0.
pub fn search_chain(
    topology: &ClusterTopology,
    corpora: &[Corpus],
    registry: &PropertyRegistry,
    params: &SearchParams<'_>,
) -> Result<SearchOutcome> {
    let locals = rank_locals(topology, corpora, registry, params)?;
    let count = topology.node_count;
    let n = params.n;
    let mut sim = Sim::new(topology);
    let first_end = sim.compute(0, 0, locals[0].duration_ns, ComputeKind::LocalRank);
    let (entries, total) = if count == 1 {
        (locals[0].list.clone(), first_end)
    } else {
        sim.send(0, 1, first_end, MessageKind::TopN, locals[0].list.clone(), 0)?;
        loop {
            let d = sim.next().expect("a chain message is always in flight");
            if d.dst == 0 {
                break (d.records, d.at);
            }
            let i = d.dst;
            let end = sim.compute(i, d.at, locals[i].duration_ns, ComputeKind::LocalRank);
            let merged = RankedResult::merge([d.records.as_slice(), locals[i].list.as_slice()], n);
            sim.send(i, (i + 1) % count, end, MessageKind::TopN, merged.entries, 0)?;
        }
    };
    let pool = pool_uids(&entries);
    let result = RankedResult {
        entries,
        truncated_to: n,
    };
    Ok(outcome(
        Strategy::Chain,
        sim,
        result,
        total,
        total,
        locals[0].duration_ns,
        1,
        pool,
    ))
}

/// Node 0 asks every other node for its local top N, ranks its own corpus
/// meanwhile, then merges everything.
pub fn search_parallel(
    topology: &ClusterTopology,
    corpora: &[Corpus],
    registry: &PropertyRegistry,
    params: &SearchParams<'_>,
) -> Result<SearchOutcome> {
    let locals = rank_locals(topology, corpora, registry, params)?;
    let mut sim = Sim::new(topology);
    for i in 1..topology.node_count {
        sim.send(0, i, 0, MessageKind::Request, Vec::new(), 0)?;
    }
    let sri_end = sim.compute(0, 0, locals[0].duration_ns, ComputeKind::LocalRank);
    let mut received = locals[0].list.clone();
    let mut remote_phase = 0;
    while let Some(d) = sim.next() {
        match d.kind {
            MessageKind::Request => {
                let end = sim.compute(d.dst, d.at, locals[d.dst].duration_ns, ComputeKind::LocalRank);
                sim.send(d.dst, 0, end, MessageKind::TopN, locals[d.dst].list.clone(), 0)?;
            }
            _ => {
                remote_phase = remote_phase.max(d.at);
                received.extend(d.records);
            }
        }
    }
    let total = sim.compute(0, remote_phase.max(sri_end), topology.merge_ns, ComputeKind::Merge);
    let pool = pool_uids(&received);
    let result = RankedResult::merge([received.as_slice()], params.n);
    Ok(outcome(
        Strategy::Parallel,
        sim,
        result,
        total,
        remote_phase,
        locals[0].duration_ns,
        1,
        pool,
    ))
}

/// Records at 1-based positions k, 2k, … of `list`.
fn samples(list: &[RankedEntry], k: usize) -> Vec<RankedEntry> {
    list.iter().skip(k - 1).step_by(k).cloned().collect()
}

/// Prefix length each node must provide so that the SRI holds the global
/// top `n`.
///
/// Samples are walked in ascending (CPWI, uid) order together with the
/// SRI's own list. The sample at position `j·k` of node `i` certifies that
/// node's first `j·k` records; each SRI record certifies itself. Once `n`
/// records are certified, every global top-`n` record orders at or before
/// the last one visited, so node `i` can only contribute records before its
/// next unseen sample, that is within its first `c_i + k - 1`.
pub fn certified_prefixes(sri: &[RankedEntry], remote_lists: &[Vec<RankedEntry>], k: usize, n: usize) -> Vec<usize> {
    let nodes = remote_lists.len() + 1;
    let mut tagged: Vec<(&RankedEntry, usize, usize)> = sri.iter().enumerate().map(|(p, e)| (e, 0, p + 1)).collect();
    for (i, list) in remote_lists.iter().enumerate() {
        for (j, e) in list.iter().skip(k - 1).step_by(k).enumerate() {
            tagged.push((e, i + 1, (j + 1) * k));
        }
    }
    tagged.sort_by(|a, b| entry_order(a.0, b.0));

    let mut certified = vec![0usize; nodes];
    let mut total = 0;
    for (_, node, count) in tagged {
        total += count - certified[node];
        certified[node] = count;
        if total >= n {
            return remote_lists
                .iter()
                .enumerate()
                .map(|(i, list)| (certified[i + 1] + k - 1).min(list.len()))
                .collect();
        }
    }
    remote_lists.iter().map(Vec::len).collect()
}

/// Two-round parallel search: remote nodes first send every k-th record of
/// their local top N, the SRI certifies how much of each list it needs and
/// fetches just those records.
pub fn search_parallel_k(
    topology: &ClusterTopology,
    corpora: &[Corpus],
    registry: &PropertyRegistry,
    params: &SearchParams<'_>,
    k: usize,
) -> Result<SearchOutcome> {
    let n = params.n;
    if k == 0 || k >= n {
        return Err(DistError::InvalidK { k, n });
    }
    let locals = rank_locals(topology, corpora, registry, params)?;
    let count = topology.node_count;
    let mut sim = Sim::new(topology);
    for i in 1..count {
        sim.send(0, i, 0, MessageKind::Request, Vec::new(), 0)?;
    }
    let sri_end = sim.compute(0, 0, locals[0].duration_ns, ComputeKind::LocalRank);
    let mut received = locals[0].list.clone();
    let mut remote_phase = 0;
    while let Some(d) = sim.next() {
        match d.kind {
            MessageKind::Request => {
                let end = sim.compute(d.dst, d.at, locals[d.dst].duration_ns, ComputeKind::LocalRank);
                sim.send(d.dst, 0, end, MessageKind::Samples, samples(&locals[d.dst].list, k), 0)?;
            }
            _ => {
                remote_phase = remote_phase.max(d.at);
                received.extend(d.records);
            }
        }
    }

    let remote_lists: Vec<Vec<RankedEntry>> = locals[1..].iter().map(|l| l.list.clone()).collect();
    let prefixes = certified_prefixes(&locals[0].list, &remote_lists, k, n);
    let certify_end = sim.compute(0, remote_phase.max(sri_end), topology.merge_ns, ComputeKind::Certify);
    for (i, &prefix) in prefixes.iter().enumerate() {
        // only positions that were not sampled are new
        if prefix > prefix / k {
            sim.send(0, i + 1, certify_end, MessageKind::FetchRequest, Vec::new(), prefix)?;
        }
    }
    while let Some(d) = sim.next() {
        match d.kind {
            MessageKind::FetchRequest => {
                let fresh: Vec<RankedEntry> = locals[d.dst].list[..d.prefix]
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| (p + 1) % k != 0)
                    .map(|(_, e)| e.clone())
                    .collect();
                sim.send(d.dst, 0, d.at, MessageKind::Prefix, fresh, 0)?;
            }
            _ => {
                remote_phase = remote_phase.max(d.at);
                received.extend(d.records);
            }
        }
    }
    let total = sim.compute(0, remote_phase.max(certify_end), topology.merge_ns, ComputeKind::Merge);
    let pool = pool_uids(&received);
    let result = RankedResult::merge([received.as_slice()], n);
    Ok(outcome(
        Strategy::ParallelK { k },
        sim,
        result,
        total,
        remote_phase,
        locals[0].duration_ns,
        2,
        pool,
    ))
}

/// Runs `strategy`; the outcome carries the full event log.
pub fn simulate_timeline(
    strategy: Strategy,
    topology: &ClusterTopology,
    corpora: &[Corpus],
    registry: &PropertyRegistry,
    params: &SearchParams<'_>,
) -> Result<SearchOutcome> {
    match strategy {
        Strategy::Chain => search_chain(topology, corpora, registry, params),
        Strategy::Parallel => search_parallel(topology, corpora, registry, params),
        Strategy::ParallelK { k } => search_parallel_k(topology, corpora, registry, params, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(uid: &str, cpwi: f64) -> RankedEntry {
        RankedEntry { uid: uid.into(), cpwi }
    }

    fn list(prefix: &str, values: &[f64]) -> Vec<RankedEntry> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| e(&format!("{prefix}{i:03}"), v))
            .collect()
    }

    #[test]
    fn samples_are_every_kth() {
        let l = list("a", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let s = samples(&l, 3);
        assert_eq!(s, vec![l[2].clone(), l[5].clone()]);
        assert_eq!(samples(&l, 1), l);
    }

    #[test]
    fn certification_stops_at_n() {
        let sri = list("s", &[0.5, 0.9]);
        let a = list("a", &[0.1, 0.2, 0.3, 0.4, 0.6, 0.7]);
        let b = list("b", &[0.15, 0.8, 0.85, 0.95, 0.96, 0.97]);
        // k=2 samples: a@2=0.2, a@4=0.4, a@6=0.7, b@2=0.8, b@4=0.95, b@6=0.97
        // walk: a0.2(2) a0.4(4) s0.5(5) -> n=5 reached
        let p = certified_prefixes(&sri, &[a, b], 2, 5);
        assert_eq!(p, vec![5, 1]);
    }

    #[test]
    fn short_lists_are_fetched_whole() {
        let sri = list("s", &[0.5]);
        let a = list("a", &[0.1, 0.2, 0.3]);
        let p = certified_prefixes(&sri, &[a], 2, 10);
        assert_eq!(p, vec![3]);
    }
}
