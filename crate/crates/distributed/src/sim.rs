//! Discrete-event core: a virtual clock, a delivery queue and the event log.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use sensorsift_core::ranking::RankedEntry;
use serde::{Deserialize, Serialize};

use crate::error::{DistError, Result};
use crate::topology::ClusterTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Search request from the SRI. Carries no records.
    Request,
    /// A ranked list, or a chain node's running top N.
    TopN,
    /// Every k-th record of a local list.
    Samples,
    /// The SRI asking for a prefix of a node's list. Carries no records.
    FetchRequest,
    /// Records of a requested prefix not already sent as samples.
    Prefix,
}

impl MessageKind {
    /// Control messages are treated as free: zero bytes, zero delay.
    pub fn is_control(self) -> bool {
        matches!(self, MessageKind::Request | MessageKind::FetchRequest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeKind {
    LocalRank,
    Certify,
    Merge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Message {
        src: usize,
        dst: usize,
        kind: MessageKind,
        records: usize,
        bytes: u64,
        send_ns: u64,
        recv_ns: u64,
    },
    Compute {
        node: usize,
        kind: ComputeKind,
        start_ns: u64,
        end_ns: u64,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Delivery {
    pub at: u64,
    pub dst: usize,
    pub kind: MessageKind,
    pub records: Vec<RankedEntry>,
    /// Prefix length for fetch requests.
    pub prefix: usize,
}

pub(crate) struct Sim<'a> {
    topology: &'a ClusterTopology,
    queue: BinaryHeap<Reverse<(u64, usize, usize, u64)>>,
    pending: BTreeMap<u64, Delivery>,
    seq: u64,
    hops: usize,
    free_at: Vec<u64>,
    pub events: Vec<Event>,
    pub bytes: BTreeMap<(usize, usize), u64>,
}

impl<'a> Sim<'a> {
    pub fn new(topology: &'a ClusterTopology) -> Self {
        Sim {
            topology,
            queue: BinaryHeap::new(),
            pending: BTreeMap::new(),
            seq: 0,
            hops: 0,
            free_at: vec![0; topology.node_count],
            events: Vec::new(),
            bytes: BTreeMap::new(),
        }
    }

    /// Queues a message sent at `at`. Returns its delivery time.
    pub fn send(
        &mut self,
        src: usize,
        dst: usize,
        at: u64,
        kind: MessageKind,
        records: Vec<RankedEntry>,
        prefix: usize,
    ) -> Result<u64> {
        self.hops += 1;
        let link = self.topology.link(src, dst);
        let bytes = records.len() as u64 * self.topology.record_size;
        let delay = if kind.is_control() {
            link.latency_ns.map(|_| 0)
        } else {
            link.transfer_ns(bytes)
        };
        let delay = delay.ok_or(DistError::SimFault {
            hop: self.hops,
            src,
            dst,
        })?;
        let recv = at + delay;
        self.events.push(Event::Message {
            src,
            dst,
            kind,
            records: records.len(),
            bytes,
            send_ns: at,
            recv_ns: recv,
        });
        if bytes > 0 {
            *self.bytes.entry((src, dst)).or_default() += bytes;
        }
        self.seq += 1;
        self.queue.push(Reverse((recv, src, dst, self.seq)));
        self.pending.insert(
            self.seq,
            Delivery {
                at: recv,
                dst,
                kind,
                records,
                prefix,
            },
        );
        Ok(recv)
    }

    /// Next delivery in (time, src, dst, send order).
    pub fn next(&mut self) -> Option<Delivery> {
        let Reverse((_, _, _, seq)) = self.queue.pop()?;
        self.pending.remove(&seq)
    }

    /// Runs `duration` of work on `node` no earlier than `ready`; returns the
    /// finish time.
    pub fn compute(&mut self, node: usize, ready: u64, duration: u64, kind: ComputeKind) -> u64 {
        let start = ready.max(self.free_at[node]);
        let end = start + duration;
        self.free_at[node] = end;
        self.events.push(Event::Compute {
            node,
            kind,
            start_ns: start,
            end_ns: end,
        });
        end
    }
}
