//! Distributed top-N sensor search on a simulated cluster.
//!
//! Each node holds part of the corpus and ranks it locally with the same
//! registry, so CPWI values are comparable across nodes. Three protocols
//! combine the local lists: chain, parallel, and parallel with the
//! k-extension. A deterministic discrete-event simulator charges latency
//! and bandwidth for every message and records an event log.
//!
//! [`analytic`] holds the closed-form timing models and the data-saving
//! model for the k-extension.

pub mod analytic;
mod error;
mod sim;
mod strategy;
mod topology;

pub use analytic::{analytic_saving, fit_record_size, render_table3, table3_report, Saving, Table3Report};
pub use error::{DistError, Result};
pub use sim::{ComputeKind, Event, MessageKind};
pub use strategy::{
    certified_prefixes, search_chain, search_parallel, search_parallel_k, simulate_timeline, LinkBytes, SearchOutcome,
    Strategy,
};
pub use topology::{ClusterTopology, Link, LinkValues, NodeFile, ProcessingFile, ProcessingModel, TopologyFile};
