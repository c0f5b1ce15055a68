//! Proximity-based ranking: slider priorities become weights, sensors are
//! scored by weighted Euclidean distance to an ideal sensor (lower is
//! better), and an optional heuristic prunes the candidate set first.

mod cphf;
mod index;
mod priority;

pub use cphf::{cphf_accuracy, cphf_prune, removal_count};
pub use index::{
    cpwi, default_ideal, entry_order, ideal_from_native, rank_and_select, rank_records, IdealSensor, RankedEntry,
    RankedResult,
};
pub use priority::{compute_weights, PriorityEntry, PrioritySpec, WeightVector};
