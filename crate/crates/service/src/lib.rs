//! Search service: a JSON request/response API over a corpus snapshot.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/` | | service name, wire version, current snapshot |
//! | POST | `/search` | [`SearchRequest`] | [`SearchResponse`] |
//! | GET | `/sensors/{uid}` | | sensor description, 404 if unknown |
//! | GET | `/properties` | | registry entries with observed bounds |
//! | POST | `/corpus/load` | [`LoadRequest`] | [`SnapshotInfo`] |
//! | POST | `/topology` | topology file | node count |
//! | POST | `/simulate` | [`SimulateRequest`] | outcome with event log |
//!
//! Parse errors, unknown properties and invalid k give 400; searching
//! before a corpus is loaded gives 409. [`Engine`] is usable without HTTP.

mod engine;
mod error;
mod http;
pub mod wire;

pub use engine::{Engine, Snapshot};
pub use error::{ApiError, ErrorBody};
pub use http::{router, serve};
pub use wire::{
    FilterInput, Heuristic, LoadRequest, ResponseEntry, SearchRequest, SearchResponse, SimulateRequest, SnapshotInfo,
    StrategyRequest,
};
