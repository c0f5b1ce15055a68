//! Context-aware sensor search and ranking.
//!
//! Sensors are first filtered by hard requirements ([`query`]), then ranked
//! by their weighted distance to an ideal sensor ([`ranking`]). Property
//! values are normalized against the bounds tracked by the
//! [`PropertyRegistry`]. [`corpus`] holds the columnar store, the seeded
//! generator and the file format.

pub mod corpus;
pub mod error;
pub mod model;
pub mod query;
pub mod ranking;
pub mod search;

pub use corpus::{Corpus, RowId};
pub use error::{Error, Result};
pub use model::{Bounds, NormalizedVector, Polarity, PropertyDef, PropertyRegistry, SensorDescription};
