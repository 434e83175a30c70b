//! Deadline-aware client selection for federated learning over a shared
//! wireless cell.
//!
//! The crate models a single cell with heterogeneous clients, schedules
//! which clients take part in each round, and simulates the resulting
//! training protocol end to end.

pub mod channel;
pub mod config;
pub mod error;
pub mod learning;
pub mod metrics;
pub mod protocol;
pub mod resources;
pub mod rng;
pub mod runner;
pub mod selection;
pub mod units;

pub use error::{Error, Result};
