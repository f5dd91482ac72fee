//! Synthetic structural-health-monitoring data for a fixed-fixed steel beam.
//!
//! A [`scenario::Scenario`] realizes temperature, humidity and live load on an
//! hourly grid. Each sub-dataset adds a damage history and optionally sensor
//! faults; [`pipeline::run_generation`] simulates one 3-minute acceleration
//! record per hour and writes the corpus.

pub mod damage;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod faults;
pub mod grid;
pub mod io;
pub mod load;
pub mod pipeline;
pub mod scenario;
pub mod seed;
pub mod signal;
pub mod structure;

pub use error::{Error, Result};
pub use scenario::{Scenario, ScenarioConfig, SubDataset};
