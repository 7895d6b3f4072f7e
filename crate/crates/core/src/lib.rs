pub mod adversary;
pub mod classical;
pub mod error;
pub mod experiment;
pub mod network;
pub mod orchestrator;
pub mod protocols;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
