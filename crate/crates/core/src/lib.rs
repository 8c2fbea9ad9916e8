pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod ipm;
pub mod network;
pub mod nlp;
pub mod nondim;
pub mod physics;
pub mod simulator;
pub mod transcription;

pub use error::{Error, Result};
