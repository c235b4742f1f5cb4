//! Trajectory and action encoders.

mod config;
mod init;
mod lstm;
mod transformer;

pub use config::EncoderConfig;
pub use init::{xavier_uniform, zeros};
pub use lstm::ActionEncoder;
pub use transformer::{positional_encoding, StateEncoder};
