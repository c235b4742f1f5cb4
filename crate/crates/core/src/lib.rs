pub mod agent;
pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod rng;
pub mod train;
pub mod trajectory;
pub mod vocab;

pub use error::{CoreError, Result};
