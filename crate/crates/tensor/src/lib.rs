//! Dense `f64` numerics for the agent: tensors, a define-by-run reverse-mode
//! tape, named parameter stores, Adam, and the checkpoint container.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod tape;
pub mod tensor;

pub use checkpoint::Container;
pub use error::{Result, TensorError};
pub use optim::{Adam, AdamConfig};
pub use params::{ParamGrads, ParamId, ParameterStore};
pub use tape::{sigmoid, Grads, Tape, Var};
pub use tensor::Tensor;
