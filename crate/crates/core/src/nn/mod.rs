//! Minimal f64 autodiff, parameters, optimizer, and checkpoints.

pub mod checkpoint;
pub mod layers;
pub mod params;
pub mod tape;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use layers::GraphBuilder;
pub use params::{Adam, Init, ParamStore};
pub use tape::{Grads, Tape, Var};
