//! Dense 64-bit tensors with tape-based reverse-mode differentiation, the
//! recurrent layers and losses the models need, and the Adam optimizer.
//!
//! A [`Graph`] is built fresh for every forward pass. Parameters live in a
//! [`Params`] store owned by each model and are bound into the graph as
//! leaves; [`Graph::backward`] walks the recorded nodes once, in reverse
//! insertion order, and returns gradients for every leaf that asked for one.

mod adam;
mod checkpoint;
mod gradcheck;
mod graph;
mod layers;
mod params;
mod tensor;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, grad_check_params};
pub use graph::{Gradients, Graph, Label, Var};
pub use layers::{Embedding, LstmCell, LstmState, Linear};
pub use params::{Bound, ParamId, Params};
pub use tensor::Tensor;
