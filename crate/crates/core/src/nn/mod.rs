//! Dense tensors, sparse message passing, reverse-mode differentiation and
//! the optimizer used to train every model in the crate.

mod activations;
mod layers;
mod optim;
mod params;
mod sparse;
mod tape;
mod tensor;

pub use activations::{sigmoid, softplus, Baseline};
pub use layers::{embed, gcn_layer, gin_layer, Linear, Mlp};
pub use optim::Adam;
pub use params::{glorot, ParamId, Params};
pub use sparse::{GraphIndex, SparseAdjacency, SparseOp};
pub use tape::{Gradients, PoolMode, RegressionLoss, Tape, Var};
pub use tensor::Tensor;
