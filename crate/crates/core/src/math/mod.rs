//! Numeric core: tensors, a reverse-mode autodiff tape and the Adam
//! optimizer.

mod graph;
mod ops;
mod optim;
mod tensor;

pub use graph::{Gradients, Graph, Var};
pub use ops::{
    attention, cross_entropy, dot, dropout, layer_norm, scaled_dot, softmax, Attended, Mode,
};
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor;

/// Layer normalization epsilon.
pub const LAYER_NORM_EPS: f64 = 1e-5;
