//! Differentiable substrate: dense matrices, a ReLU MLP with dropout and
//! link-transformed heads, backpropagation and plain SGD.

mod activation;
mod matrix;
mod mlp;
mod serialize;

pub use activation::{softplus, softplus_grad, softplus_inv};
pub use matrix::DenseMatrix;
pub use mlp::{GradientTape, Gradients, HeadSpec, Layer, LayerGrad, Link, MlpModel};
pub use serialize::{ModelDocument, MODEL_FORMAT, MODEL_FORMAT_VERSION};
