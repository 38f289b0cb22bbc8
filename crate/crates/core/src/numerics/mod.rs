//! Dense 2-D tensors, eager kernels, and a reverse-mode tape.

mod finite_diff;
pub mod ops;
mod param;
mod tape;
mod tensor;

pub use finite_diff::{central_difference, finite_diff_grad, relative_error};
pub use ops::{cross_entropy, layer_norm, matmul, softmax_rows};
pub use param::Parameter;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor2D;
