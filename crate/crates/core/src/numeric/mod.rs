//! Dense linear algebra, fully connected layers and the Adam optimizer.

mod adam;
mod dense;
mod matrix;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseCache, DenseGrads, DenseLayer};
pub use matrix::{dot, matmul, matmul_transposed, squared_euclidean, transposed_matmul, Matrix};
