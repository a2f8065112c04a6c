//! Dense tensors, a reverse-mode tape, MLPs, Adam and the MVAC parameter format.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod graph;
mod mlp;
mod tensor;

pub use adam::{clip_global_norm, global_norm, AdamState};
pub use checkpoint::CheckpointError;
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use graph::{Gradients, Graph, Var};
pub use mlp::{BoundMlp, Layer, MlpParams, Parameters};
pub use tensor::{add_row, matmul_t, relu, Tensor, TensorError};
