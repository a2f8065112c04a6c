//! Per-objective critics, the correlation matrix and advantage estimation.

mod advantage;
mod ensemble;
mod matrix;
mod normalizer;

pub use advantage::{gae, gae_segmented, rewards_to_go, td_residual};
pub(crate) use ensemble::gather_rows;
pub use ensemble::{CriticEnsemble, CriticError, FitConfig};
pub use matrix::{CorrelationMatrix, RowSelection};
pub use normalizer::Normalizer;
