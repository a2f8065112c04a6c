//! Weight-simplex geometry: scalarisation, undominated sets, marginal
//! (corner) weights, optimistic bounds and the AOLS search built on them.
//!
//! Everything here is generic over [`Scalar`](crate::scalar::Scalar) and pure.

mod aols;
mod bound;
mod envelope;
mod error;
mod linalg;
pub mod lp;
mod oracle;
mod set;
mod vectors;

pub use aols::{aols, lookup_evaluator, sentinel_priority, AolsResult};
pub use bound::{optimistic_upper_bound, optimistic_upper_bound_boxed, ValueBox};
pub use envelope::{corner_weights, MAX_SUPPORTED_DIM};
pub use error::GeometryError;
pub use oracle::{best_grid_advantage, brute_force_us, simplex_grid};
pub use set::{max_scalarized, ExploredWeight, Member, SetDocument, UndominatedSet};
pub use vectors::{relative_improvement, scalarize, ValueVector, WeightVector};

/// Free-function form of [`UndominatedSet::marginal_weights`].
pub fn marginal_weights<T: crate::scalar::Scalar>(s: &UndominatedSet<T>) -> Result<Vec<WeightVector<T>>, GeometryError> {
    s.marginal_weights()
}
