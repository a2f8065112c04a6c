//! Multi-objective actor-critic with vector value functions.
//!
//! One actor and one critic per objective are trained with PPO-clip and GAE
//! while a correlation matrix `W` mixes per-objective values into composite
//! values `Y = W V`. Rows of `W` are chosen among the marginal weights of an
//! undominated set that AOLS builds from estimated value vectors.

pub mod actor;
pub mod autodiff;
pub mod critic;
pub mod env;
pub mod geometry;
pub mod scalar;
pub mod trainer;

pub use scalar::Scalar;

pub type WeightVector = geometry::WeightVector<f64>;
pub type ValueVector = geometry::ValueVector<f64>;
pub type UndominatedSet = geometry::UndominatedSet<f64>;
pub type AolsResult = geometry::AolsResult<f64>;

pub type WeightVectorF32 = geometry::WeightVector<f32>;
pub type ValueVectorF32 = geometry::ValueVector<f32>;
