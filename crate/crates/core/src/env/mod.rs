//! Multi-objective environments with vector rewards and a tabular Pareto oracle.

mod linear_quad;
mod oracle;
mod point_mass;
mod subset;
mod treasure;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ValueVector;

pub use linear_quad::{LinearQuad, LinearQuadConfig};
pub use oracle::{pareto_oracle, TabularModel, MAX_ORACLE_ACTIONS, MAX_ORACLE_STATES};
pub use point_mass::{PointMass1D, PointMassConfig};
pub use subset::ObjectiveSubset;
pub use treasure::{TreasureGrid, TreasureLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete(usize),
    Box { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    /// Number of discrete actions or the box dimension.
    pub fn size(&self) -> usize {
        match self {
            ActionSpace::Discrete(n) => *n,
            ActionSpace::Box { low, .. } => low.len(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomdpSpec {
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub objective_names: Vec<String>,
    pub horizon: usize,
    pub discount_hint: f64,
}

impl MomdpSpec {
    pub fn objectives(&self) -> usize {
        self.objective_names.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: ValueVector<f64>,
    pub terminal: bool,
    pub truncated: bool,
    /// Set when a continuous action was clipped into the box.
    pub clipped: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("step called on a finished episode; reset first")]
    EpisodeOver,
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid environment configuration: {0}")]
    Config(String),
}

pub trait Environment: Send {
    fn spec(&self) -> &MomdpSpec;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError>;
}

/// Clips `a` into `[low, high]`, reporting whether anything changed.
pub(crate) fn clip_box(a: &[f64], low: &[f64], high: &[f64]) -> Result<(Vec<f64>, bool), EnvError> {
    if a.len() != low.len() {
        return Err(EnvError::InvalidAction(format!("expected {} action dims, got {}", low.len(), a.len())));
    }
    if a.iter().any(|x| x.is_nan()) {
        return Err(EnvError::InvalidAction("NaN action".into()));
    }
    let out: Vec<f64> = a.iter().zip(low.iter().zip(high)).map(|(x, (lo, hi))| x.clamp(*lo, *hi)).collect();
    let clipped = out.iter().zip(a).any(|(o, x)| o != x);
    Ok((out, clipped))
}
