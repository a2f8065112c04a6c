use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{clip_box, Action, ActionSpace, EnvError, Environment, MomdpSpec, StepResult};
use crate::geometry::ValueVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointMassConfig {
    pub dt: f64,
    pub v_cap: f64,
    /// Standard deviation of the initial position and velocity; zero disables noise.
    pub start_noise: f64,
    pub horizon: usize,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        Self { dt: 0.1, v_cap: 0.5, start_noise: 0.05, horizon: 200 }
    }
}

/// Unit mass on a line pushed by a force in [−1, 1].
///
/// Objectives: velocity `v`, control `−a²`, impact `−max(0, |v| − v_cap)²`, all on the
/// post-step velocity.
#[derive(Debug, Clone)]
pub struct PointMass1D {
    cfg: PointMassConfig,
    spec: MomdpSpec,
    x: f64,
    v: f64,
    t: usize,
    done: bool,
}

impl PointMass1D {
    pub fn new(cfg: PointMassConfig) -> Result<Self, EnvError> {
        if !(cfg.dt > 0.0) || !(cfg.v_cap >= 0.0) || !(cfg.start_noise >= 0.0) || cfg.horizon == 0 {
            return Err(EnvError::Config(format!("invalid point-mass settings {cfg:?}")));
        }
        let spec = MomdpSpec {
            state_dim: 2,
            action_space: ActionSpace::Box { low: vec![-1.0], high: vec![1.0] },
            objective_names: vec!["velocity".into(), "control".into(), "impact".into()],
            horizon: cfg.horizon,
            discount_hint: 0.99,
        };
        Ok(Self { cfg, spec, x: 0.0, v: 0.0, t: 0, done: true })
    }

    pub fn state(&self) -> [f64; 2] {
        [self.x, self.v]
    }
}

impl Environment for PointMass1D {
    fn spec(&self) -> &MomdpSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (self.x, self.v) = (0.0, 0.0);
        if self.cfg.start_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, self.cfg.start_noise).unwrap();
            self.x = noise.sample(&mut rng);
            self.v = noise.sample(&mut rng);
        }
        self.t = 0;
        self.done = false;
        vec![self.x, self.v]
    }

    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let Action::Continuous(raw) = action else {
            return Err(EnvError::InvalidAction(format!("{action:?} is not a continuous force")));
        };
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let (a, clipped) = clip_box(raw, &[-1.0], &[1.0])?;
        let a = a[0];
        self.v += a * self.cfg.dt;
        self.x += self.v * self.cfg.dt;
        self.t += 1;
        let excess = (self.v.abs() - self.cfg.v_cap).max(0.0);
        let truncated = self.t >= self.cfg.horizon;
        self.done = truncated;
        Ok(StepResult {
            state: vec![self.x, self.v],
            reward: ValueVector::new(vec![self.v, -a * a, -excess * excess]),
            terminal: false,
            truncated,
            clipped,
        })
    }
}
