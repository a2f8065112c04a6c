use serde::Serialize;

use super::run::check_compatible;
use super::rollout::rng_for;
use super::state::TrainerCheckpoint;
use super::{EnvConfig, TrainError};
use crate::actor::PolicyParams;

/// Hard cap on evaluation episode length, far beyond any built-in horizon.
const MAX_EPISODE_STEPS: usize = 1_000_000;

/// Per-objective statistics of deterministic-mode episodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalTable {
    pub objectives: Vec<String>,
    /// Sample mean of the undiscounted return.
    pub mean: Vec<f64>,
    /// Sample standard deviation (n − 1 denominator; zero for a single episode).
    pub std: Vec<f64>,
    pub discounted_mean: Vec<f64>,
    /// Means divided by the largest absolute mean, for radar plots.
    pub normalized: Vec<f64>,
    /// Undiscounted return of every episode.
    pub returns: Vec<Vec<f64>>,
}

impl EvalTable {
    /// `objective  mean ± std` lines.
    pub fn render(&self) -> String {
        let width = self.objectives.iter().map(String::len).max().unwrap_or(0).max(9);
        let mut out = format!("{:<width$}  {:>14}  {:>12}\n", "objective", "mean", "std");
        for (k, name) in self.objectives.iter().enumerate() {
            out.push_str(&format!("{name:<width$}  {:>14.6}  {:>12.6}\n", self.mean[k], self.std[k]));
        }
        out
    }
}

/// Runs `episodes` deterministic-mode episodes (mean action or argmax) of `policy` on `env`.
///
/// Reset seeds come from `seed`, so stochastic starts are reproducible.
pub fn evaluate(policy: &PolicyParams, env: &EnvConfig, episodes: usize, gamma: f64, seed: u64) -> Result<EvalTable, TrainError> {
    if episodes == 0 {
        return Err(TrainError::Config("evaluation needs at least one episode".into()));
    }
    let mut e = env.build().map_err(|e| TrainError::Config(e.to_string()))?;
    let spec = e.spec().clone();
    if policy.state_dim() != spec.state_dim || policy.action_dim() != spec.action_space.size() {
        return Err(TrainError::Checkpoint(crate::autodiff::CheckpointError::Invalid(format!(
            "policy maps {} inputs to {} actions, environment has {} and {}",
            policy.state_dim(),
            policy.action_dim(),
            spec.state_dim,
            spec.action_space.size()
        ))));
    }
    let dim = spec.objectives();
    let mut rng = rng_for(seed, 0);
    let mut returns = Vec::with_capacity(episodes);
    let mut discounted = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = e.reset(rand::RngCore::next_u64(&mut rng));
        let (mut raw, mut disc, mut discount) = (vec![0.0; dim], vec![0.0; dim], 1.0);
        let mut steps = 0;
        loop {
            let action = policy.deterministic_action(&state)?;
            let step = e.step(&action).map_err(|err| TrainError::Env(err.to_string()))?;
            for (k, r) in step.reward.as_slice().iter().enumerate() {
                raw[k] += r;
                disc[k] += discount * r;
            }
            discount *= gamma;
            steps += 1;
            if step.done() {
                break;
            }
            if steps >= MAX_EPISODE_STEPS {
                return Err(TrainError::Env(format!("episode did not end within {MAX_EPISODE_STEPS} steps")));
            }
            state = step.state;
        }
        returns.push(raw);
        discounted.push(disc);
    }

    let n = episodes as f64;
    let column_mean = |rows: &[Vec<f64>], k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
    let mean: Vec<f64> = (0..dim).map(|k| column_mean(&returns, k)).collect();
    let std = (0..dim)
        .map(|k| {
            if episodes < 2 {
                return 0.0;
            }
            let ss: f64 = returns.iter().map(|r| (r[k] - mean[k]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    let scale = mean.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let normalized = mean.iter().map(|m| if scale > 0.0 { m / scale } else { 0.0 }).collect();
    Ok(EvalTable {
        objectives: spec.objective_names,
        discounted_mean: (0..dim).map(|k| column_mean(&discounted, k)).collect(),
        mean,
        std,
        normalized,
        returns,
    })
}

/// [`evaluate`] on a checkpoint's policy after checking it fits `env`.
pub fn evaluate_checkpoint(
    ckpt: &TrainerCheckpoint,
    env: &EnvConfig,
    episodes: usize,
    gamma: f64,
    seed: u64,
) -> Result<EvalTable, TrainError> {
    let spec = env.spec().map_err(|e| TrainError::Config(e.to_string()))?;
    check_compatible(ckpt, &spec)?;
    evaluate(&ckpt.learner.policy, env, episodes, gamma, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TreasureLayout;
    use crate::trainer::EnvKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> EnvConfig {
        EnvKind::TreasureGrid { layout: TreasureLayout::classic(), horizon: 100 }.into()
    }

    #[test]
    fn deterministic_policy_has_zero_spread() {
        let env = grid();
        let spec = env.spec().unwrap();
        let p = PolicyParams::new(spec.state_dim, &spec.action_space, &[8], &mut ChaCha8Rng::seed_from_u64(1));
        let t = evaluate(&p, &env, 5, 0.99, 0).unwrap();
        assert_eq!(t.std, vec![0.0, 0.0]);
        assert_eq!(t.returns.len(), 5);
        assert!(t.render().contains("treasure"));
    }

    #[test]
    fn zero_episodes_and_mismatch_fail() {
        let env = grid();
        let spec = env.spec().unwrap();
        let p = PolicyParams::new(spec.state_dim, &spec.action_space, &[8], &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(evaluate(&p, &env, 0, 0.99, 0), Err(TrainError::Config(_))));
        let wrong = PolicyParams::new(3, &spec.action_space, &[8], &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(evaluate(&wrong, &env, 1, 0.99, 0), Err(TrainError::Checkpoint(_))));
    }
}
