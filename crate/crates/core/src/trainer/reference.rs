use super::rollout::{rng_for, update_stream, EnvPool};
use super::sequence::{stream_targets, update_actor_and_critic};
use super::{TrainConfig, TrainError};
use crate::actor::PolicyParams;
use crate::autodiff::AdamState;
use crate::critic::CriticEnsemble;

/// Plain PPO with GAE on a single-objective environment: no AOLS, no correlation matrix.
///
/// Initialisation, rollouts and random streams follow [`Trainer`](super::Trainer), so a
/// one-objective run of the full pipeline should retrace it exactly.
pub struct ReferencePpo {
    cfg: TrainConfig,
    policy: PolicyParams,
    actor_opt: AdamState,
    critics: CriticEnsemble,
    pool: EnvPool,
    batch: u64,
}

impl ReferencePpo {
    pub fn new(cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate().map_err(|(s, k, m)| TrainError::Config(format!("{s}.{k}: {m}")))?;
        let spec = cfg.env.spec().map_err(|e| TrainError::Config(e.to_string()))?;
        if spec.objectives() != 1 {
            return Err(TrainError::Config(format!("reference PPO needs one objective, got {}", spec.objectives())));
        }
        let mut rng = rng_for(cfg.seed, super::run::INIT_STREAM);
        let policy = PolicyParams::new(spec.state_dim, &spec.action_space, &cfg.hidden, &mut rng);
        let critics = CriticEnsemble::new(spec.state_dim, 1, &cfg.hidden, &mut rng);
        let envs = (0..cfg.n_envs)
            .map(|_| cfg.env.build().map_err(|e| TrainError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let pool = EnvPool::new(envs, cfg.seed, cfg.workers)?;
        Ok(Self { actor_opt: AdamState::new(&policy), policy, critics, pool, cfg, batch: 0 })
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.policy
    }

    pub fn critics(&self) -> &CriticEnsemble {
        &self.critics
    }

    /// Collect one batch, then one PPO update and one critic fit on all of it.
    pub fn step_batch(&mut self) -> Result<(), TrainError> {
        let k = self.batch;
        let batch = self.pool.collect(&self.policy, self.cfg.horizon, self.cfg.gamma, k)?;
        let range = 0..batch.len();
        let rewards: Vec<f64> = batch.records.iter().map(|r| r.reward[0]).collect();
        let targets = stream_targets(&batch, &range, &rewards, &self.critics, 0, self.cfg.gamma, self.cfg.lambda)?;
        let mut rng = rng_for(self.cfg.seed, update_stream(k, 0));
        update_actor_and_critic(&mut self.policy, &mut self.actor_opt, &mut self.critics, 0, targets, &self.cfg, &mut rng, k)?;
        self.batch += 1;
        Ok(())
    }
}
