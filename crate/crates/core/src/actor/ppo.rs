use rand::seq::SliceRandom;
use rand::Rng;

use super::policy::{ActorError, PolicyParams};
use crate::autodiff::{clip_global_norm, AdamState, Graph, Tensor};
use crate::critic::gather_rows;
use crate::env::Action;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipConfig {
    pub epsilon_clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    /// Global gradient-norm cap applied before each Adam step.
    pub max_grad_norm: Option<f64>,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { epsilon_clip: 0.2, epochs: 10, minibatch: 64, max_grad_norm: Some(0.5) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoBatch {
    pub states: Tensor,
    pub actions: Vec<Action>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn subset(&self, idx: &[usize]) -> PpoBatch {
        PpoBatch {
            states: gather_rows(&self.states, idx),
            actions: idx.iter().map(|k| self.actions[*k].clone()).collect(),
            old_log_probs: idx.iter().map(|k| self.old_log_probs[*k]).collect(),
            advantages: idx.iter().map(|k| self.advantages[*k]).collect(),
        }
    }

    fn validate(&self) -> Result<(), ActorError> {
        let n = self.actions.len();
        if self.states.rows() != n || self.old_log_probs.len() != n || self.advantages.len() != n {
            return Err(ActorError::Dimension(format!(
                "batch of {} states, {n} actions, {} log-probs, {} advantages",
                self.states.rows(),
                self.old_log_probs.len(),
                self.advantages.len()
            )));
        }
        if self.advantages.iter().any(|a| !a.is_finite()) {
            return Err(ActorError::NonFinite("advantage".into()));
        }
        if self.old_log_probs.iter().any(|a| !a.is_finite()) {
            return Err(ActorError::NonFinite("old log-probability".into()));
        }
        Ok(())
    }
}

/// Zero mean, unit variance (population); a constant batch maps to zeros.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    if adv.is_empty() {
        return Vec::new();
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - mean) / std).collect()
}

/// Clipped surrogate `mean(min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â))` and its gradient (ascent direction).
pub fn surrogate_with_grad(p: &PolicyParams, batch: &PpoBatch, eps: f64) -> Result<(f64, Vec<Tensor>), ActorError> {
    let mut g = Graph::new();
    let bound = p.bind(&mut g);
    let s = g.leaf(batch.states.clone());
    let lp = p.log_prob_graph(&mut g, &bound, s, &batch.actions)?;
    let old = g.leaf(Tensor::vector(batch.old_log_probs.clone()));
    let adv = g.leaf(Tensor::vector(batch.advantages.clone()));
    let log_ratio = g.sub(lp, old)?;
    let ratio = g.exp(log_ratio);
    let unclipped = g.mul(ratio, adv)?;
    let clipped_ratio = g.clamp(ratio, 1.0 - eps, 1.0 + eps);
    let clipped = g.mul(clipped_ratio, adv)?;
    let m = g.minimum(unclipped, clipped)?;
    let objective = g.mean(m);
    let grads = p.collect_grads(&g.backward(objective)?, &bound);
    Ok((g.value(objective).item(), grads))
}

/// Vanilla policy-gradient estimate `mean(∇log π(a|s)·Â)`.
pub fn policy_gradient(p: &PolicyParams, batch: &PpoBatch) -> Result<Vec<Tensor>, ActorError> {
    let mut g = Graph::new();
    let bound = p.bind(&mut g);
    let s = g.leaf(batch.states.clone());
    let lp = p.log_prob_graph(&mut g, &bound, s, &batch.actions)?;
    let adv = g.leaf(Tensor::vector(batch.advantages.clone()));
    let weighted = g.mul(lp, adv)?;
    let objective = g.mean(weighted);
    Ok(p.collect_grads(&g.backward(objective)?, &bound))
}

/// Minibatch Adam ascent on the clipped surrogate for `cfg.epochs` passes.
///
/// Works on copies and commits only on success. Returns the full-batch surrogate
/// under the updated parameters.
pub fn ppo_clip_update(
    p: &mut PolicyParams,
    batch: &PpoBatch,
    cfg: &ClipConfig,
    opt: &mut AdamState,
    lr: f64,
    rng: &mut impl Rng,
) -> Result<f64, ActorError> {
    batch.validate()?;
    if !(cfg.epsilon_clip > 0.0) {
        return Err(ActorError::Dimension(format!("clip radius must be positive, got {}", cfg.epsilon_clip)));
    }
    let mut params = p.clone();
    let mut state = opt.clone();
    let n = batch.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mb = cfg.minibatch.clamp(1, n.max(1));
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let (_, mut grads) = surrogate_with_grad(&params, &batch.subset(chunk), cfg.epsilon_clip)?;
            grads.iter_mut().for_each(|t| t.data_mut().iter_mut().for_each(|x| *x = -*x));
            if let Some(cap) = cfg.max_grad_norm {
                clip_global_norm(&mut grads, cap);
            }
            state.step(&mut params, &grads, lr)?;
            params.clamp_log_std();
        }
    }
    let (surrogate, _) = surrogate_with_grad(&params, batch, cfg.epsilon_clip)?;
    if !surrogate.is_finite() || !params.is_finite() {
        return Err(ActorError::NonFinite("policy update".into()));
    }
    *p = params;
    *opt = state;
    Ok(surrogate)
}
