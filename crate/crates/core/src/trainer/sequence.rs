use std::ops::Range;

use rand_chacha::ChaCha8Rng;

use super::rollout::{rng_for, update_stream, RolloutBatch};
use super::{TrainConfig, TrainError};
use crate::actor::{normalize_advantages, ppo_clip_update, ClipConfig, PolicyParams, PpoBatch};
use crate::autodiff::{AdamState, Tensor};
use crate::critic::{gae_segmented, rewards_to_go, td_residual, CorrelationMatrix, CriticEnsemble, FitConfig, RowSelection};
use crate::geometry::{aols, lookup_evaluator, relative_improvement, scalarize, GeometryError, ValueVector, WeightVector};

/// Everything the updates mutate.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub policy: PolicyParams,
    pub actor_opt: AdamState,
    pub critics: CriticEnsemble,
    pub w: CorrelationMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub batch: u64,
    pub sequence: usize,
    pub row_before: Vec<f64>,
    pub row_after: Vec<f64>,
    pub selection: RowSelection,
    pub marginal_weights: Vec<Vec<f64>>,
    /// Largest `V_US̄(w) − V*_S(w)` over the tracked weights.
    pub delta_max: f64,
    /// Largest `(V_US̄(w) − V*_S(w)) / |V_US̄(w)|` over the tracked weights.
    pub delta_r: f64,
    /// Remaining optimistic improvement reported by the AOLS search itself.
    pub aols_delta_max: f64,
    pub aols_timed_out: bool,
    pub critic_loss: f64,
    pub surrogate: f64,
    /// Mean undiscounted return per objective over the sequence's episodes.
    pub ret_mean: Vec<f64>,
    /// Mean discounted return per objective (the estimated value vector).
    pub value_estimate: Vec<f64>,
    /// Candidates came from unfinished episodes because none ended in the slice.
    pub partial_candidates: bool,
    pub w_after: Vec<f64>,
}

/// Returns of the episodes ending inside `range`; when there are none, the partial returns
/// from each copy's first step in the range to its episode or batch end.
pub(crate) fn candidate_returns(batch: &RolloutBatch, range: &Range<usize>, gamma: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, bool) {
    let eps: Vec<_> = batch.episodes.iter().filter(|e| range.contains(&e.end)).collect();
    if !eps.is_empty() {
        return (eps.iter().map(|e| e.discounted.clone()).collect(), eps.iter().map(|e| e.raw.clone()).collect(), false);
    }
    let (mut disc, mut raw) = (Vec::new(), Vec::new());
    for e in 0..batch.n_envs {
        let Some(first) = range.clone().find(|k| k % batch.n_envs == e) else { continue };
        let mut d = vec![0.0; batch.objectives];
        let mut r = vec![0.0; batch.objectives];
        let mut discount = 1.0;
        let mut k = first;
        while k < batch.len() {
            let rec = &batch.records[k];
            for j in 0..batch.objectives {
                d[j] += discount * rec.reward[j];
                r[j] += rec.reward[j];
            }
            discount *= gamma;
            if rec.done() {
                break;
            }
            k += batch.n_envs;
        }
        disc.push(d);
        raw.push(r);
    }
    (disc, raw, true)
}

fn mean_vector(vs: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let n = vs.len().max(1) as f64;
    (0..dim).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / n).collect()
}

/// Indices of `range` grouped by environment copy, each group in time order.
pub(crate) fn env_groups(batch: &RolloutBatch, range: &Range<usize>) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); batch.n_envs];
    for k in range.clone() {
        groups[k % batch.n_envs].push(k);
    }
    groups
}

pub(crate) struct Targets {
    pub states: Tensor,
    pub actions: Vec<crate::env::Action>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// TD residuals, GAE and bootstrapped rewards-to-go of the stream `y` for critic `i`.
///
/// Segments end at terminals (no bootstrap), truncations and the last step of a copy
/// inside the range (bootstrapped from the critic).
pub(crate) fn stream_targets(
    batch: &RolloutBatch,
    range: &Range<usize>,
    y: &[f64],
    critics: &CriticEnsemble,
    i: usize,
    gamma: f64,
    lambda: f64,
) -> Result<Targets, TrainError> {
    let idx: Vec<usize> = range.clone().collect();
    let width = batch.records[range.start].state.len();
    let states = Tensor::matrix(idx.len(), width, idx.iter().flat_map(|k| batch.records[*k].state.iter().copied()).collect())?;
    let next_states =
        Tensor::matrix(idx.len(), width, idx.iter().flat_map(|k| batch.records[*k].next_state.iter().copied()).collect())?;
    let v_old = critics.predict_target(i, &states)?;
    let v_next = critics.predict_objective(i, &next_states)?;

    let mut advantages = vec![0.0; idx.len()];
    let mut returns = vec![0.0; idx.len()];
    for group in env_groups(batch, range) {
        let local: Vec<usize> = group.iter().map(|k| k - range.start).collect();
        let last = local.len().saturating_sub(1);
        let mut deltas = Vec::with_capacity(local.len());
        let mut ends = Vec::with_capacity(local.len());
        let mut tails = Vec::with_capacity(local.len());
        let mut ys = Vec::with_capacity(local.len());
        for (p, &l) in local.iter().enumerate() {
            let rec = &batch.records[range.start + l];
            let next = if rec.terminal { 0.0 } else { v_next[l] };
            deltas.push(td_residual(y[l], next, v_old[l], gamma));
            ends.push(rec.done() || p == last);
            tails.push(next);
            ys.push(y[l]);
        }
        let adv = gae_segmented(&deltas, &ends, gamma, lambda);
        let rtg = rewards_to_go(&ys, &ends, &tails, gamma);
        for (p, &l) in local.iter().enumerate() {
            advantages[l] = adv[p];
            returns[l] = rtg[p];
        }
    }
    Ok(Targets {
        states,
        actions: idx.iter().map(|k| batch.records[*k].action.clone()).collect(),
        old_log_probs: idx.iter().map(|k| batch.records[*k].log_prob).collect(),
        advantages,
        returns,
    })
}

/// PPO on the normalized advantages, then the critic fit, sharing one update stream.
pub(crate) fn update_actor_and_critic(
    policy: &mut PolicyParams,
    actor_opt: &mut AdamState,
    critics: &mut CriticEnsemble,
    i: usize,
    targets: Targets,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    k: u64,
) -> Result<(f64, f64), TrainError> {
    let clip = ClipConfig {
        epsilon_clip: cfg.eps_clip,
        epochs: cfg.epochs,
        minibatch: cfg.minibatch,
        max_grad_norm: cfg.max_grad_norm,
    };
    let ppo = PpoBatch {
        states: targets.states,
        actions: targets.actions,
        old_log_probs: targets.old_log_probs,
        advantages: normalize_advantages(&targets.advantages),
    };
    let surrogate = ppo_clip_update(policy, &ppo, &clip, actor_opt, cfg.actor_schedule.rate(k), rng)?;
    let fit = FitConfig { epochs: cfg.critic_epochs, minibatch: cfg.minibatch, lr: cfg.critic_schedule.rate(k) };
    let critic_loss = critics.fit_critic(i, &ppo.states, &targets.returns, fit, rng)?;
    Ok((surrogate, critic_loss))
}

struct Geometry {
    tracked: Vec<WeightVector<f64>>,
    us: Vec<ValueVector<f64>>,
    aols_delta_max: f64,
    timed_out: bool,
}

fn search(candidates: &[ValueVector<f64>], dim: usize, cfg: &TrainConfig) -> Result<Geometry, GeometryError> {
    if dim == 1 {
        return Ok(Geometry {
            tracked: vec![WeightVector::extreme(1, 0)],
            us: candidates.to_vec(),
            aols_delta_max: 0.0,
            timed_out: false,
        });
    }
    let res = aols(dim, lookup_evaluator(candidates), cfg.eps_aols, cfg.aols_max_iters)?;
    Ok(Geometry {
        us: res.us.values().cloned().collect(),
        tracked: res.marginal_weights,
        aols_delta_max: res.delta_max,
        timed_out: res.timed_out,
    })
}

/// `(max gap, max relative gap)` between the undominated set and the estimated value.
fn gaps(g: &Geometry, v_hat: &ValueVector<f64>) -> Result<(f64, f64), GeometryError> {
    let (mut dmax, mut drel) = (0.0f64, 0.0f64);
    for w in &g.tracked {
        let v_us = g
            .us
            .iter()
            .map(|u| scalarize(w, u))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let v_s = scalarize(w, v_hat)?;
        let gap = (v_us - v_s).max(0.0);
        let rel = match relative_improvement(v_us, v_s) {
            Ok(r) => r.max(0.0),
            Err(GeometryError::DivisionGuard) => gap,
            Err(e) => return Err(e),
        };
        dmax = dmax.max(gap);
        drel = drel.max(rel);
    }
    Ok((dmax, drel))
}

/// One sequence of the batch: AOLS over estimated returns, row `i` of W, composite GAE,
/// PPO, critic fit. Works on a copy of `learner`.
pub fn run_sequence(
    learner: &Learner,
    i: usize,
    batch: &RolloutBatch,
    range: &Range<usize>,
    cfg: &TrainConfig,
    k: u64,
) -> Result<(Learner, SequenceReport), TrainError> {
    let dim = batch.objectives;
    let (disc, raw, partial) = candidate_returns(batch, range, cfg.gamma);
    let candidates: Vec<ValueVector<f64>> = disc.iter().cloned().map(ValueVector::new).collect();
    let v_hat = ValueVector::new(mean_vector(&disc, dim));

    let geometry = search(&candidates, dim, cfg)?;
    let evaluations = geometry
        .tracked
        .iter()
        .map(|w| Ok((w.clone(), scalarize(w, &v_hat)?)))
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let (w_next, selection) = learner.w.update_w_row(i, &geometry.tracked, &evaluations)?;
    let (delta_max, delta_r) = gaps(&geometry, &v_hat)?;

    let row = w_next.row(i).clone();
    let y = range
        .clone()
        .map(|kk| scalarize(&row, &ValueVector::new(batch.records[kk].reward.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let targets = stream_targets(batch, range, &y, &learner.critics, i, cfg.gamma, cfg.lambda)?;

    let mut next = Learner { w: w_next, ..learner.clone() };
    let mut rng = rng_for(cfg.seed, update_stream(k, i));
    let (surrogate, critic_loss) =
        update_actor_and_critic(&mut next.policy, &mut next.actor_opt, &mut next.critics, i, targets, cfg, &mut rng, k)?;

    let report = SequenceReport {
        batch: k,
        sequence: i,
        row_before: learner.w.row(i).to_f64(),
        row_after: row.to_f64(),
        selection,
        marginal_weights: geometry.tracked.iter().map(|w| w.to_f64()).collect(),
        delta_max,
        delta_r,
        aols_delta_max: geometry.aols_delta_max,
        aols_timed_out: geometry.timed_out,
        critic_loss,
        surrogate,
        ret_mean: mean_vector(&raw, dim),
        value_estimate: v_hat.into_vec(),
        partial_candidates: partial,
        w_after: next.w.flat(),
    };
    Ok((next, report))
}
