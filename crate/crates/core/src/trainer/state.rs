use std::fs;
use std::path::Path;

use super::Learner;
use crate::actor::{Head, PolicyParams};
use crate::autodiff::checkpoint::{write_atomic, Reader, Writer};
use crate::autodiff::{AdamState, CheckpointError, Parameters, Tensor};
use crate::critic::{CorrelationMatrix, CriticEnsemble, Normalizer};

const HEAD_CATEGORICAL: u8 = 0;
const HEAD_GAUSSIAN: u8 = 1;

/// Everything needed to resume a run or evaluate its policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerCheckpoint {
    pub learner: Learner,
    /// Batches completed so far.
    pub batch: u64,
    /// Consecutive converged batches at the time of saving.
    pub streak: u32,
    pub stopped: bool,
    pub seed: u64,
    pub env_name: String,
}

impl TrainerCheckpoint {
    pub fn objectives(&self) -> usize {
        self.learner.w.dim()
    }

    /// Policy trunk first, so the leading bytes read as a plain MVAC parameter file.
    pub fn encode(&self) -> Vec<u8> {
        let l = &self.learner;
        let mut w = Writer::with_header();
        w.put_mlp(&l.policy.trunk);
        match &l.policy.head {
            Head::Categorical => {
                w.put_u8(HEAD_CATEGORICAL);
                w.put_u32(l.policy.action_dim() as u32);
                w.put_vec(&[]);
            }
            Head::Gaussian { log_std } => {
                w.put_u8(HEAD_GAUSSIAN);
                w.put_u32(l.policy.action_dim() as u32);
                w.put_vec(log_std.data());
            }
        }
        let c = &l.critics;
        w.put_u32(c.objectives() as u32);
        for k in 0..c.objectives() {
            w.put_mlp(&c.critics[k]);
            w.put_mlp(&c.targets[k]);
            let n = c.normalizers[k];
            w.put_f64s(&[n.mean, n.var, n.count]);
        }
        w.put_u32(l.w.dim() as u32);
        w.put_f64s(&l.w.flat());
        put_adam(&mut w, &l.actor_opt);
        for opt in &c.optimizers {
            put_adam(&mut w, opt);
        }
        w.put_u64(self.batch);
        w.put_u32(self.streak);
        w.put_u8(self.stopped as u8);
        w.put_u64(self.seed);
        w.put_str(&self.env_name);
        w.into_bytes()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let invalid = |e: &dyn std::fmt::Display| CheckpointError::Invalid(e.to_string());
        let mut r = Reader::with_header(bytes)?;
        let trunk = r.mlp()?;
        let tag = r.u8()?;
        let action_dim = r.u32()? as usize;
        let log_std = r.vec()?;
        let head = match tag {
            HEAD_CATEGORICAL if log_std.is_empty() => Head::Categorical,
            HEAD_GAUSSIAN => Head::Gaussian { log_std: Tensor::vector(log_std) },
            _ => return Err(CheckpointError::Invalid(format!("unknown policy head tag {tag}"))),
        };
        let policy = PolicyParams::from_parts(trunk, head).map_err(|e| invalid(&e))?;
        if policy.action_dim() != action_dim {
            return Err(CheckpointError::Invalid(format!(
                "head declares {action_dim} actions, trunk has {} outputs",
                policy.action_dim()
            )));
        }

        let count = r.u32()? as usize;
        let (mut critics, mut targets, mut normalizers) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..count {
            critics.push(r.mlp()?);
            targets.push(r.mlp()?);
            let s = r.f64s(3)?;
            normalizers.push(Normalizer { mean: s[0], var: s[1], count: s[2] });
        }
        let dim = r.u32()? as usize;
        if dim != count || dim == 0 {
            return Err(CheckpointError::Invalid(format!("{count} critics for a {dim}x{dim} correlation matrix")));
        }
        for (k, (c, t)) in critics.iter().zip(&targets).enumerate() {
            if c.sizes() != t.sizes() || c.input_width() != policy.state_dim() || c.output_width() != 1 {
                return Err(CheckpointError::Invalid(format!("critic {k} does not match the policy input")));
            }
        }
        let w = CorrelationMatrix::from_flat(dim, &r.f64s(dim * dim)?).map_err(|e| invalid(&e))?;
        let actor_opt = get_adam(&mut r, &policy)?;
        let optimizers = critics.iter().map(|c| get_adam(&mut r, c)).collect::<Result<Vec<_>, _>>()?;
        let batch = r.u64()?;
        let streak = r.u32()?;
        let stopped = match r.u8()? {
            0 => false,
            1 => true,
            x => return Err(CheckpointError::Invalid(format!("bad stop flag {x}"))),
        };
        let seed = r.u64()?;
        let env_name = r.str()?;
        r.finish()?;
        let critics = CriticEnsemble { critics, targets, normalizers, optimizers };
        Ok(Self { learner: Learner { policy, actor_opt, critics, w }, batch, streak, stopped, seed, env_name })
    }
}

fn put_adam(w: &mut Writer, opt: &AdamState) {
    w.put_u64(opt.step);
    w.put_f64s(&[opt.beta1, opt.beta2, opt.eps]);
    let (m, v) = opt.moments();
    w.put_u32(m.len() as u32);
    for t in m.iter().chain(v) {
        w.put_vec(t.data());
    }
}

fn get_adam<P: Parameters>(r: &mut Reader<'_>, params: &P) -> Result<AdamState, CheckpointError> {
    let step = r.u64()?;
    let hyper = r.f64s(3)?;
    let n = r.u32()? as usize;
    if n != params.tensors().len() {
        return Err(CheckpointError::Invalid(format!("optimizer holds {n} buffers for {} tensors", params.tensors().len())));
    }
    let m = (0..n).map(|_| r.vec()).collect::<Result<Vec<_>, _>>()?;
    let v = (0..n).map(|_| r.vec()).collect::<Result<Vec<_>, _>>()?;
    let mut opt = AdamState::from_moments(params, step, m, v).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    (opt.beta1, opt.beta2, opt.eps) = (hyper[0], hyper[1], hyper[2]);
    Ok(opt)
}

pub fn save_checkpoint(path: &Path, ckpt: &TrainerCheckpoint) -> Result<(), CheckpointError> {
    write_atomic(path, &ckpt.encode())
}

pub fn load_checkpoint(path: &Path) -> Result<TrainerCheckpoint, CheckpointError> {
    TrainerCheckpoint::decode(&fs::read(path)?)
}
