use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::rollout::{rng_for, EnvPool};
use super::sequence::{run_sequence, Learner, SequenceReport};
use super::state::{load_checkpoint, save_checkpoint, TrainerCheckpoint};
use super::{TrainConfig, TrainError};
use crate::actor::PolicyParams;
use crate::autodiff::AdamState;
use crate::critic::{CorrelationMatrix, CriticEnsemble};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.mvac";
pub const SUMMARY_FILE: &str = "summary.json";

/// Stream used to initialise the networks.
pub(crate) const INIT_STREAM: u64 = 1 << 62;

/// Consecutive converged batches needed to stop.
const STOP_STREAK: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub batch: u64,
    pub reports: Vec<SequenceReport>,
    /// Every sequence's `V_US̄ − V*_S` stayed below `eps_aols`.
    pub converged: bool,
}

/// Collect, split, run every sequence, repeat.
pub struct Trainer {
    cfg: TrainConfig,
    learner: Learner,
    pool: EnvPool,
    batch: u64,
    streak: u32,
    stopped: bool,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate().map_err(|(s, k, m)| TrainError::Config(format!("{s}.{k}: {m}")))?;
        let spec = cfg.env.spec().map_err(|e| TrainError::Config(e.to_string()))?;
        let mut rng = rng_for(cfg.seed, INIT_STREAM);
        let policy = PolicyParams::new(spec.state_dim, &spec.action_space, &cfg.hidden, &mut rng);
        let critics = CriticEnsemble::new(spec.state_dim, spec.objectives(), &cfg.hidden, &mut rng);
        let learner = Learner {
            actor_opt: AdamState::new(&policy),
            policy,
            critics,
            w: CorrelationMatrix::identity(spec.objectives()),
        };
        Self::assemble(cfg, learner, 0, 0, false)
    }

    /// Continues from a saved state; the environment and seed must match the config.
    pub fn resume(cfg: TrainConfig, ckpt: TrainerCheckpoint) -> Result<Self, TrainError> {
        cfg.validate().map_err(|(s, k, m)| TrainError::Config(format!("{s}.{k}: {m}")))?;
        let spec = cfg.env.spec().map_err(|e| TrainError::Config(e.to_string()))?;
        check_compatible(&ckpt, &spec)?;
        if ckpt.env_name != cfg.env.name() || ckpt.seed != cfg.seed {
            return Err(TrainError::Config(format!(
                "checkpoint belongs to {} with seed {}, config asks for {} with seed {}",
                ckpt.env_name,
                ckpt.seed,
                cfg.env.name(),
                cfg.seed
            )));
        }
        Self::assemble(cfg, ckpt.learner, ckpt.batch, ckpt.streak, ckpt.stopped)
    }

    fn assemble(cfg: TrainConfig, learner: Learner, batch: u64, streak: u32, stopped: bool) -> Result<Self, TrainError> {
        let envs = (0..cfg.n_envs)
            .map(|_| cfg.env.build().map_err(|e| TrainError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let pool = EnvPool::new(envs, cfg.seed, cfg.workers)?;
        Ok(Self { cfg, learner, pool, batch, streak, stopped })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn batches_done(&self) -> u64 {
        self.batch
    }

    /// True once the stopping rule fired or the budget ran out.
    pub fn is_finished(&self) -> bool {
        self.stopped || self.batch >= self.cfg.total_episodes
    }

    pub fn converged(&self) -> bool {
        self.stopped
    }

    /// One collect-and-update round. On error the learner is left as it was.
    pub fn step_batch(&mut self) -> Result<BatchOutcome, TrainError> {
        let k = self.batch;
        let batch = self.pool.collect(&self.learner.policy, self.cfg.horizon, self.cfg.gamma, k)?;
        let ranges = batch.split_sequences(self.learner.w.dim())?;
        let mut learner = self.learner.clone();
        let mut reports = Vec::with_capacity(ranges.len());
        for (i, range) in ranges.iter().enumerate() {
            let (next, report) = run_sequence(&learner, i, &batch, range, &self.cfg, k)?;
            learner = next;
            reports.push(report);
        }
        let converged = reports.iter().all(|r| r.delta_max < self.cfg.eps_aols);
        self.learner = learner;
        self.batch += 1;
        self.streak = if converged { self.streak + 1 } else { 0 };
        self.stopped = self.streak >= STOP_STREAK;
        Ok(BatchOutcome { batch: k, reports, converged })
    }

    pub fn checkpoint(&self) -> TrainerCheckpoint {
        TrainerCheckpoint {
            learner: self.learner.clone(),
            batch: self.batch,
            streak: self.streak,
            stopped: self.stopped,
            seed: self.cfg.seed,
            env_name: self.cfg.env.name().to_string(),
        }
    }
}

pub(crate) fn check_compatible(ckpt: &TrainerCheckpoint, spec: &crate::env::MomdpSpec) -> Result<(), TrainError> {
    let p = &ckpt.learner.policy;
    let problems = [
        (ckpt.objectives() != spec.objectives(), format!("{} objectives vs {}", ckpt.objectives(), spec.objectives())),
        (p.state_dim() != spec.state_dim, format!("state width {} vs {}", p.state_dim(), spec.state_dim)),
        (p.action_dim() != spec.action_space.size(), format!("{} actions vs {}", p.action_dim(), spec.action_space.size())),
        (p.is_gaussian() == spec.action_space.is_discrete(), "policy head does not fit the action space".to_string()),
    ];
    match problems.into_iter().find(|(bad, _)| *bad) {
        Some((_, msg)) => Err(TrainError::Checkpoint(crate::autodiff::CheckpointError::Invalid(format!(
            "checkpoint does not fit the environment: {msg}"
        )))),
        None => Ok(()),
    }
}

/// Plot-ready record of a finished run. Contains no timings, so reruns compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub env: String,
    pub seed: u64,
    pub objectives: Vec<String>,
    pub batches: u64,
    pub converged: bool,
    pub w: Vec<Vec<f64>>,
    pub last_delta_max: Option<f64>,
    pub last_delta_r: Option<f64>,
    pub last_ret_mean: Option<Vec<f64>>,
    pub metrics: String,
    pub checkpoint: String,
}

pub(crate) fn metrics_header(dim: usize) -> String {
    let mut cols: Vec<String> =
        ["batch", "sequence", "objective", "delta_max", "delta_r", "critic_loss", "surrogate"].map(String::from).to_vec();
    cols.extend((1..=dim).map(|i| format!("ret_mean_{i}")));
    for i in 1..=dim {
        cols.extend((1..=dim).map(|j| format!("w_{i}{j}")));
    }
    cols.join(",")
}

fn metrics_row(r: &SequenceReport, names: &[String]) -> String {
    let mut cols = vec![
        r.batch.to_string(),
        r.sequence.to_string(),
        names[r.sequence].clone(),
        r.delta_max.to_string(),
        r.delta_r.to_string(),
        r.critic_loss.to_string(),
        r.surrogate.to_string(),
    ];
    cols.extend(r.ret_mean.iter().map(f64::to_string));
    cols.extend(r.w_after.iter().map(f64::to_string));
    cols.join(",")
}

/// Keeps the header and the first `rows` data lines of an existing metrics file.
fn truncate_metrics(path: &Path, header: &str, rows: usize) -> Result<(), TrainError> {
    let text = fs::read_to_string(path).unwrap_or_default();
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(TrainError::Config(format!("{} does not belong to this run", path.display())));
    }
    let kept: Vec<&str> = lines.take(rows).collect();
    if kept.len() != rows {
        return Err(TrainError::Config(format!("{} has fewer rows than the checkpoint records", path.display())));
    }
    let mut out = String::from(header);
    out.push('\n');
    for l in kept {
        out.push_str(l);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Trains into `out_dir`, writing the metrics CSV, a checkpoint after every batch, and a
/// summary. With `resume`, an existing checkpoint in `out_dir` is continued.
pub fn train(cfg: &TrainConfig, out_dir: &Path, resume: bool) -> Result<RunSummary, TrainError> {
    fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join(METRICS_FILE);
    let ckpt_path = out_dir.join(CHECKPOINT_FILE);
    let spec = cfg.env.spec().map_err(|e| TrainError::Config(e.to_string()))?;
    let names = spec.objective_names.clone();
    let header = metrics_header(names.len());

    let mut trainer = if resume && ckpt_path.exists() {
        let t = Trainer::resume(cfg.clone(), load_checkpoint(&ckpt_path)?)?;
        truncate_metrics(&metrics_path, &header, t.batches_done() as usize * names.len())?;
        t
    } else {
        let t = Trainer::new(cfg.clone())?;
        fs::write(&metrics_path, format!("{header}\n"))?;
        save_checkpoint(&ckpt_path, &t.checkpoint())?;
        t
    };
    log::info!("training {} on {} from batch {}", cfg.name, cfg.env.name(), trainer.batches_done());

    let mut last: Option<BatchOutcome> = None;
    while !trainer.is_finished() {
        let outcome = trainer.step_batch()?;
        let mut f = fs::OpenOptions::new().append(true).open(&metrics_path)?;
        let mut block = String::new();
        for r in &outcome.reports {
            block.push_str(&metrics_row(r, &names));
            block.push('\n');
        }
        f.write_all(block.as_bytes())?;
        f.sync_all()?;
        save_checkpoint(&ckpt_path, &trainer.checkpoint())?;
        let worst = outcome.reports.iter().map(|r| r.delta_max).fold(0.0, f64::max);
        log::info!("batch {} delta_max {worst} converged {}", outcome.batch, outcome.converged);
        for r in &outcome.reports {
            log::debug!("sequence {} row {:?} -> {:?} ({:?})", r.sequence, r.row_before, r.row_after, r.selection);
        }
        last = Some(outcome);
    }

    let summary = RunSummary {
        name: cfg.name.clone(),
        env: cfg.env.name().to_string(),
        seed: cfg.seed,
        objectives: names,
        batches: trainer.batches_done(),
        converged: trainer.converged(),
        w: trainer.learner().w.rows().iter().map(|r| r.to_f64()).collect(),
        last_delta_max: last.as_ref().map(|o| o.reports.iter().map(|r| r.delta_max).fold(0.0, f64::max)),
        last_delta_r: last.as_ref().map(|o| o.reports.iter().map(|r| r.delta_r).fold(0.0, f64::max)),
        last_ret_mean: last.and_then(|o| o.reports.last().map(|r| r.ret_mean.clone())),
        metrics: METRICS_FILE.into(),
        checkpoint: CHECKPOINT_FILE.into(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| TrainError::Numeric(e.to_string()))?;
    fs::write(out_dir.join(SUMMARY_FILE), json + "\n")?;
    Ok(summary)
}
