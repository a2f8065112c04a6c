use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::TrainError;
use crate::actor::PolicyParams;
use crate::env::{Action, Environment};

/// ChaCha stream of environment copy `e` during batch `b`.
pub(crate) fn env_stream(b: u64, e: usize) -> u64 {
    (1u64 << 63) | (b << 16) | e as u64
}

/// ChaCha stream for the updates of sequence `i` in batch `b`.
pub(crate) fn update_stream(b: u64, i: usize) -> u64 {
    (b << 8) | i as u64
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: Vec<f64>,
    pub action: Action,
    pub log_prob: f64,
    pub reward: Vec<f64>,
    pub terminal: bool,
    pub truncated: bool,
    pub next_state: Vec<f64>,
    pub env: usize,
}

impl StepRecord {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Per-objective return of an episode that finished inside the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReturn {
    /// Index of the episode's last record in the batch.
    pub end: usize,
    pub discounted: Vec<f64>,
    pub raw: Vec<f64>,
}

/// `n_envs × horizon` records stored time-major: record `t·n_envs + e` is step `t` of copy `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub n_envs: usize,
    pub horizon: usize,
    pub objectives: usize,
    pub records: Vec<StepRecord>,
    pub episodes: Vec<EpisodeReturn>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `I` contiguous equal ranges of record indices; slice `i` belongs to objective `i`.
    pub fn split_sequences(&self, objectives: usize) -> Result<Vec<std::ops::Range<usize>>, TrainError> {
        let n = self.len();
        if objectives == 0 || !n.is_multiple_of(objectives) {
            return Err(TrainError::Config(format!("{n} steps do not split into {objectives} equal sequences")));
        }
        let size = n / objectives;
        Ok((0..objectives).map(|i| i * size..(i + 1) * size).collect())
    }
}

struct Worker {
    id: usize,
    seed: u64,
    env: Box<dyn Environment>,
    rng: ChaCha8Rng,
    state: Option<Vec<f64>>,
    disc: Vec<f64>,
    raw: Vec<f64>,
    discount: f64,
}

struct WorkerOutput {
    records: Vec<StepRecord>,
    /// (local step, discounted, raw)
    episodes: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

impl Worker {
    fn run(&mut self, policy: &PolicyParams, horizon: usize, gamma: f64, batch: u64) -> Result<WorkerOutput, TrainError> {
        self.rng = rng_for(self.seed, env_stream(batch, self.id));
        self.state = None;
        let objectives = self.env.spec().objectives();
        let mut out = WorkerOutput { records: Vec::with_capacity(horizon), episodes: Vec::new() };
        for t in 0..horizon {
            let state = match self.state.take() {
                Some(s) => s,
                None => {
                    let seed = self.rng.next_u64();
                    self.disc = vec![0.0; objectives];
                    self.raw = vec![0.0; objectives];
                    self.discount = 1.0;
                    self.env.reset(seed)
                }
            };
            let (action, log_prob) = policy
                .sample_action(&state, &mut self.rng)
                .map_err(|e| TrainError::Numeric(format!("env copy {}: {e}", self.id)))?;
            let step = self.env.step(&action).map_err(|e| TrainError::Env(format!("env copy {}: {e}", self.id)))?;
            if !step.reward.is_finite() {
                return Err(TrainError::Env(format!("env copy {} produced a non-finite reward", self.id)));
            }
            for k in 0..objectives {
                self.disc[k] += self.discount * step.reward[k];
                self.raw[k] += step.reward[k];
            }
            self.discount *= gamma;
            let done = step.done();
            if done {
                out.episodes.push((t, std::mem::take(&mut self.disc), std::mem::take(&mut self.raw)));
            } else {
                self.state = Some(step.state.clone());
            }
            out.records.push(StepRecord {
                state,
                action,
                log_prob,
                reward: step.reward.into_vec(),
                terminal: step.terminal,
                truncated: step.truncated,
                next_state: step.state,
                env: self.id,
            });
        }
        Ok(out)
    }
}

/// Environment copies, each with its own random stream.
pub struct EnvPool {
    workers: Vec<Worker>,
    threads: Option<rayon::ThreadPool>,
}

impl EnvPool {
    pub fn new(envs: Vec<Box<dyn Environment>>, seed: u64, workers: usize) -> Result<Self, TrainError> {
        let workers_vec = envs
            .into_iter()
            .enumerate()
            .map(|(id, env)| Worker {
                id,
                env,
                seed,
                rng: rng_for(seed, env_stream(0, id)),
                state: None,
                disc: Vec::new(),
                raw: Vec::new(),
                discount: 1.0,
            })
            .collect();
        let threads = if workers == 0 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| TrainError::Config(format!("cannot start {workers} workers: {e}")))?,
            )
        };
        Ok(Self { workers: workers_vec, threads })
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    /// Runs every copy for `horizon` steps under a frozen `policy`.
    ///
    /// Every copy starts a fresh episode at the beginning of each batch, drawing from a stream
    /// keyed by `batch`, so a batch depends only on the seed, its index and the policy.
    pub fn collect(&mut self, policy: &PolicyParams, horizon: usize, gamma: f64, batch: u64) -> Result<RolloutBatch, TrainError> {
        let outputs: Vec<Result<WorkerOutput, TrainError>> = match &self.threads {
            None => self.workers.iter_mut().map(|w| w.run(policy, horizon, gamma, batch)).collect(),
            Some(pool) => {
                let workers = &mut self.workers;
                pool.install(|| workers.par_iter_mut().map(|w| w.run(policy, horizon, gamma, batch)).collect())
            }
        };
        let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>()?;
        let n_envs = outputs.len();
        let objectives = self.workers.first().map_or(0, |w| w.env.spec().objectives());
        let mut episodes: Vec<EpisodeReturn> = outputs
            .iter()
            .enumerate()
            .flat_map(|(e, o)| {
                o.episodes.iter().map(move |(t, d, r)| EpisodeReturn {
                    end: t * n_envs + e,
                    discounted: d.clone(),
                    raw: r.clone(),
                })
            })
            .collect();
        episodes.sort_by_key(|ep| ep.end);
        let mut columns: Vec<std::vec::IntoIter<StepRecord>> = outputs.into_iter().map(|o| o.records.into_iter()).collect();
        let mut records = Vec::with_capacity(n_envs * horizon);
        for _ in 0..horizon {
            for col in columns.iter_mut() {
                records.push(col.next().expect("every copy ran the full horizon"));
            }
        }
        Ok(RolloutBatch { n_envs, horizon, objectives, records, episodes })
    }
}
