use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::normalizer::Normalizer;
use crate::autodiff::{AdamState, Graph, MlpParams, Tensor, TensorError};
use crate::geometry::{GeometryError, ValueVector};

#[derive(Debug, Error)]
pub enum CriticError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Regression settings for one critic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
}

/// One scalar critic per objective, with frozen target copies and return normalizers.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticEnsemble {
    pub critics: Vec<MlpParams>,
    pub targets: Vec<MlpParams>,
    pub normalizers: Vec<Normalizer<f64>>,
    pub optimizers: Vec<AdamState>,
}

impl CriticEnsemble {
    pub fn new(state_dim: usize, objectives: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let sizes = layer_sizes(state_dim, hidden);
        Self::from_critics((0..objectives).map(|_| MlpParams::init(&sizes, rng)).collect())
    }

    pub fn zeros(state_dim: usize, objectives: usize, hidden: &[usize]) -> Self {
        let sizes = layer_sizes(state_dim, hidden);
        Self::from_critics((0..objectives).map(|_| MlpParams::zeros(&sizes)).collect())
    }

    pub fn from_critics(critics: Vec<MlpParams>) -> Self {
        Self {
            targets: critics.clone(),
            normalizers: vec![Normalizer::default(); critics.len()],
            optimizers: critics.iter().map(AdamState::new).collect(),
            critics,
        }
    }

    pub fn objectives(&self) -> usize {
        self.critics.len()
    }

    pub fn state_dim(&self) -> usize {
        self.critics[0].input_width()
    }

    fn check_states(&self, states: &Tensor) -> Result<(), CriticError> {
        if states.shape().len() != 2 || states.cols() != self.state_dim() {
            return Err(CriticError::Dimension {
                expected: self.state_dim(),
                found: states.shape().last().copied().unwrap_or(0),
            });
        }
        Ok(())
    }

    fn run(&self, net: &MlpParams, i: usize, states: &Tensor) -> Result<Vec<f64>, CriticError> {
        self.check_states(states)?;
        let out = net.forward(states)?;
        Ok(out.data().iter().map(|z| self.normalizers[i].denormalize(*z)).collect())
    }

    /// Denormalized `V̂_i` for each row of `states`.
    pub fn predict_objective(&self, i: usize, states: &Tensor) -> Result<Vec<f64>, CriticError> {
        self.run(&self.critics[i], i, states)
    }

    /// Same as [`Self::predict_objective`] with the frozen target copy.
    pub fn predict_target(&self, i: usize, states: &Tensor) -> Result<Vec<f64>, CriticError> {
        self.run(&self.targets[i], i, states)
    }

    pub fn predict(&self, state: &[f64]) -> Result<ValueVector<f64>, CriticError> {
        if state.len() != self.state_dim() {
            return Err(CriticError::Dimension { expected: self.state_dim(), found: state.len() });
        }
        let x = Tensor::matrix(1, state.len(), state.to_vec())?;
        let v = (0..self.objectives()).map(|i| self.predict_objective(i, &x).map(|o| o[0])).collect::<Result<_, _>>()?;
        Ok(ValueVector::new(v))
    }

    /// Updates objective `i`'s running statistics with `raw` and returns the normalized values.
    pub fn normalize_objective(&mut self, i: usize, raw: &[f64]) -> Vec<f64> {
        self.normalizers[i].normalize_batch(raw)
    }

    pub fn refresh_target(&mut self, i: usize) {
        self.targets[i] = self.critics[i].clone();
    }

    /// Fits critic `i` to `raw_targets` by minibatch Adam on `½·mean((V̂ − R̂)²)` in normalized units,
    /// then refreshes its target copy. Returns the full-batch loss after fitting.
    pub fn fit_critic(
        &mut self,
        i: usize,
        states: &Tensor,
        raw_targets: &[f64],
        cfg: FitConfig,
        rng: &mut impl Rng,
    ) -> Result<f64, CriticError> {
        self.check_states(states)?;
        if states.rows() != raw_targets.len() {
            return Err(CriticError::Dimension { expected: states.rows(), found: raw_targets.len() });
        }
        if raw_targets.iter().any(|t| !t.is_finite()) {
            return Err(CriticError::NonFinite("critic target".into()));
        }
        let mut critic = self.critics[i].clone();
        let mut opt = self.optimizers[i].clone();
        let mut norm = self.normalizers[i];
        let targets = norm.normalize_batch(raw_targets);

        let n = raw_targets.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mb = cfg.minibatch.clamp(1, n.max(1));
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(mb) {
                let x = gather_rows(states, chunk);
                let y: Vec<f64> = chunk.iter().map(|k| targets[*k]).collect();
                let mut g = Graph::new();
                let bound = critic.bind(&mut g);
                let (loss, _) = regression_loss(&critic, &mut g, &bound, x, y)?;
                let grads = critic.collect_grads(&g.backward(loss)?, &bound);
                opt.step(&mut critic, &grads, cfg.lr)?;
            }
        }
        let final_loss = half_mse(&critic.forward(states)?, &targets);
        if !final_loss.is_finite() {
            return Err(CriticError::NonFinite("critic loss".into()));
        }
        self.critics[i] = critic;
        self.optimizers[i] = opt;
        self.normalizers[i] = norm;
        self.refresh_target(i);
        Ok(final_loss)
    }
}

fn layer_sizes(state_dim: usize, hidden: &[usize]) -> Vec<usize> {
    std::iter::once(state_dim).chain(hidden.iter().copied()).chain(std::iter::once(1)).collect()
}

pub(crate) fn gather_rows(t: &Tensor, rows: &[usize]) -> Tensor {
    let data = rows.iter().flat_map(|r| t.row(*r).iter().copied()).collect();
    Tensor::matrix(rows.len(), t.cols(), data).unwrap()
}

fn regression_loss(
    critic: &MlpParams,
    g: &mut Graph,
    bound: &crate::autodiff::BoundMlp,
    x: Tensor,
    y: Vec<f64>,
) -> Result<(crate::autodiff::Var, crate::autodiff::Var), TensorError> {
    let rows = y.len();
    let xv = g.leaf(x);
    let out = critic.apply(g, bound, xv)?;
    let yv = g.leaf(Tensor::matrix(rows, 1, y)?);
    let d = g.sub(out, yv)?;
    let sq = g.square(d);
    let m = g.mean(sq);
    Ok((g.scale(m, 0.5), out))
}

fn half_mse(out: &Tensor, targets: &[f64]) -> f64 {
    let n = targets.len().max(1) as f64;
    0.5 * out.data().iter().zip(targets).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / n
}
