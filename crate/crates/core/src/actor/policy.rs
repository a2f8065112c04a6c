use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::autodiff::{BoundMlp, Graph, MlpParams, Parameters, Tensor, TensorError, Var};
use crate::env::{Action, ActionSpace};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ActorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    /// Diagonal Gaussian with a state-independent log-std per action dimension.
    Gaussian { log_std: Tensor },
    Categorical,
}

/// Trunk MLP whose output is the Gaussian mean or the categorical logits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub trunk: MlpParams,
    pub head: Head,
}

#[derive(Debug, Clone)]
pub struct BoundPolicy {
    pub trunk: BoundMlp,
    pub log_std: Option<Var>,
}

impl PolicyParams {
    pub fn new(state_dim: usize, space: &ActionSpace, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let out = space.size();
        let sizes: Vec<usize> = std::iter::once(state_dim).chain(hidden.iter().copied()).chain([out]).collect();
        let head = match space {
            ActionSpace::Discrete(_) => Head::Categorical,
            ActionSpace::Box { .. } => Head::Gaussian { log_std: Tensor::zeros(&[out]) },
        };
        Self { trunk: MlpParams::init(&sizes, rng), head }
    }

    pub fn from_parts(trunk: MlpParams, head: Head) -> Result<Self, ActorError> {
        if let Head::Gaussian { log_std } = &head {
            if log_std.len() != trunk.output_width() {
                return Err(ActorError::Dimension(format!(
                    "{} log-std entries for {} outputs",
                    log_std.len(),
                    trunk.output_width()
                )));
            }
            if log_std.data().iter().any(|x| !(LOG_STD_MIN..=LOG_STD_MAX).contains(x)) {
                return Err(ActorError::NonFinite("log-std outside [-20, 2]".into()));
            }
        }
        Ok(Self { trunk, head })
    }

    pub fn state_dim(&self) -> usize {
        self.trunk.input_width()
    }

    /// Action dimension (Gaussian) or number of actions (categorical).
    pub fn action_dim(&self) -> usize {
        self.trunk.output_width()
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.head, Head::Gaussian { .. })
    }

    pub fn log_std(&self) -> Option<&Tensor> {
        match &self.head {
            Head::Gaussian { log_std } => Some(log_std),
            Head::Categorical => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.trunk.is_finite() && self.log_std().is_none_or(Tensor::is_finite)
    }

    /// Keeps the log-std inside its allowed range.
    pub fn clamp_log_std(&mut self) {
        if let Head::Gaussian { log_std } = &mut self.head {
            log_std.data_mut().iter_mut().for_each(|x| *x = x.clamp(LOG_STD_MIN, LOG_STD_MAX));
        }
    }

    pub fn bind(&self, g: &mut Graph) -> BoundPolicy {
        BoundPolicy { trunk: self.trunk.bind(g), log_std: self.log_std().map(|t| g.leaf(t.clone())) }
    }

    fn check_states(&self, states: &Tensor) -> Result<(), ActorError> {
        if states.shape().len() != 2 || states.cols() != self.state_dim() {
            return Err(ActorError::Dimension(format!("states {:?} for input width {}", states.shape(), self.state_dim())));
        }
        Ok(())
    }

    /// Log-density or log-mass of each `actions[k]` at `states` row `k`, as a `[B]` node.
    pub fn log_prob_graph(
        &self,
        g: &mut Graph,
        bound: &BoundPolicy,
        states: Var,
        actions: &[Action],
    ) -> Result<Var, ActorError> {
        self.check_states(g.value(states))?;
        let rows = g.value(states).rows();
        if actions.len() != rows {
            return Err(ActorError::Dimension(format!("{} actions for {rows} states", actions.len())));
        }
        let out = self.trunk.apply(g, &bound.trunk, states)?;
        let d = self.action_dim();
        match &self.head {
            Head::Categorical => {
                let idx = actions
                    .iter()
                    .map(|a| match a {
                        Action::Discrete(k) if *k < d => Ok(*k),
                        other => Err(ActorError::Dimension(format!("{other:?} for {d} discrete actions"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let ls = g.log_softmax(out);
                Ok(g.pick(ls, idx)?)
            }
            Head::Gaussian { .. } => {
                let mut data = Vec::with_capacity(rows * d);
                for a in actions {
                    match a {
                        Action::Continuous(x) if x.len() == d => data.extend_from_slice(x),
                        other => return Err(ActorError::Dimension(format!("{other:?} for {d}-D actions"))),
                    }
                }
                let log_std = bound.log_std.expect("Gaussian head binds its log-std");
                let a = g.leaf(Tensor::matrix(rows, d, data)?);
                let diff = g.sub(a, out)?;
                let neg = g.scale(log_std, -1.0);
                let inv_std = g.exp(neg);
                let z = g.mul_row(diff, inv_std)?;
                let z2 = g.square(z);
                let half = g.scale(z2, -0.5);
                let per_dim = g.add_row(half, neg)?;
                let summed = g.sum_cols(per_dim);
                Ok(g.add_scalar(summed, -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()))
            }
        }
    }

    pub fn log_probs(&self, states: &Tensor, actions: &[Action]) -> Result<Vec<f64>, ActorError> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g);
        let s = g.leaf(states.clone());
        let lp = self.log_prob_graph(&mut g, &bound, s, actions)?;
        Ok(g.value(lp).data().to_vec())
    }

    pub fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64, ActorError> {
        let x = Tensor::matrix(1, state.len(), state.to_vec())?;
        Ok(self.log_probs(&x, std::slice::from_ref(action))?[0])
    }

    fn head_output(&self, state: &[f64]) -> Result<Vec<f64>, ActorError> {
        let x = Tensor::matrix(1, state.len(), state.to_vec())?;
        self.check_states(&x)?;
        Ok(self.trunk.forward(&x)?.data().to_vec())
    }

    /// Draws an action and returns it with its log-probability.
    pub fn sample_action(&self, state: &[f64], rng: &mut impl Rng) -> Result<(Action, f64), ActorError> {
        let out = self.head_output(state)?;
        let action = match &self.head {
            Head::Gaussian { log_std } => Action::Continuous(
                out.iter()
                    .zip(log_std.data())
                    .map(|(mu, ls)| {
                        let eps: f64 = StandardNormal.sample(rng);
                        mu + ls.exp() * eps
                    })
                    .collect(),
            ),
            Head::Categorical => {
                let hi = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = out.iter().map(|l| (l - hi).exp()).collect();
                let dist = WeightedIndex::new(&weights).map_err(|e| ActorError::NonFinite(format!("logits: {e}")))?;
                Action::Discrete(dist.sample(rng))
            }
        };
        let lp = self.log_prob(state, &action)?;
        Ok((action, lp))
    }

    /// Distribution mean (Gaussian) or argmax with lowest-index ties (categorical).
    pub fn deterministic_action(&self, state: &[f64]) -> Result<Action, ActorError> {
        let out = self.head_output(state)?;
        Ok(match self.head {
            Head::Gaussian { .. } => Action::Continuous(out),
            Head::Categorical => {
                let mut best = 0;
                for (k, v) in out.iter().enumerate() {
                    if *v > out[best] {
                        best = k;
                    }
                }
                Action::Discrete(best)
            }
        })
    }

    /// Gradients in [`Parameters::tensors`] order.
    pub fn collect_grads(&self, grads: &crate::autodiff::Gradients, bound: &BoundPolicy) -> Vec<Tensor> {
        let mut out = self.trunk.collect_grads(grads, &bound.trunk);
        if let (Some(v), Some(t)) = (bound.log_std, self.log_std()) {
            out.push(grads.wrt(v, t.shape()));
        }
        out
    }
}

impl Parameters for PolicyParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut t = self.trunk.tensors();
        if let Head::Gaussian { log_std } = &self.head {
            t.push(log_std);
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut t = self.trunk.tensors_mut();
        if let Head::Gaussian { log_std } = &mut self.head {
            t.push(log_std);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_policy(space: &ActionSpace) -> PolicyParams {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = PolicyParams::new(2, space, &[4], &mut rng);
        p.trunk = MlpParams::zeros(&[2, 4, space.size()]);
        p
    }

    #[test]
    fn standard_normal_at_mode() {
        let p = zero_policy(&ActionSpace::Box { low: vec![-1.0], high: vec![1.0] });
        let lp = p.log_prob(&[0.3, -0.2], &Action::Continuous(vec![0.0])).unwrap();
        assert!((lp + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((lp + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let mut p = zero_policy(&ActionSpace::Box { low: vec![-1.0], high: vec![1.0] });
        p.trunk.layers[1].bias = Tensor::vector(vec![0.4]);
        p.head = Head::Gaussian { log_std: Tensor::vector(vec![-0.5]) };
        let h = 1e-3;
        let total: f64 = (-10_000..=10_000)
            .map(|k| p.log_prob(&[0.0, 0.0], &Action::Continuous(vec![k as f64 * h])).unwrap().exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn uniform_logits() {
        let p = zero_policy(&ActionSpace::Discrete(4));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let (_, lp) = p.sample_action(&[1.0, 2.0], &mut rng).unwrap();
            assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        }
        let two = zero_policy(&ActionSpace::Discrete(2));
        assert!((two.log_prob(&[0.0, 0.0], &Action::Discrete(0)).unwrap() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tiny_std_samples_the_mean() {
        let mut p = zero_policy(&ActionSpace::Box { low: vec![-1.0; 2], high: vec![1.0; 2] });
        p.trunk.layers[1].bias = Tensor::vector(vec![0.25, -0.75]);
        p.head = Head::Gaussian { log_std: Tensor::vector(vec![LOG_STD_MIN; 2]) };
        let (a, _) = p.sample_action(&[0.0, 0.0], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let Action::Continuous(a) = a else { panic!() };
        assert!((a[0] - 0.25).abs() < 1e-6 && (a[1] + 0.75).abs() < 1e-6);
        assert_eq!(p.deterministic_action(&[0.0, 0.0]).unwrap(), Action::Continuous(vec![0.25, -0.75]));
    }

    #[test]
    fn same_seed_same_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PolicyParams::new(3, &ActionSpace::Box { low: vec![-1.0], high: vec![1.0] }, &[64, 64], &mut rng);
        let a = p.sample_action(&[0.1, 0.2, 0.3], &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = p.sample_action(&[0.1, 0.2, 0.3], &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argmax_ties_go_low_and_bad_inputs_fail() {
        let mut p = zero_policy(&ActionSpace::Discrete(3));
        p.trunk = MlpParams::from_layers(vec![Layer {
            weight: Tensor::zeros(&[3, 2]),
            bias: Tensor::vector(vec![0.0, 1.0, 1.0]),
        }])
        .unwrap();
        assert_eq!(p.deterministic_action(&[0.0, 0.0]).unwrap(), Action::Discrete(1));
        assert!(p.log_prob(&[0.0, 0.0], &Action::Discrete(3)).is_err());
        assert!(p.log_prob(&[0.0], &Action::Discrete(0)).is_err());
    }
}
