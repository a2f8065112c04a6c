use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{clip_box, Action, ActionSpace, EnvError, Environment, MomdpSpec, StepResult};
use crate::geometry::ValueVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearQuadConfig {
    /// Row-major dynamics `x' = A x + B u`.
    pub a: [[f64; 2]; 2],
    pub b: [[f64; 2]; 2],
    pub rho: f64,
    pub start: [f64; 2],
    pub horizon: usize,
    pub action_bound: f64,
}

impl Default for LinearQuadConfig {
    fn default() -> Self {
        Self {
            a: [[0.9, 0.2], [0.0, 0.9]],
            b: [[0.5, 0.0], [0.0, 0.5]],
            rho: 0.1,
            start: [2.0, 0.5],
            horizon: 30,
            action_bound: 5.0,
        }
    }
}

/// Two-dimensional linear system with objectives `r_i = −(x_i² + ρ‖u‖²)` on the pre-step state.
///
/// The episode has a fixed length, so its last step is terminal. The state carries the
/// elapsed fraction `t / H` so the finite-horizon optimum is representable.
#[derive(Debug, Clone)]
pub struct LinearQuad {
    cfg: LinearQuadConfig,
    spec: MomdpSpec,
    x: Vector2<f64>,
    t: usize,
    done: bool,
}

impl LinearQuad {
    pub fn new(cfg: LinearQuadConfig) -> Result<Self, EnvError> {
        let finite = cfg.a.iter().chain(&cfg.b).flatten().chain(&cfg.start).all(|x| x.is_finite());
        if !finite || !(cfg.rho > 0.0) || cfg.horizon == 0 || !(cfg.action_bound > 0.0) {
            return Err(EnvError::Config(format!("invalid linear-quad settings {cfg:?}")));
        }
        let bound = cfg.action_bound;
        let spec = MomdpSpec {
            state_dim: 3,
            action_space: ActionSpace::Box { low: vec![-bound; 2], high: vec![bound; 2] },
            objective_names: vec!["state-1".into(), "state-2".into()],
            horizon: cfg.horizon,
            discount_hint: 0.99,
        };
        Ok(Self { cfg, spec, x: Vector2::zeros(), t: 0, done: true })
    }

    pub fn config(&self) -> &LinearQuadConfig {
        &self.cfg
    }

    fn a(&self) -> Matrix2<f64> {
        let a = &self.cfg.a;
        Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
    }

    fn b(&self) -> Matrix2<f64> {
        let b = &self.cfg.b;
        Matrix2::new(b[0][0], b[0][1], b[1][0], b[1][1])
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.x[0], self.x[1], self.t as f64 / self.cfg.horizon as f64]
    }

    /// Backward discounted Riccati recursion for the scalarization `w`.
    /// Returns the feedback gains `K_t` (with `u_t = −K_t x_t`) and `P_0`.
    pub fn riccati(&self, w: &[f64; 2], gamma: f64) -> (Vec<Matrix2<f64>>, Matrix2<f64>) {
        let (a, b) = (self.a(), self.b());
        let q = Matrix2::new(w[0], 0.0, 0.0, w[1]);
        let r = Matrix2::identity() * (self.cfg.rho * (w[0] + w[1]));
        let mut p = Matrix2::zeros();
        let mut gains = vec![Matrix2::zeros(); self.cfg.horizon];
        for t in (0..self.cfg.horizon).rev() {
            let s = r + gamma * b.transpose() * p * b;
            let k = s.try_inverse().expect("R + γBᵀPB is positive definite") * (gamma * b.transpose() * p * a);
            p = q + gamma * a.transpose() * p * a - gamma * a.transpose() * p * b * k;
            p = (p + p.transpose()) * 0.5;
            gains[t] = k;
        }
        (gains, p)
    }

    /// Optimal discounted scalarized return `w·V*` from the start state.
    pub fn optimal_value(&self, w: &[f64; 2], gamma: f64) -> f64 {
        let (_, p) = self.riccati(w, gamma);
        let x0 = Vector2::new(self.cfg.start[0], self.cfg.start[1]);
        -(x0.transpose() * p * x0)[(0, 0)]
    }

    /// Linear feedback `u = −K_t x` from a Riccati solution, as an action for `state`.
    pub fn feedback(gains: &[Matrix2<f64>], state: &[f64], horizon: usize) -> Action {
        let t = ((state[2] * horizon as f64).round() as usize).min(gains.len() - 1);
        let u = -gains[t] * Vector2::new(state[0], state[1]);
        Action::Continuous(vec![u[0], u[1]])
    }
}

impl Environment for LinearQuad {
    fn spec(&self) -> &MomdpSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.x = Vector2::new(self.cfg.start[0], self.cfg.start[1]);
        self.t = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let Action::Continuous(raw) = action else {
            return Err(EnvError::InvalidAction(format!("{action:?} is not a 2-D control")));
        };
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let bound = self.cfg.action_bound;
        let (u, clipped) = clip_box(raw, &[-bound; 2], &[bound; 2])?;
        let u = Vector2::new(u[0], u[1]);
        let effort = self.cfg.rho * u.norm_squared();
        let reward = ValueVector::new(vec![-(self.x[0] * self.x[0] + effort), -(self.x[1] * self.x[1] + effort)]);
        self.x = self.a() * self.x + self.b() * u;
        self.t += 1;
        let terminal = self.t >= self.cfg.horizon;
        self.done = terminal;
        Ok(StepResult { state: self.observe(), reward, terminal, truncated: false, clipped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn rollout(env: &mut LinearQuad, w: &[f64; 2], gamma: f64, mut policy: impl FnMut(&[f64]) -> Action) -> (f64, bool) {
        let mut s = env.reset(0);
        let (mut total, mut discount, mut clipped) = (0.0, 1.0, false);
        loop {
            let r = env.step(&policy(&s)).unwrap();
            total += discount * (w[0] * r.reward[0] + w[1] * r.reward[1]);
            discount *= gamma;
            clipped |= r.clipped;
            let done = r.done();
            s = r.state;
            if done {
                return (total, clipped);
            }
        }
    }

    /// Open-loop optimum: the return is a concave quadratic in the stacked controls,
    /// maximized by solving its normal equations.
    fn open_loop_optimum(env: &LinearQuad, w: &[f64; 2], gamma: f64) -> f64 {
        let h = env.cfg.horizon;
        let (a, b) = (env.a(), env.b());
        let x0 = Vector2::new(env.cfg.start[0], env.cfg.start[1]);
        // x_t = A^t x0 + Σ_{s<t} A^{t-1-s} B u_s, written as x_t = c_t + G_t U
        let mut c = Vec::with_capacity(h);
        let mut g = Vec::with_capacity(h);
        let mut ct = x0;
        let mut gt = DMatrix::<f64>::zeros(2, 2 * h);
        for t in 0..h {
            c.push(ct);
            g.push(gt.clone());
            let mut next = DMatrix::<f64>::zeros(2, 2 * h);
            let am = DMatrix::from_row_slice(2, 2, a.transpose().as_slice());
            next.copy_from(&(&am * &gt));
            next.view_mut((0, 2 * t), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, b.transpose().as_slice()));
            gt = next;
            ct = a * ct;
        }
        let q = DMatrix::from_row_slice(2, 2, &[w[0], 0.0, 0.0, w[1]]);
        let rho = env.cfg.rho * (w[0] + w[1]);
        // cost = Σ γ^t [(c_t + G_t U)ᵀ Q (c_t + G_t U) + ρ ‖u_t‖²]
        let mut hess = DMatrix::<f64>::zeros(2 * h, 2 * h);
        let mut lin = DVector::<f64>::zeros(2 * h);
        let mut constant = 0.0;
        for t in 0..h {
            let d = gamma.powi(t as i32);
            let ctd = DVector::from_column_slice(c[t].as_slice());
            hess += d * g[t].transpose() * &q * &g[t];
            lin += d * g[t].transpose() * &q * &ctd;
            constant += d * (ctd.transpose() * &q * &ctd)[(0, 0)];
            for k in 0..2 {
                hess[(2 * t + k, 2 * t + k)] += d * rho;
            }
        }
        let u = hess.clone().lu().solve(&(-&lin)).unwrap();
        let cost = (u.transpose() * &hess * &u)[(0, 0)] + 2.0 * (lin.transpose() * &u)[(0, 0)] + constant;
        -cost
    }

    #[test]
    fn riccati_matches_open_loop_solution() {
        let env = LinearQuad::new(LinearQuadConfig::default()).unwrap();
        for w in [[1.0, 0.0], [0.0, 1.0], [0.3, 0.7]] {
            for gamma in [1.0, 0.99, 0.9] {
                let closed = env.optimal_value(&w, gamma);
                let open = open_loop_optimum(&env, &w, gamma);
                assert!((closed - open).abs() < 1e-9 * closed.abs().max(1.0), "{w:?} {gamma}: {closed} vs {open}");
            }
        }
    }

    #[test]
    fn feedback_policy_attains_the_optimum_without_clipping() {
        let mut env = LinearQuad::new(LinearQuadConfig::default()).unwrap();
        let w = [0.0, 1.0];
        let (gains, _) = env.riccati(&w, 0.99);
        let h = env.cfg.horizon;
        let (value, clipped) = rollout(&mut env, &w, 0.99, |s| LinearQuad::feedback(&gains, s, h));
        assert!(!clipped);
        assert!((value - env.optimal_value(&w, 0.99)).abs() < 1e-9);
        let (zero, _) = rollout(&mut env, &w, 0.99, |_| Action::Continuous(vec![0.0, 0.0]));
        assert!(zero < value);
    }

    #[test]
    fn episode_has_fixed_length() {
        let mut env = LinearQuad::new(LinearQuadConfig { horizon: 3, ..Default::default() }).unwrap();
        let s = env.reset(5);
        assert_eq!(s, vec![2.0, 0.5, 0.0]);
        let first = env.step(&Action::Continuous(vec![0.0, 0.0])).unwrap();
        assert_eq!(first.reward.as_slice(), &[-4.0, -0.25]);
        env.step(&Action::Continuous(vec![0.0, 0.0])).unwrap();
        let last = env.step(&Action::Continuous(vec![0.0, 0.0])).unwrap();
        assert!(last.terminal && !last.truncated);
        assert!(env.step(&Action::Continuous(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn controls_are_clipped() {
        let mut env = LinearQuad::new(LinearQuadConfig::default()).unwrap();
        env.reset(0);
        let r = env.step(&Action::Continuous(vec![10.0, 0.0])).unwrap();
        assert!(r.clipped);
        assert_eq!(r.reward[1], -(0.25 + 0.1 * 25.0));
        assert!(env.step(&Action::Continuous(vec![0.0])).is_err());
    }
}
