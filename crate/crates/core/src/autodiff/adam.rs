use serde::{Deserialize, Serialize};

use super::mlp::Parameters;
use super::tensor::{Tensor, TensorError};

/// Adam optimizer state with bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &impl Parameters) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.m, &self.v)
    }

    /// Rebuilds a saved state; moment buffers must match the shapes of `params`.
    pub fn from_moments(params: &impl Parameters, step: u64, m: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> Result<Self, TensorError> {
        let shapes: Vec<Vec<usize>> = params.tensors().iter().map(|t| t.shape().to_vec()).collect();
        if m.len() != shapes.len() || v.len() != shapes.len() {
            return Err(TensorError::Shape(format!("{} parameters, {} and {} moment buffers", shapes.len(), m.len(), v.len())));
        }
        let build = |bufs: Vec<Vec<f64>>| -> Result<Vec<Tensor>, TensorError> {
            bufs.into_iter().zip(&shapes).map(|(b, s)| Tensor::new(s.clone(), b)).collect()
        };
        let mut state = Self::new(params);
        state.step = step;
        state.m = build(m)?;
        state.v = build(v)?;
        Ok(state)
    }

    /// Applies one update. Non-finite gradients are rejected and nothing changes.
    pub fn step(&mut self, params: &mut impl Parameters, grads: &[Tensor], lr: f64) -> Result<(), TensorError> {
        let mut targets = params.tensors_mut();
        if targets.len() != grads.len() || targets.len() != self.m.len() {
            return Err(TensorError::Shape(format!(
                "{} parameters, {} gradients, {} moments",
                targets.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (p, g) in targets.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(TensorError::Shape(format!("gradient {:?} for parameter {:?}", g.shape(), p.shape())));
            }
            if !g.is_finite() {
                return Err(TensorError::NonFinite("gradient".into()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in targets.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let (pd, gd) = (p.data_mut(), g.data());
            let (md, vd) = (m.data_mut(), v.data_mut());
            for k in 0..pd.len() {
                md[k] = self.beta1 * md[k] + (1.0 - self.beta1) * gd[k];
                vd[k] = self.beta2 * vd[k] + (1.0 - self.beta2) * gd[k] * gd[k];
                let m_hat = md[k] / c1;
                let v_hat = vd[k] / c2;
                pd[k] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

pub fn global_norm(grads: &[Tensor]) -> f64 {
    grads.iter().map(Tensor::squared_norm).sum::<f64>().sqrt()
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            g.data_mut().iter_mut().for_each(|x| *x *= s);
        }
    }
    norm
}
