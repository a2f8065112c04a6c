use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Running mean and population variance, merged batch by batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    pub mean: T,
    pub var: T,
    pub count: T,
}

impl<T: Scalar> Default for Normalizer<T> {
    fn default() -> Self {
        Self { mean: T::zero(), var: T::one(), count: T::zero() }
    }
}

impl<T: Scalar> Normalizer<T> {
    fn denom(&self) -> T {
        (self.var + T::lit(1e-8)).sqrt()
    }

    /// Folds `xs` into the statistics (parallel-variance merge).
    pub fn update(&mut self, xs: &[T]) {
        if xs.is_empty() {
            return;
        }
        let n = T::from_usize(xs.len()).unwrap();
        let batch_mean = xs.iter().copied().sum::<T>() / n;
        let batch_var = xs.iter().map(|x| (*x - batch_mean) * (*x - batch_mean)).sum::<T>() / n;
        if self.count == T::zero() {
            self.mean = batch_mean;
            self.var = batch_var;
            self.count = n;
            return;
        }
        let total = self.count + n;
        let delta = batch_mean - self.mean;
        let m2 = self.var * self.count + batch_var * n + delta * delta * self.count * n / total;
        self.mean = self.mean + delta * n / total;
        self.var = (m2 / total).max(T::zero());
        self.count = total;
    }

    pub fn normalize(&self, x: T) -> T {
        (x - self.mean) / self.denom()
    }

    pub fn denormalize(&self, z: T) -> T {
        z * self.denom() + self.mean
    }

    /// Updates the statistics with `xs`, then returns them normalized.
    pub fn normalize_batch(&mut self, xs: &[T]) -> Vec<T> {
        self.update(xs);
        xs.iter().map(|x| self.normalize(*x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_maps_to_zero() {
        let mut n = Normalizer::<f64>::default();
        for _ in 0..5 {
            let out = n.normalize_batch(&[4.0; 8]);
            assert!(out.iter().all(|x| x.abs() < 1e-9));
        }
        assert_eq!(n.var, 0.0);
    }

    #[test]
    fn symmetric_pair() {
        let mut n = Normalizer::<f64>::default();
        let out = n.normalize_batch(&[0.0, 10.0]);
        assert_eq!(n.mean, 5.0);
        assert_eq!(n.var, 25.0);
        assert!((out[0] + out[1]).abs() < 1e-12);
        assert!((out[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 7) % 13) as f64 - 3.0).collect();
        let mut split = Normalizer::default();
        split.update(&xs[..17]);
        split.update(&xs[17..]);
        let mut whole = Normalizer::default();
        whole.update(&xs);
        assert!((split.mean - whole.mean).abs() < 1e-12);
        assert!((split.var - whole.var).abs() < 1e-12);
        assert_eq!(split.count, 50.0);
    }

    #[test]
    fn unit_stream_nearly_unchanged_and_round_trips() {
        let mut n = Normalizer::<f64>::default();
        let out = n.normalize_batch(&[-1.0, 1.0, -1.0, 1.0]);
        assert!((out[0] + 1.0).abs() < 1e-7);
        assert!((n.denormalize(n.normalize(3.5)) - 3.5).abs() < 1e-12);
    }
}
