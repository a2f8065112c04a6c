use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::scalar::Scalar;

/// A point on the weight simplex: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct WeightVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self, GeometryError> {
        if entries.is_empty() {
            return Err(GeometryError::NotOnSimplex("empty weight".into()));
        }
        if let Some(x) = entries.iter().find(|x| !(**x >= T::zero())) {
            return Err(GeometryError::NotOnSimplex(format!("negative or NaN entry {x}")));
        }
        let sum: T = entries.iter().copied().sum();
        if (sum - T::one()).abs() > T::tolerance() {
            return Err(GeometryError::NotOnSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self { entries })
    }

    /// The `k`-th corner of the simplex.
    pub fn extreme(dim: usize, k: usize) -> Self {
        assert!(k < dim, "extreme index {k} out of range for dimension {dim}");
        let mut entries = vec![T::zero(); dim];
        entries[k] = T::one();
        Self { entries }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        let share = T::one() / T::from_usize(dim).unwrap();
        Self { entries: vec![share; dim] }
    }

    /// Euclidean projection of an arbitrary vector onto the simplex.
    pub fn project(raw: &[T]) -> Result<Self, GeometryError> {
        if raw.is_empty() || raw.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NotOnSimplex("cannot project empty or non-finite vector".into()));
        }
        let mut sorted: Vec<T> = raw.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumulative = T::zero();
        let mut theta = T::zero();
        for (j, u) in sorted.iter().enumerate() {
            cumulative = cumulative + *u;
            let t = (cumulative - T::one()) / T::from_usize(j + 1).unwrap();
            if *u - t > T::zero() {
                theta = t;
            }
        }
        let mut entries: Vec<T> = raw.iter().map(|x| (*x - theta).max(T::zero())).collect();
        // Exact renormalisation so the sum lands on one to rounding.
        let sum: T = entries.iter().copied().sum();
        for e in entries.iter_mut() {
            *e = *e / sum;
        }
        Self::new(entries)
    }

    /// Clamp round-off negatives to zero and renormalise. Used for computed
    /// intersection points that sit on the simplex up to rounding.
    pub(crate) fn from_rounded(raw: &[T]) -> Option<Self> {
        let mut entries: Vec<T> = raw.iter().map(|x| x.max(T::zero())).collect();
        let sum: T = entries.iter().copied().sum();
        if !(sum > T::zero()) {
            return None;
        }
        for e in entries.iter_mut() {
            *e = *e / sum;
        }
        Self::new(entries).ok()
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    /// Index of the single unit entry, if this is a simplex corner.
    pub fn extreme_index(&self) -> Option<usize> {
        let tol = T::tolerance();
        let pos = self.entries.iter().position(|x| (*x - T::one()).abs() <= tol)?;
        self.entries
            .iter()
            .enumerate()
            .all(|(k, x)| k == pos || x.abs() <= tol)
            .then_some(pos)
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        approx_eq(&self.entries, &other.entries)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|x| x.as_f64()).collect()
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for WeightVector<T> {
    type Error = GeometryError;
    fn try_from(v: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl<T> From<WeightVector<T>> for Vec<T> {
    fn from(w: WeightVector<T>) -> Self {
        w.entries
    }
}

/// Per-objective expected returns, one entry per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> ValueVector<T> {
    pub fn new(entries: Vec<T>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![T::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        approx_eq(&self.entries, &other.entries)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|x| x.as_f64()).collect()
    }
}

impl<T> From<Vec<T>> for ValueVector<T> {
    fn from(entries: Vec<T>) -> Self {
        Self { entries }
    }
}

impl<T> std::ops::Index<usize> for ValueVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

impl<T> std::ops::Index<usize> for WeightVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

pub(crate) fn approx_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (*x - *y).abs() <= T::tolerance())
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Linear scalarisation `w · v`.
pub fn scalarize<T: Scalar>(w: &WeightVector<T>, v: &ValueVector<T>) -> Result<T, GeometryError> {
    if w.dim() != v.dim() {
        return Err(GeometryError::DimensionMismatch { expected: w.dim(), found: v.dim() });
    }
    Ok(dot(w.as_slice(), v.as_slice()))
}

/// Maximal relative improvement `(v_ub - v_s) / |v_ub|`.
///
/// The magnitude in the denominator keeps the ratio non-negative whenever
/// `v_ub >= v_s`, including for cost-like objectives with negative values.
pub fn relative_improvement<T: Scalar>(v_ub: T, v_s: T) -> Result<T, GeometryError> {
    if v_ub == T::zero() || !v_ub.is_finite() {
        return Err(GeometryError::DivisionGuard);
    }
    Ok((v_ub - v_s) / v_ub.abs())
}
