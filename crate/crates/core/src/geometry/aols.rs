//! Approximate optimistic linear support.
//!
//! Builds an ε-optimal undominated set by repeatedly evaluating the corner
//! weight with the largest optimistic improvement. Extreme weights are
//! seeded first with a sentinel priority.

use super::bound::{optimistic_upper_bound_boxed, ValueBox};
use super::{GeometryError, UndominatedSet, ValueVector, WeightVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct AolsResult<T> {
    pub us: UndominatedSet<T>,
    pub marginal_weights: Vec<WeightVector<T>>,
    /// Largest remaining optimistic improvement; zero when the queue drained.
    pub delta_max: T,
    pub iterations: usize,
    pub timed_out: bool,
    /// `delta_max` after each evaluation.
    pub history: Vec<T>,
}

impl<T: Scalar> AolsResult<T> {
    pub fn converged(&self, eps: T) -> bool {
        !self.timed_out && self.delta_max <= eps
    }
}

/// Priority standing in for "infinite" in the queue.
pub fn sentinel_priority<T: Scalar>() -> T {
    T::max_value()
}

struct Queue<T> {
    items: Vec<(WeightVector<T>, T)>,
}

impl<T: Scalar> Queue<T> {
    /// Highest priority first; ties resolve to the earliest insertion.
    fn pop(&mut self) -> Option<(WeightVector<T>, T)> {
        let mut best: Option<usize> = None;
        for (k, (_, p)) in self.items.iter().enumerate() {
            if best.is_none_or(|b| *p > self.items[b].1) {
                best = Some(k);
            }
        }
        best.map(|k| self.items.remove(k))
    }

    fn max_priority(&self) -> Option<T> {
        self.items.iter().map(|(_, p)| *p).fold(None, |acc, p| Some(acc.map_or(p, |a: T| a.max(p))))
    }
}

/// Runs AOLS over a `dim`-objective problem.
///
/// `evaluate` returns the best value vector it can find for a weight and the
/// scalarised payoff it attributes to that weight. `max_iters` bounds the
/// number of evaluations; hitting it sets `timed_out`.
pub fn aols<T, F>(dim: usize, mut evaluate: F, eps: T, max_iters: usize) -> Result<AolsResult<T>, GeometryError>
where
    T: Scalar,
    F: FnMut(&WeightVector<T>) -> (ValueVector<T>, T),
{
    if !(eps > T::zero()) {
        return Err(GeometryError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(2..=super::envelope::MAX_SUPPORTED_DIM).contains(&dim) {
        return Err(GeometryError::UnsupportedDimension(dim));
    }
    let mut s = UndominatedSet::new(dim);
    let mut queue = Queue { items: (0..dim).map(|k| (WeightVector::extreme(dim, k), sentinel_priority())).collect() };
    let mut corners: Vec<WeightVector<T>> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut timed_out = false;

    while !queue.items.is_empty() {
        if iterations >= max_iters {
            timed_out = true;
            break;
        }
        let (w, _) = queue.pop().expect("non-empty queue");
        let (v, payoff) = evaluate(&w);
        iterations += 1;
        if v.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: v.dim() });
        }
        s.record_explored(w, payoff)?;
        let tag = s.len() as u64;
        if s.insert(v, tag)? {
            corners = s.marginal_weights()?;
        }
        queue = rebuild_queue(&s, &corners, eps)?;
        history.push(finite_max(&queue));
    }

    let delta_max = if queue.items.is_empty() { T::zero() } else { queue.max_priority().unwrap_or(T::zero()) };
    let marginal_weights = if s.is_empty() { Vec::new() } else { s.marginal_weights()? };
    Ok(AolsResult { us: s, marginal_weights, delta_max, iterations, timed_out, history })
}

fn finite_max<T: Scalar>(queue: &Queue<T>) -> T {
    queue
        .items
        .iter()
        .map(|(_, p)| *p)
        .filter(|p| *p < sentinel_priority())
        .fold(T::zero(), T::max)
}

/// Unexplored extremes keep the sentinel; every unexplored corner whose
/// optimistic improvement exceeds `eps` is queued with that improvement.
fn rebuild_queue<T: Scalar>(
    s: &UndominatedSet<T>,
    corners: &[WeightVector<T>],
    eps: T,
) -> Result<Queue<T>, GeometryError> {
    let dim = s.dim();
    let mut items = Vec::new();
    for k in 0..dim {
        let e = WeightVector::extreme(dim, k);
        if !s.is_explored(&e) {
            items.push((e, sentinel_priority()));
        }
    }
    let bounds = ValueBox::around(s.values()).expect("set is non-empty after the first evaluation");
    for c in corners {
        if c.extreme_index().is_some() || s.is_explored(c) {
            continue;
        }
        let upper = optimistic_upper_bound_boxed(s.explored(), c, eps, &bounds)?;
        let (current, _) = s.max_scalarized(c)?;
        let improvement = upper - current;
        if improvement > eps {
            items.push((c.clone(), improvement));
        }
    }
    Ok(Queue { items })
}

/// Evaluator that answers each weight with the best of a fixed candidate
/// list (lowest index on ties). Payoff is `w . v`.
pub fn lookup_evaluator<T: Scalar>(candidates: &[ValueVector<T>]) -> impl FnMut(&WeightVector<T>) -> (ValueVector<T>, T) + '_ {
    move |w| {
        let mut best: Option<(usize, T)> = None;
        for (k, v) in candidates.iter().enumerate() {
            let s = super::vectors::dot(w.as_slice(), v.as_slice());
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        let (k, s) = best.expect("lookup evaluator needs at least one candidate");
        (candidates[k].clone(), s)
    }
}
