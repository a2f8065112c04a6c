use super::lp::{maximize, LpOutcome};
use super::{GeometryError, ValueVector, WeightVector};
use crate::scalar::Scalar;

/// Per-coordinate limits on candidate value vectors used to keep the
/// optimistic bound finite before every extreme weight has been explored.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> ValueBox<T> {
    /// Observed range of `values` widened by 10% on each side. The margin is
    /// taken from the larger of the span and the magnitude so that a
    /// degenerate range still gets some room.
    pub fn around<'a>(values: impl IntoIterator<Item = &'a ValueVector<T>>) -> Option<Self> {
        let mut iter = values.into_iter();
        let first = iter.next()?;
        let mut lo = first.as_slice().to_vec();
        let mut hi = lo.clone();
        for v in iter {
            for (k, x) in v.as_slice().iter().enumerate() {
                lo[k] = lo[k].min(*x);
                hi[k] = hi[k].max(*x);
            }
        }
        let tenth = T::lit(0.1);
        for k in 0..lo.len() {
            let reach = (hi[k] - lo[k]).max(hi[k].abs()).max(lo[k].abs());
            let margin = if reach > T::zero() { tenth * reach } else { tenth };
            lo[k] = lo[k] - margin;
            hi[k] = hi[k] + margin;
        }
        Some(Self { lo, hi })
    }
}

/// Optimistic bound `max_v w.v` subject to `w'.v <= u + eps` for every
/// explored `(w', u)`. Fails with [`GeometryError::Unbounded`] when the
/// explored weights do not pin down every coordinate `w` puts mass on.
pub fn optimistic_upper_bound<T: Scalar>(
    explored: &[(WeightVector<T>, T)],
    w: &WeightVector<T>,
    eps: T,
) -> Result<T, GeometryError> {
    solve_bound(explored, w, eps, None)
}

/// As [`optimistic_upper_bound`], additionally restricting `v` to `bounds`.
/// An infeasible system means some explored payoff lies below what the box
/// forces, which is reported as [`GeometryError::Inconsistent`].
pub fn optimistic_upper_bound_boxed<T: Scalar>(
    explored: &[(WeightVector<T>, T)],
    w: &WeightVector<T>,
    eps: T,
    bounds: &ValueBox<T>,
) -> Result<T, GeometryError> {
    solve_bound(explored, w, eps, Some(bounds))
}

fn solve_bound<T: Scalar>(
    explored: &[(WeightVector<T>, T)],
    w: &WeightVector<T>,
    eps: T,
    bounds: Option<&ValueBox<T>>,
) -> Result<T, GeometryError> {
    let dim = w.dim();
    if explored.is_empty() && bounds.is_none() {
        return Err(GeometryError::Unbounded);
    }
    if let Some((bad, _)) = explored.iter().find(|(x, _)| x.dim() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    if explored.iter().any(|(_, u)| !u.is_finite()) || !eps.is_finite() {
        return Err(GeometryError::InvalidArgument("non-finite payoff or epsilon".into()));
    }
    // v = p - q with p, q >= 0.
    let split = |coef: &[T]| -> Vec<T> { coef.iter().copied().chain(coef.iter().map(|x| -*x)).collect() };
    let c = split(w.as_slice());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (wx, u) in explored {
        a.push(split(wx.as_slice()));
        b.push(*u + eps);
    }
    if let Some(bx) = bounds {
        if bx.lo.len() != dim || bx.hi.len() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: bx.lo.len() });
        }
        for k in 0..dim {
            let mut unit = vec![T::zero(); dim];
            unit[k] = T::one();
            a.push(split(&unit));
            b.push(bx.hi[k]);
            unit[k] = -T::one();
            a.push(split(&unit));
            b.push(-bx.lo[k]);
        }
    }
    match maximize(&c, &a, &b) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(GeometryError::Inconsistent),
        LpOutcome::Unbounded => Err(GeometryError::Unbounded),
    }
}
