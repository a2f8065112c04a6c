//! Corner enumeration for the piecewise-linear upper surface
//! `V*_S(w) = max_{v in S} w . v` over the weight simplex.

use super::linalg::{for_each_combination, solve};
use super::vectors::dot;
use super::{GeometryError, ValueVector, WeightVector};
use crate::scalar::Scalar;

pub const MAX_SUPPORTED_DIM: usize = 5;

/// Marginal weights of a set of value vectors: the simplex corners plus every
/// interior point where the maximising member changes.
///
/// Output order is deterministic: `e_1..e_I` first, then interior corners in
/// descending lexicographic order.
pub fn corner_weights<T: Scalar>(values: &[ValueVector<T>]) -> Result<Vec<WeightVector<T>>, GeometryError> {
    let dim = values.first().map(|v| v.dim()).ok_or(GeometryError::EmptySet)?;
    if !(2..=MAX_SUPPORTED_DIM).contains(&dim) {
        return Err(GeometryError::UnsupportedDimension(dim));
    }
    if let Some(bad) = values.iter().find(|v| v.dim() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    let raw = if dim == 2 { line_corners(values) } else { enumerate_vertices(values) };
    Ok(order_corners(dim, raw))
}

fn upper_surface<T: Scalar>(values: &[ValueVector<T>], w: &[T]) -> T {
    values.iter().map(|v| dot(w, v.as_slice())).fold(T::neg_infinity(), T::max)
}

/// Two objectives: `f_m(t) = v_m2 + t (v_m1 - v_m2)` over `t = w_1 in [0, 1]`.
/// Corners are the endpoints and pairwise crossings lying on the surface.
fn line_corners<T: Scalar>(values: &[ValueVector<T>]) -> Vec<WeightVector<T>> {
    let tol = T::tolerance();
    let mut out = vec![WeightVector::extreme(2, 0), WeightVector::extreme(2, 1)];
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            let (va, vb) = (&values[a], &values[b]);
            let slope_gap = (va[0] - va[1]) - (vb[0] - vb[1]);
            if slope_gap.abs() <= tol {
                continue;
            }
            let t = (vb[1] - va[1]) / slope_gap;
            if t <= tol || t >= T::one() - tol {
                continue;
            }
            let w = [t, T::one() - t];
            let here = dot(&w, va.as_slice());
            if here >= upper_surface(values, &w) - tol * scale(values) {
                if let Some(w) = WeightVector::from_rounded(&w) {
                    out.push(w);
                }
            }
        }
    }
    out
}

fn scale<T: Scalar>(values: &[ValueVector<T>]) -> T {
    values
        .iter()
        .flat_map(|v| v.as_slice().iter())
        .fold(T::one(), |acc, x| acc.max(x.abs()))
}

/// General case: vertices of the epigraph `{(w, z) : w in simplex, z >= w . v_m}`.
/// Each vertex fixes `sum w = 1` plus `I` independent tight constraints drawn
/// from `w_k = 0` and `z = w . v_m`.
pub(crate) fn enumerate_vertices<T: Scalar>(values: &[ValueVector<T>]) -> Vec<WeightVector<T>> {
    let dim = values[0].dim();
    let tol = T::tolerance();
    let feas_tol = tol * scale(values);
    let pool = dim + values.len();
    let mut out = Vec::new();
    for_each_combination(pool, dim, |choice| {
        // Unknowns: w_1..w_I, z.
        let mut a = Vec::with_capacity(dim + 1);
        let mut b = Vec::with_capacity(dim + 1);
        let mut row = vec![T::one(); dim + 1];
        row[dim] = T::zero();
        a.push(row);
        b.push(T::one());
        for &c in choice {
            let mut row = vec![T::zero(); dim + 1];
            if c < dim {
                row[c] = T::one();
            } else {
                let v = &values[c - dim];
                for k in 0..dim {
                    row[k] = v[k];
                }
                row[dim] = -T::one();
            }
            a.push(row);
            b.push(T::zero());
        }
        let Some(x) = solve(a, b, T::lit(1e-12).max(T::epsilon() * T::lit(16.0))) else {
            return;
        };
        let w = &x[..dim];
        if w.iter().any(|wk| *wk < -tol) {
            return;
        }
        if x[dim] < upper_surface(values, w) - feas_tol {
            return;
        }
        if let Some(w) = WeightVector::from_rounded(w) {
            out.push(w);
        }
    });
    out
}

fn order_corners<T: Scalar>(dim: usize, raw: Vec<WeightVector<T>>) -> Vec<WeightVector<T>> {
    let mut interior: Vec<WeightVector<T>> = Vec::new();
    for w in raw {
        if w.extreme_index().is_some() || interior.iter().any(|x| x.approx_eq(&w)) {
            continue;
        }
        interior.push(w);
    }
    interior.sort_by(|a, b| {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            match y.partial_cmp(x).unwrap() {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut out: Vec<WeightVector<T>> = (0..dim).map(|k| WeightVector::extreme(dim, k)).collect();
    out.extend(interior);
    out
}
