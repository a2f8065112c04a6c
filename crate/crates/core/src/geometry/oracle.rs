use super::vectors::dot;
use super::{GeometryError, UndominatedSet, ValueVector};
use crate::scalar::Scalar;

/// Uniform grid over the simplex with `points` samples per edge. Supports
/// two and three objectives.
pub fn simplex_grid<T: Scalar>(dim: usize, points: usize) -> Result<Vec<Vec<T>>, GeometryError> {
    if points < 2 {
        return Err(GeometryError::InvalidArgument("grid needs at least 2 points".into()));
    }
    let steps = points - 1;
    let frac = |i: usize| T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
    match dim {
        2 => Ok((0..=steps).map(|i| vec![frac(i), frac(steps - i)]).collect()),
        3 => {
            let mut out = Vec::new();
            for i in 0..=steps {
                for j in 0..=steps - i {
                    out.push(vec![frac(i), frac(j), frac(steps - i - j)]);
                }
            }
            Ok(out)
        }
        other => Err(GeometryError::UnsupportedDimension(other)),
    }
}

/// Undominated set by exhaustive grid scan: the union of argmax candidates
/// (lowest index on ties) over a uniform simplex grid. Members keep the
/// candidate order and are tagged with the candidate index.
pub fn brute_force_us<T: Scalar>(candidates: &[ValueVector<T>], grid_points: usize) -> Result<UndominatedSet<T>, GeometryError> {
    let dim = candidates.first().map(|v| v.dim()).ok_or(GeometryError::EmptySet)?;
    if let Some(bad) = candidates.iter().find(|v| v.dim() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    let grid = simplex_grid::<T>(dim, grid_points)?;
    let mut winners = vec![false; candidates.len()];
    for w in &grid {
        let mut best: Option<(usize, T)> = None;
        for (k, v) in candidates.iter().enumerate() {
            let s = dot(w, v.as_slice());
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        winners[best.unwrap().0] = true;
    }
    let mut set = UndominatedSet::new(dim);
    for (k, v) in candidates.iter().enumerate() {
        if winners[k] {
            set.insert(v.clone(), k as u64)?;
        }
    }
    Ok(set)
}

/// Largest margin by which `candidates[index]` beats every other candidate
/// over the grid (negative when it never wins outright).
pub fn best_grid_advantage<T: Scalar>(candidates: &[ValueVector<T>], index: usize, grid_points: usize) -> Result<T, GeometryError> {
    let dim = candidates[index].dim();
    let grid = simplex_grid::<T>(dim, grid_points)?;
    let mut best = T::neg_infinity();
    for w in &grid {
        let own = dot(w, candidates[index].as_slice());
        let rival = candidates
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != index)
            .map(|(_, v)| dot(w, v.as_slice()))
            .fold(T::neg_infinity(), T::max);
        best = best.max(own - rival);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(vs: &[&[f64]]) -> Vec<ValueVector<f64>> {
        vs.iter().map(|v| ValueVector::new(v.to_vec())).collect()
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(brute_force_us(&vals(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.6]]), 1001).unwrap().len(), 3);
        let s = brute_force_us(&vals(&[&[1.0, 1.0], &[0.5, 0.5]]), 11).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.contains(&ValueVector::new(vec![1.0, 1.0])));
        let s = brute_force_us(&vals(&[&[0.3, 0.3]]), 2).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid::<f64>(2, 201).unwrap().len(), 201);
        assert_eq!(simplex_grid::<f64>(3, 5).unwrap().len(), 15);
        assert!(simplex_grid::<f64>(4, 5).is_err());
        assert!(simplex_grid::<f64>(2, 1).is_err());
        for w in simplex_grid::<f64>(3, 7).unwrap() {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_advantage() {
        let c = vals(&[&[1.0, 0.0], &[0.0, 1.0], &[0.4, 0.4]]);
        assert!((best_grid_advantage(&c, 0, 101).unwrap() - 0.6).abs() < 1e-12);
        assert!(best_grid_advantage(&c, 2, 101).unwrap() < 0.0);
    }
}
