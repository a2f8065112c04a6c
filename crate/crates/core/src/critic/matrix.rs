
use crate::geometry::{scalarize, GeometryError, ValueVector, WeightVector};
use crate::scalar::Scalar;

/// Square matrix whose row `i` scalarizes the value vector into objective `i`'s composite.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    rows: Vec<WeightVector<T>>,
}

/// How a row update was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSelection {
    /// Index into the marginal-weight list that won.
    Chosen(usize),
    /// No marginal weights were available; the previous row was kept.
    Fallback,
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn identity(dim: usize) -> Self {
        Self { rows: (0..dim).map(|k| WeightVector::extreme(dim, k)).collect() }
    }

    pub fn from_rows(rows: Vec<WeightVector<T>>) -> Result<Self, GeometryError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.dim() != n) {
            return Err(GeometryError::DimensionMismatch { expected: n, found: bad.dim() });
        }
        if n == 0 {
            return Err(GeometryError::InvalidArgument("empty correlation matrix".into()));
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &WeightVector<T> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[WeightVector<T>] {
        &self.rows
    }

    /// `W·v`.
    pub fn compose(&self, v: &ValueVector<T>) -> Result<ValueVector<T>, GeometryError> {
        let out = self.rows.iter().map(|r| scalarize(r, v)).collect::<Result<Vec<_>, _>>()?;
        Ok(ValueVector::new(out))
    }

    /// Row-major entries `w_11, w_12, …, w_II`.
    pub fn flat(&self) -> Vec<T> {
        self.rows.iter().flat_map(|r| r.as_slice().iter().copied()).collect()
    }

    pub fn from_flat(dim: usize, entries: &[T]) -> Result<Self, GeometryError> {
        if entries.len() != dim * dim {
            return Err(GeometryError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        let rows = entries.chunks(dim).map(|c| WeightVector::new(c.to_vec())).collect::<Result<_, _>>()?;
        Self::from_rows(rows)
    }

    /// Returns a copy with row `i` replaced by the marginal weight whose evaluated payoff is highest
    /// (lowest index on ties), projected onto the simplex. Weights missing from `evaluations` are skipped.
    pub fn update_w_row(
        &self,
        i: usize,
        marginal_weights: &[WeightVector<T>],
        evaluations: &[(WeightVector<T>, T)],
    ) -> Result<(Self, RowSelection), GeometryError> {
        if i >= self.dim() {
            return Err(GeometryError::InvalidArgument(format!("row {i} out of range for {}x{}", self.dim(), self.dim())));
        }
        if let Some(bad) = marginal_weights.iter().find(|w| w.dim() != self.dim()) {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), found: bad.dim() });
        }
        let mut best: Option<(usize, T)> = None;
        for (k, w) in marginal_weights.iter().enumerate() {
            let Some((_, payoff)) = evaluations.iter().find(|(e, _)| e.approx_eq(w)) else { continue };
            if best.is_none_or(|(_, b)| *payoff > b) {
                best = Some((k, *payoff));
            }
        }
        let Some((k, _)) = best else {
            return Ok((self.clone(), RowSelection::Fallback));
        };
        let mut next = self.clone();
        next.rows[i] = WeightVector::project(marginal_weights[k].as_slice())?;
        Ok((next, RowSelection::Chosen(k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x: &[f64]) -> WeightVector<f64> {
        WeightVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_composes_to_input() {
        let m = CorrelationMatrix::<f64>::identity(3);
        let v = ValueVector::new(vec![1.5, -2.0, 7.0]);
        assert_eq!(m.compose(&v).unwrap(), v);
    }

    #[test]
    fn five_by_five_example_fixes_ones() {
        // The fourth displayed row is rounded to three decimals and sums to 0.999,
        // so rows are projected onto the simplex first.
        let shown: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.705, 0.208, 0.087],
            [0.0, 0.0, 0.184, 0.754, 0.061],
            [0.0, 0.0, 0.090, 0.013, 0.897],
        ];
        let rows = shown.iter().map(|r| WeightVector::project(r).unwrap()).collect();
        let m = CorrelationMatrix::from_rows(rows).unwrap();
        for (row, raw) in m.rows().iter().zip(&shown) {
            assert!(row.as_slice().iter().zip(raw).all(|(a, b)| (a - b).abs() < 5e-4));
        }
        let y = m.compose(&ValueVector::new(vec![1.0; 5])).unwrap();
        assert!(y.as_slice().iter().all(|x| (*x - 1.0f64).abs() < 1e-12));
    }

    #[test]
    fn selection_row_picks_one_objective() {
        let m = CorrelationMatrix::from_rows(vec![w(&[0.0, 1.0]), w(&[1.0, 0.0])]).unwrap();
        let y = m.compose(&ValueVector::new(vec![3.0, 8.0])).unwrap();
        assert_eq!(y.as_slice(), &[8.0, 3.0]);
    }

    #[test]
    fn update_picks_highest_payoff_and_touches_one_row() {
        let m = CorrelationMatrix::<f64>::identity(2);
        let mws = vec![w(&[1.0, 0.0]), w(&[0.0, 1.0]), w(&[0.6, 0.4]), w(&[0.4, 0.6])];
        let evals: Vec<_> = mws.iter().cloned().zip([0.5, 0.7, 0.9, 0.8]).collect();
        let (next, sel) = m.update_w_row(1, &mws, &evals).unwrap();
        assert_eq!(sel, RowSelection::Chosen(2));
        assert_eq!(next.row(1).as_slice(), &[0.6, 0.4]);
        assert_eq!(next.row(0), m.row(0));
    }

    #[test]
    fn single_extreme_weight_and_ties() {
        let m = CorrelationMatrix::<f64>::identity(5);
        let e1 = WeightVector::extreme(5, 0);
        let (next, _) = m.update_w_row(3, std::slice::from_ref(&e1), &[(e1.clone(), 2.0)]).unwrap();
        assert_eq!(next.row(3).as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0]);

        let m2 = CorrelationMatrix::<f64>::identity(2);
        let mws = vec![w(&[0.3, 0.7]), w(&[0.8, 0.2])];
        let evals = vec![(mws[1].clone(), 1.0), (mws[0].clone(), 1.0)];
        let (_, sel) = m2.update_w_row(0, &mws, &evals).unwrap();
        assert_eq!(sel, RowSelection::Chosen(0));
    }

    #[test]
    fn empty_weights_fall_back() {
        let m = CorrelationMatrix::<f64>::identity(2);
        let (next, sel) = m.update_w_row(0, &[], &[]).unwrap();
        assert_eq!(sel, RowSelection::Fallback);
        assert_eq!(next, m);
    }
}
