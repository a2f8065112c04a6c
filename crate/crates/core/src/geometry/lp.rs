//! Dense two-phase simplex for small problems of the form
//! `max c.x  s.t.  A x <= b, x >= 0`. Bland's rule keeps it cycle-free.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    cols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, r: usize) -> T {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize, objective: &mut [T]) {
        let p = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x = *x / p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != T::zero() {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x = *x - f * *y;
                }
            }
        }
        let f = objective[c];
        if f != T::zero() {
            for (x, y) in objective.iter_mut().zip(&pivot_row) {
                *x = *x - f * *y;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on a reduced-cost row where entering columns
    /// have negative entries. Returns false when unbounded.
    fn optimise(&mut self, objective: &mut [T], allowed: &dyn Fn(usize) -> bool, tol: T) -> bool {
        let max_iters = 50 * (self.cols + self.rows.len()) + 1000;
        for _ in 0..max_iters {
            let Some(enter) = (0..self.cols).find(|&c| allowed(c) && objective[c] < -tol) else {
                return true;
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][enter];
                if a > tol {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - tol
                                || ((ratio - lratio).abs() <= tol && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter, objective);
        }
        true
    }
}

/// Solves `max c.x s.t. A x <= b, x >= 0`.
pub fn maximize<T: Scalar>(c: &[T], a: &[Vec<T>], b: &[T]) -> LpOutcome<T> {
    let n = c.len();
    let m = b.len();
    assert_eq!(a.len(), m);
    let scale = b.iter().chain(c.iter()).fold(T::one(), |acc, x| acc.max(x.abs()));
    let tol = T::epsilon().sqrt().min(T::lit(1e-9)) * scale;

    // Columns: x (n), slacks (m), artificials (one per negative-rhs row), rhs.
    let neg_rows: Vec<usize> = (0..m).filter(|&i| b[i] < T::zero()).collect();
    let n_art = neg_rows.len();
    let cols = n + m + n_art;
    let mut rows = vec![vec![T::zero(); cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            rows[i][j] = sign * a[i][j];
        }
        rows[i][n + i] = sign;
        rows[i][cols] = sign * b[i];
        if b[i] < T::zero() {
            rows[i][n + m + art] = T::one();
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau { rows, basis, cols };

    if n_art > 0 {
        // Phase one: maximise -sum(artificials).
        let mut obj = vec![T::zero(); cols + 1];
        for k in 0..n_art {
            obj[n + m + k] = T::one();
        }
        for &r in &neg_rows {
            for j in 0..=cols {
                obj[j] = obj[j] - tab.rows[r][j];
            }
        }
        tab.optimise(&mut obj, &|_| true, tol);
        if obj[cols] < -tol {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= n + m {
                if let Some(c) = (0..n + m).find(|&c| tab.rows[r][c].abs() > tol) {
                    tab.pivot(r, c, &mut obj);
                }
            }
        }
    }

    let mut obj = vec![T::zero(); cols + 1];
    for j in 0..n {
        obj[j] = -c[j];
    }
    for r in 0..m {
        let bc = tab.basis[r];
        if bc < n && obj[bc] != T::zero() {
            let f = obj[bc];
            for j in 0..=cols {
                obj[j] = obj[j] - f * tab.rows[r][j];
            }
        }
    }
    let allowed = |col: usize| col < n + m;
    if !tab.optimise(&mut obj, &allowed, tol) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r);
        }
    }
    let value = c.iter().zip(&x).fold(T::zero(), |acc, (ci, xi)| acc + *ci * *xi);
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimum(out: LpOutcome<f64>) -> f64 {
        match out {
            LpOutcome::Optimal { value, .. } => value,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let out = maximize(&[3.0, 5.0], &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]], &[4.0, 12.0, 18.0]);
        assert!((optimum(out) - 36.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // max -x - y s.t. -x - y <= -2 (x + y >= 2), x <= 5 -> -2
        let out = maximize(&[-1.0, -1.0], &[vec![-1.0, -1.0], vec![1.0, 0.0]], &[-2.0, 5.0]);
        assert!((optimum(out) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x <= 1 and x >= 2
        let out = maximize(&[1.0], &[vec![1.0], vec![-1.0]], &[1.0, -2.0]);
        assert_eq!(out, LpOutcome::Infeasible);
        let out = maximize(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Klee-Minty-ish degenerate vertex at the origin.
        let a = vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0], vec![1.0, 0.0, 0.0]];
        let out = maximize(&[1.0, 1.0, 1.0], &a, &[3.0, 0.0, 0.0, 1.0]);
        assert!((optimum(out) - 3.0).abs() < 1e-9);
    }
}
