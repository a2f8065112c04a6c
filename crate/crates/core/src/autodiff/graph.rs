//! Tape-based reverse-mode differentiation over [`Tensor`] values.
//!
//! Nodes are appended in evaluation order, so a single reverse sweep from the
//! loss visits every dependency after all of its consumers.

use super::tensor::{add_row, matmul_t, relu, Tensor, TensorError};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMulT(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Relu(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
    SumCols(Var),
    LogSoftmax(Var),
    Pick(Var, Vec<usize>),
    Minimum(Var, Var),
    Clamp(Var, f64, f64),
    Reshape(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`; zero-filled when the loss does not depend on it.
    pub fn wrt(&self, v: Var, shape: &[usize]) -> Tensor {
        self.grads[v.0].clone().unwrap_or_else(|| Tensor::zeros(shape))
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input or parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<(), TensorError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(TensorError::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = matmul_t(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMulT(a, b)))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let out = add_row(self.value(a), self.value(row))?;
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    /// Multiplies every row of `a` elementwise by the vector `row`.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (av, rv) = (self.value(a), self.value(row));
        let m = av.cols();
        if rv.len() != m {
            return Err(TensorError::Shape(format!("mul_row {:?} * {:?}", av.shape(), rv.shape())));
        }
        let mut out = av.clone();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x *= rv.data()[i % m];
        }
        Ok(self.push(out, Op::MulRow(a, row)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = relu(self.value(a));
        self.push(out, Op::Relu(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "add")?;
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "sub")?;
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "mul")?;
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x + c);
        self.push(out, Op::AddScalar(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::ln);
        self.push(out, Op::Log(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x * x);
        self.push(out, Op::Square(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let s = v.data().iter().sum::<f64>() / v.len() as f64;
        self.push(Tensor::scalar(s), Op::Mean(a))
    }

    /// Row sums of an `[n,m]` matrix, giving `[n]`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = v.cols();
        let out: Vec<f64> = v.data().chunks(m).map(|r| r.iter().sum()).collect();
        self.push(Tensor::vector(out), Op::SumCols(a))
    }

    /// Row-wise log-softmax of an `[n,m]` matrix.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = v.cols();
        let mut out = v.clone();
        for row in out.data_mut().chunks_mut(m) {
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = hi + row.iter().map(|x| (x - hi).exp()).sum::<f64>().ln();
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        self.push(out, Op::LogSoftmax(a))
    }

    /// Selects column `idx[i]` from row `i`, giving `[n]`.
    pub fn pick(&mut self, a: Var, idx: Vec<usize>) -> Result<Var, TensorError> {
        let v = self.value(a);
        let m = v.cols();
        if idx.len() != v.rows() || idx.iter().any(|&j| j >= m) {
            return Err(TensorError::Shape(format!("pick {} indices from {:?}", idx.len(), v.shape())));
        }
        let out: Vec<f64> = idx.iter().enumerate().map(|(i, &j)| v.data()[i * m + j]).collect();
        Ok(self.push(Tensor::vector(out), Op::Pick(a, idx)))
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "minimum")?;
        let out = self.value(a).zip(self.value(b), f64::min);
        Ok(self.push(out, Op::Minimum(a, b)))
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let out = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(out, Op::Clamp(a, lo, hi))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let out = self.value(a).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(a)))
    }

    /// Sign pattern of every ReLU input on the tape, used to detect when a
    /// finite-difference probe crosses a kink.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(a) => Some(self.value(a).data().iter().map(|x| *x > 0.0).collect::<Vec<_>>()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.value(loss).shape();
        if self.value(loss).len() != 1 {
            return Err(TensorError::NonScalarLoss(shape.to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(shape, 1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let accumulate = |grads: &mut [Option<Tensor>], v: Var, contrib: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&contrib),
            slot @ None => *slot = Some(contrib),
        };
        let out = &self.nodes[idx].value;
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatMulT(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (n, k, m) = (av.rows(), av.cols(), bv.rows());
                let mut da = Tensor::zeros(av.shape());
                let mut db = Tensor::zeros(bv.shape());
                for i in 0..n {
                    for j in 0..m {
                        let gij = g.data()[i * m + j];
                        if gij == 0.0 {
                            continue;
                        }
                        for t in 0..k {
                            da.data_mut()[i * k + t] += gij * bv.data()[j * k + t];
                            db.data_mut()[j * k + t] += gij * av.data()[i * k + t];
                        }
                    }
                }
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::AddRow(a, row) => {
                let m = g.cols();
                let mut dr = vec![0.0; m];
                for (i, x) in g.data().iter().enumerate() {
                    dr[i % m] += x;
                }
                accumulate(grads, *a, g.clone());
                let shape = self.value(*row).shape().to_vec();
                accumulate(grads, *row, Tensor::new(shape, dr).unwrap());
            }
            Op::MulRow(a, row) => {
                let (av, rv) = (self.value(*a), self.value(*row));
                let m = av.cols();
                let mut da = g.clone();
                let mut dr = vec![0.0; m];
                for (i, x) in da.data_mut().iter_mut().enumerate() {
                    dr[i % m] += *x * av.data()[i];
                    *x *= rv.data()[i % m];
                }
                accumulate(grads, *a, da);
                accumulate(grads, *row, Tensor::new(rv.shape().to_vec(), dr).unwrap());
            }
            Op::Relu(a) => {
                let da = g.zip(self.value(*a), |gi, x| if x > 0.0 { gi } else { 0.0 });
                accumulate(grads, *a, da);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                accumulate(grads, *a, g.zip(self.value(*b), |gi, y| gi * y));
                accumulate(grads, *b, g.zip(self.value(*a), |gi, x| gi * x));
            }
            Op::Scale(a, c) => accumulate(grads, *a, g.map(|x| x * c)),
            Op::AddScalar(a) | Op::Reshape(a) => {
                let shape = self.value(*a).shape().to_vec();
                accumulate(grads, *a, g.clone().reshape(shape).unwrap());
            }
            Op::Exp(a) => accumulate(grads, *a, g.zip(out, |gi, y| gi * y)),
            Op::Log(a) => accumulate(grads, *a, g.zip(self.value(*a), |gi, x| gi / x)),
            Op::Square(a) => accumulate(grads, *a, g.zip(self.value(*a), |gi, x| 2.0 * gi * x)),
            Op::Sum(a) => accumulate(grads, *a, Tensor::filled(self.value(*a).shape(), g.item())),
            Op::Mean(a) => {
                let av = self.value(*a);
                accumulate(grads, *a, Tensor::filled(av.shape(), g.item() / av.len() as f64));
            }
            Op::SumCols(a) => {
                let av = self.value(*a);
                let m = av.cols();
                let data = (0..av.len()).map(|i| g.data()[i / m]).collect();
                accumulate(grads, *a, Tensor::new(av.shape().to_vec(), data).unwrap());
            }
            Op::LogSoftmax(a) => {
                let m = out.cols();
                let mut da = g.clone();
                for (row_g, row_y) in da.data_mut().chunks_mut(m).zip(out.data().chunks(m)) {
                    let total: f64 = row_g.iter().sum();
                    for (gi, y) in row_g.iter_mut().zip(row_y) {
                        *gi -= y.exp() * total;
                    }
                }
                accumulate(grads, *a, da);
            }
            Op::Pick(a, idx) => {
                let av = self.value(*a);
                let m = av.cols();
                let mut da = Tensor::zeros(av.shape());
                for (i, &j) in idx.iter().enumerate() {
                    da.data_mut()[i * m + j] += g.data()[i];
                }
                accumulate(grads, *a, da);
            }
            Op::Minimum(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let mut da = Tensor::zeros(av.shape());
                let mut db = Tensor::zeros(bv.shape());
                for i in 0..av.len() {
                    if av.data()[i] <= bv.data()[i] {
                        da.data_mut()[i] = g.data()[i];
                    } else {
                        db.data_mut()[i] = g.data()[i];
                    }
                }
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::Clamp(a, lo, hi) => {
                let da = g.zip(self.value(*a), |gi, x| if x >= *lo && x <= *hi { gi } else { 0.0 });
                accumulate(grads, *a, da);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_leaves_has_unit_gradient() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::vector(vec![1.0, -2.0, 3.0]));
        let b = g.leaf(Tensor::vector(vec![0.5]));
        let sa = g.sum(a);
        let sb = g.sum(b);
        let loss = g.add(sa, sb).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(a, &[3]).data(), &[1.0, 1.0, 1.0]);
        assert_eq!(grads.wrt(b, &[1]).data(), &[1.0]);
    }

    #[test]
    fn unused_leaf_gets_zero_gradient() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let unused = g.leaf(Tensor::vector(vec![5.0]));
        let loss = g.sum(a);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(unused, &[1]).data(), &[0.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let sq = g.square(a);
        assert_eq!(g.backward(sq).unwrap_err(), TensorError::NonScalarLoss(vec![2]));
    }

    #[test]
    fn least_squares_gradient_closed_form() {
        // L = ½‖Wx − y‖², dL/dW = (Wx − y) xᵀ.
        let w = Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap();
        let x = [1.0, 2.0, -1.0];
        let y = [0.5, -0.5];
        let mut g = Graph::new();
        let wv = g.leaf(w.clone());
        let xv = g.leaf(Tensor::matrix(1, 3, x.to_vec()).unwrap());
        let yv = g.leaf(Tensor::matrix(1, 2, y.to_vec()).unwrap());
        let pred = g.matmul_t(xv, wv).unwrap();
        let diff = g.sub(pred, yv).unwrap();
        let sq = g.square(diff);
        let s = g.sum(sq);
        let loss = g.scale(s, 0.5);
        let grads = g.backward(loss).unwrap();
        let dw = grads.wrt(wv, &[2, 3]);
        for r in 0..2 {
            let resid: f64 = (0..3).map(|c| w.data()[r * 3 + c] * x[c]).sum::<f64>() - y[r];
            for c in 0..3 {
                assert!((dw.data()[r * 3 + c] - resid * x[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_softmax_pick_gradient() {
        // d/dz log softmax(z)_0 = e_0 - softmax(z).
        let mut g = Graph::new();
        let z = g.leaf(Tensor::matrix(1, 3, vec![0.2, -1.0, 0.5]).unwrap());
        let ls = g.log_softmax(z);
        let picked = g.pick(ls, vec![0]).unwrap();
        let loss = g.sum(picked);
        let grads = g.backward(loss).unwrap();
        let zs = [0.2f64, -1.0, 0.5];
        let denom: f64 = zs.iter().map(|x| x.exp()).sum();
        let dz = grads.wrt(z, &[1, 3]);
        for k in 0..3 {
            let want = if k == 0 { 1.0 } else { 0.0 } - zs[k].exp() / denom;
            assert!((dz.data()[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_and_minimum_routing() {
        let mut g = Graph::new();
        let r = g.leaf(Tensor::vector(vec![0.5, 1.0, 1.5]));
        let clipped = g.clamp(r, 0.8, 1.2);
        let m = g.minimum(r, clipped).unwrap();
        let loss = g.sum(m);
        let grads = g.backward(loss).unwrap();
        // 0.5: min(0.5, 0.8) -> r; 1.0: tie -> r; 1.5: min(1.5, 1.2) -> clamp, saturated.
        assert_eq!(grads.wrt(r, &[3]).data(), &[1.0, 1.0, 0.0]);
    }
}
