use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Gradients, Graph, Var};
use super::tensor::{add_row, matmul_t, relu, Tensor, TensorError};

/// Fully connected layer; `weight` is `[out, in]`, `bias` is `[out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }
}

/// Multilayer perceptron: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Parameter leaves of an [`MlpParams`] registered on a graph.
#[derive(Debug, Clone)]
pub struct BoundMlp {
    vars: Vec<(Var, Var)>,
}

impl BoundMlp {
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.vars.iter().flat_map(|(w, b)| [*w, *b])
    }
}

/// Anything with an ordered list of trainable tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
}

impl MlpParams {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output widths");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect();
                Layer {
                    weight: Tensor::matrix(fan_out, fan_in, data).unwrap(),
                    bias: Tensor::zeros(&[fan_out]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|p| Layer { weight: Tensor::zeros(&[p[1], p[0]]), bias: Tensor::zeros(&[p[1]]) })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, TensorError> {
        for l in &layers {
            if l.weight.shape().len() != 2 || l.bias.len() != l.outputs() {
                return Err(TensorError::Shape("layer weight/bias mismatch".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(TensorError::Shape(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        if layers.is_empty() {
            return Err(TensorError::Shape("no layers".into()));
        }
        Ok(Self { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_width()).chain(self.layers.iter().map(Layer::outputs)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.is_finite() && l.bias.is_finite())
    }

    /// Forward pass on a `[batch, in]` matrix.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, TensorError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            h = add_row(&matmul_t(&h, &layer.weight)?, &layer.bias)?;
            if k + 1 < self.layers.len() {
                h = relu(&h);
            }
        }
        Ok(h)
    }

    fn check_input(&self, x: &Tensor) -> Result<(), TensorError> {
        if x.shape().len() != 2 || x.cols() != self.input_width() {
            return Err(TensorError::Shape(format!(
                "input {:?} does not match width {}",
                x.shape(),
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn bind(&self, g: &mut Graph) -> BoundMlp {
        BoundMlp {
            vars: self.layers.iter().map(|l| (g.leaf(l.weight.clone()), g.leaf(l.bias.clone()))).collect(),
        }
    }

    /// Graph counterpart of [`MlpParams::forward`], bit-identical in value.
    pub fn apply(&self, g: &mut Graph, bound: &BoundMlp, x: Var) -> Result<Var, TensorError> {
        self.check_input(g.value(x))?;
        let mut h = x;
        let last = bound.vars.len() - 1;
        for (k, (w, b)) in bound.vars.iter().enumerate() {
            let z = g.matmul_t(h, *w)?;
            h = g.add_row(z, *b)?;
            if k < last {
                h = g.relu(h);
            }
        }
        Ok(h)
    }

    /// Gradients in [`Parameters::tensors`] order.
    pub fn collect_grads(&self, grads: &Gradients, bound: &BoundMlp) -> Vec<Tensor> {
        self.layers
            .iter()
            .zip(&bound.vars)
            .flat_map(|(l, (w, b))| [grads.wrt(*w, l.weight.shape()), grads.wrt(*b, l.bias.shape())])
            .collect()
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }
}
