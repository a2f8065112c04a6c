use super::graph::{Graph, Var};
use super::mlp::{BoundMlp, MlpParams, Parameters};
use super::tensor::TensorError;

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters whose `±h` probe flipped a ReLU, so the central difference straddles a kink.
    pub skipped_kinks: usize,
}

/// Denominator floor for the relative error; below this both gradients count as zero.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

fn evaluate<F>(p: &MlpParams, loss_fn: &F) -> Result<(f64, Vec<bool>), TensorError>
where
    F: Fn(&MlpParams, &mut Graph, &BoundMlp) -> Result<Var, TensorError>,
{
    let mut g = Graph::new();
    let bound = p.bind(&mut g);
    let loss = loss_fn(p, &mut g, &bound)?;
    let value = g.value(loss);
    if value.len() != 1 {
        return Err(TensorError::NonScalarLoss(value.shape().to_vec()));
    }
    Ok((value.item(), g.relu_pattern()))
}

/// Compares reverse-mode gradients with central differences of step `h` on every parameter.
pub fn finite_diff_check<F>(p: &MlpParams, loss_fn: F, h: f64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&MlpParams, &mut Graph, &BoundMlp) -> Result<Var, TensorError>,
{
    assert!(h > 0.0, "step must be positive");
    let mut g = Graph::new();
    let bound = p.bind(&mut g);
    let loss = loss_fn(p, &mut g, &bound)?;
    let base_pattern = g.relu_pattern();
    let grads = p.collect_grads(&g.backward(loss)?, &bound);

    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, skipped_kinks: 0 };
    let mut probe = p.clone();
    for (t, grad) in grads.iter().enumerate() {
        for k in 0..grad.len() {
            let original = probe.tensors()[t].data()[k];
            probe.tensors_mut()[t].data_mut()[k] = original + h;
            let (f_plus, pat_plus) = evaluate(&probe, &loss_fn)?;
            probe.tensors_mut()[t].data_mut()[k] = original - h;
            let (f_minus, pat_minus) = evaluate(&probe, &loss_fn)?;
            probe.tensors_mut()[t].data_mut()[k] = original;
            if pat_plus != base_pattern || pat_minus != base_pattern {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (f_plus - f_minus) / (2.0 * h);
            report.max_rel_error = report.max_rel_error.max(relative_error(grad.data()[k], numeric));
            report.checked += 1;
        }
    }
    Ok(report)
}
