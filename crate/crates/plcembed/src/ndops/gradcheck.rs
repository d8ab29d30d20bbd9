//! Central finite-difference validation for hand-written backward passes.
//!
//! Runs in `f64` only: the perturbation step is sized for double precision and
//! the tolerances assumed by the test suites are unreachable in `f32`.

use crate::tensor::Tensor;

/// Max relative error between an analytic and a numeric gradient.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst-matching element.
    pub worst_index: usize,
    /// Number of elements compared.
    pub checked: usize,
}

/// Numeric gradient of `f` with respect to every element of `values`:
/// `(f(v+h) − f(v−h)) / (vp − vm)` with `h = 1e-4 · max(1, |v|)`. The divisor
/// uses the actually-representable difference to absorb rounding in `v ± h`.
pub fn central_diff<F>(values: &Tensor<f64>, mut f: F) -> Tensor<f64>
where
    F: FnMut(&Tensor<f64>) -> f64,
{
    let mut work = values.clone();
    let mut grad = Tensor::zeros(values.shape().to_vec());
    for i in 0..values.len() {
        let v = values.data()[i];
        let h = 1e-4 * v.abs().max(1.0);
        let vp = v + h;
        let vm = v - h;

        work.data_mut()[i] = vp;
        let fp = f(&work);
        work.data_mut()[i] = vm;
        let fm = f(&work);
        work.data_mut()[i] = v;

        grad.data_mut()[i] = (fp - fm) / (vp - vm);
    }
    grad
}

/// Elementwise relative error `|a − n| / max(1, |a|, |n|)`, reduced to the max.
pub fn compare(analytic: &[f64], numeric: &[f64]) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut max_rel_error = 0.0;
    let mut worst_index = 0;
    for (i, (&a, &n)) in analytic.iter().zip(numeric.iter()).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1.0);
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_index = i;
        }
    }
    GradCheckReport {
        max_rel_error,
        worst_index,
        checked: analytic.len(),
    }
}
