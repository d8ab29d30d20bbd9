//! Layer normalization over the feature axis with learnable scale and shift.

use super::{shape_err, OpError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Variance guard; keeps constant rows finite. Normalization of a constant
/// row yields zeros, so its output is exactly the shift parameter.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row state the backward pass needs.
pub struct LayerNormCache<T> {
    /// x̂ — the normalized input before scale/shift, [M × d].
    pub normalized: Tensor<T>,
    /// 1/√(var + ε) per row.
    pub rstd: Vec<T>,
}

/// out[m, j] = gamma[j] · x̂[m, j] + beta[j], where x̂ is the row normalized to
/// zero mean and unit variance (biased variance over d).
pub fn layer_norm_forward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
) -> Result<(Tensor<T>, LayerNormCache<T>), OpError> {
    let (m, d) = (input.rows(), input.cols());
    if gamma.len() != d || beta.len() != d {
        return Err(shape_err(
            "layer_norm_forward",
            format!(
                "gamma/beta lengths {}/{} != feature dim {d}",
                gamma.len(),
                beta.len()
            ),
        ));
    }
    let eps = T::of(LAYER_NORM_EPS);
    let dim = T::of(d as f64);
    let mut out = Tensor::zeros(vec![m, d]);
    let mut normalized = Tensor::zeros(vec![m, d]);
    let mut rstd = Vec::with_capacity(m);
    for mm in 0..m {
        let row = input.row(mm);
        let mean = row.iter().copied().sum::<T>() / dim;
        let var = row
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<T>()
            / dim;
        let r = (var + eps).sqrt().recip();
        rstd.push(r);
        let nrow = normalized.row_mut(mm);
        for (j, &v) in row.iter().enumerate() {
            nrow[j] = (v - mean) * r;
        }
        let orow = out.row_mut(mm);
        for j in 0..d {
            orow[j] = gamma.data()[j] * normalized.at2(mm, j) + beta.data()[j];
        }
    }
    Ok((out, LayerNormCache { normalized, rstd }))
}

/// Accumulates input/gamma/beta gradients from `upstream` [M × d].
pub fn layer_norm_backward<T: Scalar>(
    cache: &LayerNormCache<T>,
    gamma: &Tensor<T>,
    upstream: &Tensor<T>,
    input_grad: &mut Tensor<T>,
    gamma_grad: &mut Tensor<T>,
    beta_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (m, d) = (cache.normalized.rows(), cache.normalized.cols());
    if upstream.rows() != m || upstream.cols() != d {
        return Err(shape_err(
            "layer_norm_backward",
            format!("upstream {:?}, expected [{m} x {d}]", upstream.shape()),
        ));
    }
    let dim = T::of(d as f64);
    for mm in 0..m {
        let up = upstream.row(mm);
        let xhat = cache.normalized.row(mm);
        let r = cache.rstd[mm];
        // g = upstream ⊙ gamma; dx = r · (g − (Σg + x̂ · Σ(g⊙x̂)) / d)
        let mut sum_g = T::zero();
        let mut sum_gx = T::zero();
        for j in 0..d {
            let g = up[j] * gamma.data()[j];
            sum_g += g;
            sum_gx += g * xhat[j];
            gamma_grad.data_mut()[j] += up[j] * xhat[j];
            beta_grad.data_mut()[j] += up[j];
        }
        let ig = input_grad.row_mut(mm);
        for j in 0..d {
            let g = up[j] * gamma.data()[j];
            ig[j] += r * (g - (sum_g + xhat[j] * sum_gx) / dim);
        }
    }
    Ok(())
}
