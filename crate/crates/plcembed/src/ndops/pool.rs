//! Masked mean pooling: the sequence summary is the mean over valid positions
//! only, so padding never dilutes it.

use super::{shape_err, OpError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean of the unmasked rows of `input` [M × d] → [d].
pub fn masked_mean_pool<T: Scalar>(input: &Tensor<T>, mask: &[bool]) -> Result<Tensor<T>, OpError> {
    let (m, d) = (input.rows(), input.cols());
    if mask.len() != m {
        return Err(shape_err(
            "masked_mean_pool",
            format!("mask length {} != rows {m}", mask.len()),
        ));
    }
    let count = mask.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(OpError::AllMasked);
    }
    let inv = T::of(1.0 / count as f64);
    let mut out = Tensor::zeros(vec![d]);
    for mm in 0..m {
        if !mask[mm] {
            continue;
        }
        let row = input.row(mm);
        for (o, &v) in out.data_mut().iter_mut().zip(row.iter()) {
            *o += v * inv;
        }
    }
    Ok(out)
}

/// Spreads `upstream` [d] evenly over the unmasked rows of `input_grad`.
pub fn masked_mean_pool_backward<T: Scalar>(
    mask: &[bool],
    upstream: &Tensor<T>,
    input_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (m, d) = (input_grad.rows(), input_grad.cols());
    if mask.len() != m || upstream.len() != d {
        return Err(shape_err(
            "masked_mean_pool_backward",
            format!(
                "mask {} / upstream {} vs grad {:?}",
                mask.len(),
                upstream.len(),
                input_grad.shape()
            ),
        ));
    }
    let count = mask.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(OpError::AllMasked);
    }
    let inv = T::of(1.0 / count as f64);
    for mm in 0..m {
        if !mask[mm] {
            continue;
        }
        let row = input_grad.row_mut(mm);
        for (g, &u) in row.iter_mut().zip(upstream.data().iter()) {
            *g += u * inv;
        }
    }
    Ok(())
}
