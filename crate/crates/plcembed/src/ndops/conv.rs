//! Strided 1-D convolution over the embedded byte sequence, valid mode (no
//! implicit padding): output length M = ⌊(L − k)/stride⌋ + 1. The pointwise
//! nonlinearity is applied by the caller.

use super::{shape_err, OpError};
use crate::ndops::linalg::axpy;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// M = ⌊(L − k)/stride⌋ + 1 for valid-mode convolution.
pub fn conv_output_len(l: usize, k: usize, stride: usize) -> usize {
    debug_assert!(k <= l && stride >= 1);
    (l - k) / stride + 1
}

/// Downsamples a byte-level validity mask to conv-output positions: pooled
/// position `m` is valid iff its receptive field `[m·stride, m·stride + k)`
/// contains at least one unmasked byte.
pub fn pooled_mask(mask: &[bool], k: usize, stride: usize) -> Vec<bool> {
    let m = conv_output_len(mask.len(), k, stride);
    (0..m)
        .map(|i| mask[i * stride..i * stride + k].iter().any(|&b| b))
        .collect()
}

fn check_shapes<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<(usize, usize, usize, usize, usize), OpError> {
    let (l, d_in) = (input.rows(), input.cols());
    if kernels.shape().len() != 3 || kernels.shape()[1] != d_in {
        return Err(shape_err(
            op,
            format!(
                "kernels {:?} incompatible with input {:?}",
                kernels.shape(),
                input.shape()
            ),
        ));
    }
    let k = kernels.shape()[0];
    let d_out = kernels.shape()[2];
    if bias.len() != d_out {
        return Err(shape_err(
            op,
            format!("bias length {} != d_out {}", bias.len(), d_out),
        ));
    }
    if k > l {
        return Err(shape_err(op, format!("kernel size {k} exceeds length {l}")));
    }
    if stride == 0 {
        return Err(shape_err(op, "stride must be >= 1".into()));
    }
    Ok((l, d_in, k, d_out, conv_output_len(l, k, stride)))
}

/// Cross-correlation: out[m, o] = bias[o] + Σ_{kk,i} input[m·stride+kk, i] · kernels[kk, i, o]
pub fn conv1d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>, OpError> {
    let (_, d_in, k, d_out, m) = check_shapes("conv1d_forward", input, kernels, bias, stride)?;
    let mut out = Tensor::zeros(vec![m, d_out]);
    for mm in 0..m {
        let out_row = out.row_mut(mm);
        out_row.copy_from_slice(bias.data());
        for kk in 0..k {
            let in_row = input.row(mm * stride + kk);
            for i in 0..d_in {
                let kernel_row = &kernels.data()[kernels.idx3(kk, i, 0)..kernels.idx3(kk, i, d_out)];
                axpy(in_row[i], kernel_row, out_row);
            }
        }
    }
    Ok(out)
}

/// Accumulates gradients for input, kernels, and bias from `upstream` [M × d_out].
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    upstream: &Tensor<T>,
    input_grad: &mut Tensor<T>,
    kernels_grad: &mut Tensor<T>,
    bias_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (_, d_in, k, d_out, m) = check_shapes("conv1d_backward", input, kernels, bias, stride)?;
    if upstream.rows() != m || upstream.cols() != d_out {
        return Err(shape_err(
            "conv1d_backward",
            format!("upstream {:?}, expected [{m} x {d_out}]", upstream.shape()),
        ));
    }
    for mm in 0..m {
        let up_row = upstream.row(mm);
        for (o, &u) in up_row.iter().enumerate() {
            bias_grad.data_mut()[o] += u;
        }
        for kk in 0..k {
            let pos = mm * stride + kk;
            // d input[pos, i] += Σ_o up[o] · kernels[kk, i, o]
            // d kernels[kk, i, o] += input[pos, i] · up[o]
            for i in 0..d_in {
                let kr = kernels.idx3(kk, i, 0)..kernels.idx3(kk, i, d_out);
                let kernel_row = &kernels.data()[kr.clone()];
                let mut acc = T::zero();
                for o in 0..d_out {
                    acc += up_row[o] * kernel_row[o];
                }
                input_grad.row_mut(pos)[i] += acc;

                let x = input.row(pos)[i];
                let kg = &mut kernels_grad.data_mut()[kr];
                axpy(x, up_row, kg);
            }
        }
    }
    Ok(())
}
