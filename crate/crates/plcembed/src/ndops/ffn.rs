//! Position-wise feed-forward sublayer: two affine maps around the shared
//! nonlinearity.

use super::{shape_err, OpError};
use crate::ndops::activation::{gelu, gelu_grad};
use crate::ndops::linalg::{matmul_nn, matmul_nt, matmul_tn};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Forward state for the backward pass.
pub struct FfnCache<T> {
    /// x · w1 + b1, before the nonlinearity, [M × f].
    pub pre: Tensor<T>,
    /// gelu(pre), [M × f].
    pub hidden: Tensor<T>,
}

fn validate<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    w1: &Tensor<T>,
    b1: &Tensor<T>,
    w2: &Tensor<T>,
    b2: &Tensor<T>,
) -> Result<(usize, usize, usize), OpError> {
    let (m, d) = (input.rows(), input.cols());
    let f = w1.cols();
    if w1.rows() != d || b1.len() != f || w2.shape() != [f, d] || b2.len() != d {
        return Err(shape_err(
            op,
            format!(
                "input {:?}, w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                input.shape(),
                w1.shape(),
                b1.len(),
                w2.shape(),
                b2.len()
            ),
        ));
    }
    Ok((m, d, f))
}

/// out = gelu(x · w1 + b1) · w2 + b2, applied independently per position.
pub fn ffn_forward<T: Scalar>(
    input: &Tensor<T>,
    w1: &Tensor<T>,
    b1: &Tensor<T>,
    w2: &Tensor<T>,
    b2: &Tensor<T>,
) -> Result<(Tensor<T>, FfnCache<T>), OpError> {
    let (m, d, f) = validate("ffn_forward", input, w1, b1, w2, b2)?;
    let mut pre = Tensor::zeros(vec![m, f]);
    matmul_nn(input.data(), w1.data(), m, d, f, pre.data_mut());
    for i in 0..m {
        let row = pre.row_mut(i);
        for (p, &bb) in row.iter_mut().zip(b1.data().iter()) {
            *p += bb;
        }
    }
    let hidden = Tensor::from_vec(vec![m, f], pre.data().iter().map(|&v| gelu(v)).collect());
    let mut out = Tensor::zeros(vec![m, d]);
    matmul_nn(hidden.data(), w2.data(), m, f, d, out.data_mut());
    for i in 0..m {
        let row = out.row_mut(i);
        for (o, &bb) in row.iter_mut().zip(b2.data().iter()) {
            *o += bb;
        }
    }
    Ok((out, FfnCache { pre, hidden }))
}

/// Accumulates gradients for the input and both affine maps.
#[allow(clippy::too_many_arguments)]
pub fn ffn_backward<T: Scalar>(
    input: &Tensor<T>,
    w1: &Tensor<T>,
    b1: &Tensor<T>,
    w2: &Tensor<T>,
    b2: &Tensor<T>,
    cache: &FfnCache<T>,
    upstream: &Tensor<T>,
    input_grad: &mut Tensor<T>,
    w1_grad: &mut Tensor<T>,
    b1_grad: &mut Tensor<T>,
    w2_grad: &mut Tensor<T>,
    b2_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (m, d, f) = validate("ffn_backward", input, w1, b1, w2, b2)?;
    if upstream.rows() != m || upstream.cols() != d {
        return Err(shape_err(
            "ffn_backward",
            format!("upstream {:?}, expected [{m} x {d}]", upstream.shape()),
        ));
    }
    // Second affine map.
    matmul_tn(cache.hidden.data(), upstream.data(), f, m, d, w2_grad.data_mut());
    for i in 0..m {
        for (g, &u) in b2_grad.data_mut().iter_mut().zip(upstream.row(i).iter()) {
            *g += u;
        }
    }
    let mut d_hidden = Tensor::zeros(vec![m, f]);
    matmul_nt(upstream.data(), w2.data(), m, d, f, d_hidden.data_mut());

    // Nonlinearity.
    let mut d_pre = d_hidden;
    for (dp, &p) in d_pre.data_mut().iter_mut().zip(cache.pre.data().iter()) {
        *dp *= gelu_grad(p);
    }

    // First affine map.
    matmul_tn(input.data(), d_pre.data(), d, m, f, w1_grad.data_mut());
    for i in 0..m {
        for (g, &u) in b1_grad.data_mut().iter_mut().zip(d_pre.row(i).iter()) {
            *g += u;
        }
    }
    matmul_nt(d_pre.data(), w1.data(), m, f, d, input_grad.data_mut());
    Ok(())
}
