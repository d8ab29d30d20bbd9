//! Masked multi-head self-attention.
//!
//! Masked key positions are skipped outright — never scored, never summed —
//! so their stored values cannot leak into any output even at the bit level,
//! and their recorded attention weight is exactly zero.

use super::{shape_err, OpError};
use crate::ndops::linalg::{axpy, dot, matmul_nn, matmul_nt, matmul_tn};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Borrowed projection parameters. All weights are [d × d] in the row
/// convention `out = x · W + b`; all biases are [d].
pub struct AttentionParamsRef<'a, T> {
    pub wq: &'a Tensor<T>,
    pub bq: &'a Tensor<T>,
    pub wk: &'a Tensor<T>,
    pub bk: &'a Tensor<T>,
    pub wv: &'a Tensor<T>,
    pub bv: &'a Tensor<T>,
    pub wo: &'a Tensor<T>,
    pub bo: &'a Tensor<T>,
}

/// Mutable gradient accumulators matching [`AttentionParamsRef`].
pub struct AttentionGradsMut<'a, T> {
    pub wq: &'a mut Tensor<T>,
    pub bq: &'a mut Tensor<T>,
    pub wk: &'a mut Tensor<T>,
    pub bk: &'a mut Tensor<T>,
    pub wv: &'a mut Tensor<T>,
    pub bv: &'a mut Tensor<T>,
    pub wo: &'a mut Tensor<T>,
    pub bo: &'a mut Tensor<T>,
}

/// Forward state for the backward pass.
pub struct AttentionCache<T> {
    pub q: Tensor<T>,
    pub k: Tensor<T>,
    pub v: Tensor<T>,
    /// Attention weights, flat [heads × M × M]; exactly 0 at masked keys.
    pub attn: Vec<T>,
    /// Concatenated per-head context vectors, before the output projection.
    pub context: Tensor<T>,
}

impl<T: Copy> AttentionCache<T> {
    pub fn weight(&self, head: usize, query: usize, key: usize, m: usize) -> T {
        self.attn[head * m * m + query * m + key]
    }
}

fn validate<T: Scalar>(
    input: &Tensor<T>,
    mask: &[bool],
    heads: usize,
    params: &AttentionParamsRef<'_, T>,
) -> Result<(usize, usize, usize), OpError> {
    let (m, d) = (input.rows(), input.cols());
    if heads == 0 || d % heads != 0 {
        return Err(shape_err(
            "multi_head_attention",
            format!("feature dim {d} not divisible by heads {heads}"),
        ));
    }
    if mask.len() != m {
        return Err(shape_err(
            "multi_head_attention",
            format!("mask length {} != sequence length {m}", mask.len()),
        ));
    }
    for (name, w) in [
        ("wq", params.wq),
        ("wk", params.wk),
        ("wv", params.wv),
        ("wo", params.wo),
    ] {
        if w.shape() != [d, d] {
            return Err(shape_err(
                "multi_head_attention",
                format!("{name} shape {:?}, expected [{d} x {d}]", w.shape()),
            ));
        }
    }
    for (name, b) in [
        ("bq", params.bq),
        ("bk", params.bk),
        ("bv", params.bv),
        ("bo", params.bo),
    ] {
        if b.len() != d {
            return Err(shape_err(
                "multi_head_attention",
                format!("{name} length {}, expected {d}", b.len()),
            ));
        }
    }
    if !mask.iter().any(|&b| b) {
        return Err(OpError::AllMasked);
    }
    Ok((m, d, d / heads))
}

/// out = x · w + b, rows of b broadcast.
fn project<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, d) = (x.rows(), x.cols());
    let mut out = Tensor::zeros(vec![m, w.cols()]);
    matmul_nn(x.data(), w.data(), m, d, w.cols(), out.data_mut());
    for i in 0..m {
        let row = out.row_mut(i);
        for (o, &bb) in row.iter_mut().zip(b.data().iter()) {
            *o += bb;
        }
    }
    out
}

/// Accumulates dW += xᵀ·d_out, db += column sums of d_out, dx += d_out·wᵀ.
fn project_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    d_out: &Tensor<T>,
    w_grad: &mut Tensor<T>,
    b_grad: &mut Tensor<T>,
    x_grad: &mut Tensor<T>,
) {
    let (m, d_in) = (x.rows(), x.cols());
    let d_o = w.cols();
    matmul_tn(x.data(), d_out.data(), d_in, m, d_o, w_grad.data_mut());
    for i in 0..m {
        let row = d_out.row(i);
        for (g, &u) in b_grad.data_mut().iter_mut().zip(row.iter()) {
            *g += u;
        }
    }
    matmul_nt(d_out.data(), w.data(), m, d_o, d_in, x_grad.data_mut());
}

/// Scaled dot-product attention per head over unmasked keys, then the output
/// projection. Rows of each head's weight matrix sum to 1 over unmasked keys.
pub fn attention_forward<T: Scalar>(
    input: &Tensor<T>,
    mask: &[bool],
    heads: usize,
    params: &AttentionParamsRef<'_, T>,
) -> Result<(Tensor<T>, AttentionCache<T>), OpError> {
    let (m, d, d_h) = validate(input, mask, heads, params)?;
    let scale = T::of(1.0 / (d_h as f64).sqrt());

    let q = project(input, params.wq, params.bq);
    let k = project(input, params.wk, params.bk);
    let v = project(input, params.wv, params.bv);

    let mut attn = vec![T::zero(); heads * m * m];
    let mut context = Tensor::zeros(vec![m, d]);
    let mut scores = vec![T::zero(); m];

    for h in 0..heads {
        let cols = h * d_h..(h + 1) * d_h;
        for i in 0..m {
            let q_i = &q.row(i)[cols.clone()];
            let mut max = T::neg_infinity();
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let s = dot(q_i, &k.row(j)[cols.clone()]) * scale;
                scores[j] = s;
                if s > max {
                    max = s;
                }
            }
            let mut total = T::zero();
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let e = (scores[j] - max).exp();
                scores[j] = e;
                total += e;
            }
            let attn_row = &mut attn[h * m * m + i * m..h * m * m + i * m + m];
            let ctx_i = &mut context.row_mut(i)[cols.clone()];
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let a = scores[j] / total;
                attn_row[j] = a;
                axpy(a, &v.row(j)[cols.clone()], ctx_i);
            }
        }
    }

    let output = project(&context, params.wo, params.bo);
    Ok((
        output,
        AttentionCache {
            q,
            k,
            v,
            attn,
            context,
        },
    ))
}

/// Forward pass without the weight cache: per-query weights live only in a
/// scratch row. Output is bit-identical to [`attention_forward`]; use this for
/// inference, where the [M × M] weight matrices would be dead weight.
pub fn attention_infer<T: Scalar>(
    input: &Tensor<T>,
    mask: &[bool],
    heads: usize,
    params: &AttentionParamsRef<'_, T>,
) -> Result<Tensor<T>, OpError> {
    let (m, d, d_h) = validate(input, mask, heads, params)?;
    let scale = T::of(1.0 / (d_h as f64).sqrt());

    let q = project(input, params.wq, params.bq);
    let k = project(input, params.wk, params.bk);
    let v = project(input, params.wv, params.bv);

    let mut context = Tensor::zeros(vec![m, d]);
    let mut scores = vec![T::zero(); m];
    for h in 0..heads {
        let cols = h * d_h..(h + 1) * d_h;
        for i in 0..m {
            let q_i = &q.row(i)[cols.clone()];
            let mut max = T::neg_infinity();
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let s = dot(q_i, &k.row(j)[cols.clone()]) * scale;
                scores[j] = s;
                if s > max {
                    max = s;
                }
            }
            let mut total = T::zero();
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let e = (scores[j] - max).exp();
                scores[j] = e;
                total += e;
            }
            let ctx_i = &mut context.row_mut(i)[cols.clone()];
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                axpy(scores[j] / total, &v.row(j)[cols.clone()], ctx_i);
            }
        }
    }
    Ok(project(&context, params.wo, params.bo))
}

/// Accumulates gradients for the input and all eight projection parameters.
#[allow(clippy::too_many_arguments)]
pub fn attention_backward<T: Scalar>(
    input: &Tensor<T>,
    mask: &[bool],
    heads: usize,
    params: &AttentionParamsRef<'_, T>,
    cache: &AttentionCache<T>,
    upstream: &Tensor<T>,
    grads: &mut AttentionGradsMut<'_, T>,
    input_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (m, d, d_h) = validate(input, mask, heads, params)?;
    if upstream.rows() != m || upstream.cols() != d {
        return Err(shape_err(
            "attention_backward",
            format!("upstream {:?}, expected [{m} x {d}]", upstream.shape()),
        ));
    }
    let scale = T::of(1.0 / (d_h as f64).sqrt());

    // Output projection: context → output.
    let mut d_context = Tensor::zeros(vec![m, d]);
    project_backward(
        &cache.context,
        params.wo,
        upstream,
        grads.wo,
        grads.bo,
        &mut d_context,
    );

    let mut dq = Tensor::zeros(vec![m, d]);
    let mut dk = Tensor::zeros(vec![m, d]);
    let mut dv = Tensor::zeros(vec![m, d]);
    let mut d_attn = vec![T::zero(); m];

    for h in 0..heads {
        let cols = h * d_h..(h + 1) * d_h;
        for i in 0..m {
            let d_ctx_i = &d_context.row(i)[cols.clone()];
            let attn_row = &cache.attn[h * m * m + i * m..h * m * m + i * m + m];

            // d_attn[j] = d_ctx_i · v_j; dv_j += a[i,j] · d_ctx_i
            let mut weighted_sum = T::zero();
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let da = dot(d_ctx_i, &cache.v.row(j)[cols.clone()]);
                d_attn[j] = da;
                weighted_sum += attn_row[j] * da;
                axpy(attn_row[j], d_ctx_i, &mut dv.row_mut(j)[cols.clone()]);
            }
            // softmax backward, then chain into q and k
            let q_i: Vec<T> = cache.q.row(i)[cols.clone()].to_vec();
            let dq_acc = &mut dq.row_mut(i)[cols.clone()];
            for j in 0..m {
                if !mask[j] {
                    continue;
                }
                let ds = attn_row[j] * (d_attn[j] - weighted_sum) * scale;
                axpy(ds, &cache.k.row(j)[cols.clone()], dq_acc);
                axpy(ds, &q_i, &mut dk.row_mut(j)[cols.clone()]);
            }
        }
    }

    project_backward(input, params.wq, &dq, grads.wq, grads.bq, input_grad);
    project_backward(input, params.wk, &dk, grads.wk, grads.bk, input_grad);
    project_backward(input, params.wv, &dv, grads.wv, grads.bv, input_grad);
    Ok(())
}
