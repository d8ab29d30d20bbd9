//! Classification head: affine map to K logits, softmax, and weighted
//! cross-entropy. Log-sum-exp uses max-subtraction so probabilities stay
//! normalized for logit magnitudes up to at least 1e4.

use super::{shape_err, OpError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// logits[k] = b[k] + Σ_j w[k, j] · z[j]; probs = softmax(logits).
///
/// `w` is [K × d], matching the convention logits = W·z + b.
pub fn linear_softmax<T: Scalar>(
    z: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<(Vec<T>, Vec<T>), OpError> {
    let (k_classes, d) = (w.rows(), w.cols());
    if z.len() != d || b.len() != k_classes {
        return Err(shape_err(
            "linear_softmax",
            format!(
                "z {} / b {} incompatible with w {:?}",
                z.len(),
                b.len(),
                w.shape()
            ),
        ));
    }
    let mut logits = Vec::with_capacity(k_classes);
    for k in 0..k_classes {
        let mut acc = b.data()[k];
        let w_row = w.row(k);
        for j in 0..d {
            acc += w_row[j] * z.data()[j];
        }
        logits.push(acc);
    }
    Ok((logits.clone(), softmax(&logits)))
}

/// Softmax with max-subtraction; output sums to 1 for any finite input.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Forward state for the fused loss.
pub struct HeadLoss<T> {
    pub loss: T,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

/// loss = −weight · log probs[target], with probs = softmax(W·z + b).
///
/// The log goes through log-sum-exp directly rather than `probs[target].ln()`
/// so a near-zero probability cannot round to −∞ prematurely.
pub fn linear_softmax_xent<T: Scalar>(
    z: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    target: usize,
    weight: T,
) -> Result<HeadLoss<T>, OpError> {
    let (logits, probs) = linear_softmax(z, w, b)?;
    if target >= logits.len() {
        return Err(shape_err(
            "linear_softmax_xent",
            format!("target {target} out of range for K={}", logits.len()),
        ));
    }
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let lse = max
        + logits
            .iter()
            .map(|&l| (l - max).exp())
            .sum::<T>()
            .ln();
    let loss = weight * (lse - logits[target]);
    Ok(HeadLoss { loss, logits, probs })
}

/// Accumulates gradients of the fused loss into z, w, b gradient tensors.
pub fn linear_softmax_xent_backward<T: Scalar>(
    z: &Tensor<T>,
    w: &Tensor<T>,
    state: &HeadLoss<T>,
    target: usize,
    weight: T,
    z_grad: &mut Tensor<T>,
    w_grad: &mut Tensor<T>,
    b_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    let (k_classes, d) = (w.rows(), w.cols());
    if z_grad.len() != d || w_grad.shape() != w.shape() || b_grad.len() != k_classes {
        return Err(shape_err(
            "linear_softmax_xent_backward",
            "gradient shapes must match parameter shapes".into(),
        ));
    }
    for k in 0..k_classes {
        let indicator = if k == target { T::one() } else { T::zero() };
        let dlogit = weight * (state.probs[k] - indicator);
        b_grad.data_mut()[k] += dlogit;
        let w_row = w.row(k);
        let wg_row = w_grad.row_mut(k);
        for j in 0..d {
            wg_row[j] += dlogit * z.data()[j];
            z_grad.data_mut()[j] += dlogit * w_row[j];
        }
    }
    Ok(())
}
