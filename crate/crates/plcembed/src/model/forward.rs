//! The classification pipeline in both directions.
//!
//! Forward: embed → conv + activation → [positional add → encoder layers] →
//! masked mean pool → affine softmax head. Pre-norm encoder blocks:
//! `x + attn(norm(x))`, then `h + ffn(norm(h))`. The pooling mask is the
//! conv-downsampled validity mask, so padding influences nothing downstream.
//!
//! Masked token positions are embedded as the pad row regardless of what the
//! sequence stores there; combined with masked attention and pooling this
//! makes every output bit a function of the valid prefix only.

use super::config::{ModelConfig, Positional, Variant};
use super::params::ModelParams;
use super::ModelError;
use crate::corpus::{EncodedSequence, PAD_TOKEN};
use crate::ndops::activation::{gelu_backward, gelu_forward};
use crate::ndops::attention::{attention_backward, attention_forward, attention_infer, AttentionCache};
use crate::ndops::conv::{conv1d_backward, conv1d_forward, pooled_mask};
use crate::ndops::embedding::{embedding_backward, embedding_forward};
use crate::ndops::ffn::{ffn_backward, ffn_forward, FfnCache};
use crate::ndops::head::{linear_softmax, linear_softmax_xent, linear_softmax_xent_backward, HeadLoss};
use crate::ndops::norm::{layer_norm_backward, layer_norm_forward, LayerNormCache};
use crate::ndops::pool::{masked_mean_pool, masked_mean_pool_backward};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Classifier output for one sequence.
#[derive(Clone, Debug)]
pub struct Prediction<T> {
    pub logits: Vec<T>,
    /// Sums to 1 within 1e-9.
    pub probs: Vec<T>,
    /// argmax of `probs`; ties break to the lowest class id.
    pub predicted_class: usize,
}

fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    let mut best_v = T::neg_infinity();
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Fixed sinusoidal position table, [m × d]: even columns sin, odd columns
/// cos, wavelengths log-spaced from 2π to 10000·2π. Computed in f64 so every
/// scalar type sees the same values.
pub fn positional_encoding<T: Scalar>(m: usize, d: usize) -> Tensor<T> {
    let mut pe = Tensor::zeros(vec![m, d]);
    for pos in 0..m {
        let row = pe.row_mut(pos);
        for (j, slot) in row.iter_mut().enumerate() {
            let pair = (j / 2) as f64;
            let angle = pos as f64 / 10_000f64.powf(2.0 * pair / d as f64);
            *slot = T::of(if j % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    pe
}

/// Shared front of the pipeline: embedding, convolution, activation,
/// positional add, and the downsampled mask.
struct Stem<T> {
    effective_tokens: Vec<u16>,
    embedded: Tensor<T>,
    conv_pre: Tensor<T>,
    /// Encoder input (activation, plus positions when configured).
    x0: Tensor<T>,
    pmask: Vec<bool>,
}

fn stem<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    seq: &EncodedSequence,
) -> Result<Stem<T>, ModelError> {
    if seq.tokens.len() != cfg.l_max {
        return Err(ModelError::SequenceLength {
            expected: cfg.l_max,
            found: seq.tokens.len(),
        });
    }
    // Masked positions embed as the pad row no matter what they store.
    let effective_tokens: Vec<u16> = seq
        .tokens
        .iter()
        .zip(seq.mask.iter())
        .map(|(&t, &valid)| if valid { t } else { PAD_TOKEN })
        .collect();
    let embedded = embedding_forward(&effective_tokens, &params.embedding.value)?;
    let conv_pre = conv1d_forward(
        &embedded,
        &params.conv_kernels.value,
        &params.conv_bias.value,
        cfg.conv.stride,
    )?;
    let mut x0 = gelu_forward(&conv_pre);
    let pmask = pooled_mask(&seq.mask, cfg.conv.k, cfg.conv.stride);
    if cfg.variant == Variant::CnnTransformer && cfg.positional == Positional::Sinusoidal {
        x0.add_assign(&positional_encoding(x0.rows(), x0.cols()));
    }
    Ok(Stem {
        effective_tokens,
        embedded,
        conv_pre,
        x0,
        pmask,
    })
}

/// Inference: probabilities and the argmax class, without gradient caches.
pub fn predict<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    seq: &EncodedSequence,
) -> Result<Prediction<T>, ModelError> {
    let stem = stem(params, cfg, seq)?;
    let mut x = stem.x0;
    for layer in &params.encoder {
        let (ln1_out, _) =
            layer_norm_forward(&x, &layer.ln1_gamma.value, &layer.ln1_beta.value)?;
        let attn_out = attention_infer(&ln1_out, &stem.pmask, cfg.encoder.heads, &layer.attn_refs())?;
        x.add_assign(&attn_out);
        let (ln2_out, _) =
            layer_norm_forward(&x, &layer.ln2_gamma.value, &layer.ln2_beta.value)?;
        let (ffn_out, _) = ffn_forward(
            &ln2_out,
            &layer.w1.value,
            &layer.b1.value,
            &layer.w2.value,
            &layer.b2.value,
        )?;
        x.add_assign(&ffn_out);
    }
    let z = masked_mean_pool(&x, &stem.pmask)?;
    let (logits, probs) = linear_softmax(&z, &params.head_w.value, &params.head_b.value)?;
    let predicted_class = argmax(&probs);
    Ok(Prediction {
        logits,
        probs,
        predicted_class,
    })
}

/// Per-block forward state. Residual sums are not kept: the backward pass
/// only needs the norm caches, the sublayer inputs, and the attention state.
struct LayerTrace<T> {
    ln1: LayerNormCache<T>,
    ln1_out: Tensor<T>,
    attn: AttentionCache<T>,
    ln2: LayerNormCache<T>,
    ln2_out: Tensor<T>,
    ffn: FfnCache<T>,
}

/// Everything [`backward`] needs from one training forward pass.
pub struct ForwardTrace<T> {
    effective_tokens: Vec<u16>,
    embedded: Tensor<T>,
    conv_pre: Tensor<T>,
    pmask: Vec<bool>,
    layers: Vec<LayerTrace<T>>,
    /// Pool input: last encoder output, or the stem output when no encoder.
    final_x: Tensor<T>,
    z: Tensor<T>,
    head: HeadLoss<T>,
    target: usize,
    weight: T,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn loss(&self) -> T {
        self.head.loss
    }

    pub fn probs(&self) -> &[T] {
        &self.head.probs
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.head.probs)
    }
}

/// Training forward pass: weighted cross-entropy against `target`, keeping
/// every intermediate the backward pass needs.
pub fn forward_loss<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    seq: &EncodedSequence,
    target: usize,
    weight: T,
) -> Result<ForwardTrace<T>, ModelError> {
    let stem = stem(params, cfg, seq)?;
    let mut layers = Vec::with_capacity(params.encoder.len());
    let mut x = stem.x0;
    for layer in &params.encoder {
        let (ln1_out, ln1) =
            layer_norm_forward(&x, &layer.ln1_gamma.value, &layer.ln1_beta.value)?;
        let (attn_out, attn) =
            attention_forward(&ln1_out, &stem.pmask, cfg.encoder.heads, &layer.attn_refs())?;
        x.add_assign(&attn_out);
        let (ln2_out, ln2) =
            layer_norm_forward(&x, &layer.ln2_gamma.value, &layer.ln2_beta.value)?;
        let (ffn_out, ffn) = ffn_forward(
            &ln2_out,
            &layer.w1.value,
            &layer.b1.value,
            &layer.w2.value,
            &layer.b2.value,
        )?;
        x.add_assign(&ffn_out);
        layers.push(LayerTrace {
            ln1,
            ln1_out,
            attn,
            ln2,
            ln2_out,
            ffn,
        });
    }
    let z = masked_mean_pool(&x, &stem.pmask)?;
    let head = linear_softmax_xent(&z, &params.head_w.value, &params.head_b.value, target, weight)?;
    Ok(ForwardTrace {
        effective_tokens: stem.effective_tokens,
        embedded: stem.embedded,
        conv_pre: stem.conv_pre,
        pmask: stem.pmask,
        layers,
        final_x: x,
        z,
        head,
        target,
        weight,
    })
}

/// Accumulates the gradient of the traced loss into every parameter's `grad`.
/// Call [`ModelParams::zero_grads`] at the start of each optimizer step;
/// repeated calls within a step sum, which is what batching wants.
pub fn backward<T: Scalar>(
    params: &mut ModelParams<T>,
    cfg: &ModelConfig,
    trace: &ForwardTrace<T>,
) -> Result<(), ModelError> {
    let d_out = trace.final_x.cols();

    // Head.
    let mut dz = Tensor::zeros(vec![d_out]);
    linear_softmax_xent_backward(
        &trace.z,
        &params.head_w.value,
        &trace.head,
        trace.target,
        trace.weight,
        &mut dz,
        &mut params.head_w.grad,
        &mut params.head_b.grad,
    )?;

    // Pooling.
    let mut dx = Tensor::zeros(trace.final_x.shape().to_vec());
    masked_mean_pool_backward(&trace.pmask, &dz, &mut dx)?;

    // Encoder blocks, deepest first. Residual structure:
    //   out = after_attn + ffn(ln2(after_attn)); after_attn = input + attn(ln1(input))
    for (layer, tr) in params.encoder.iter_mut().zip(trace.layers.iter()).rev() {
        let mut d_ln2out = Tensor::zeros(tr.ln2_out.shape().to_vec());
        ffn_backward(
            &tr.ln2_out,
            &layer.w1.value,
            &layer.b1.value,
            &layer.w2.value,
            &layer.b2.value,
            &tr.ffn,
            &dx,
            &mut d_ln2out,
            &mut layer.w1.grad,
            &mut layer.b1.grad,
            &mut layer.w2.grad,
            &mut layer.b2.grad,
        )?;
        // Residual carries dx into after_attn directly; the norm adds its share.
        let mut d_after = dx;
        layer_norm_backward(
            &tr.ln2,
            &layer.ln2_gamma.value,
            &d_ln2out,
            &mut d_after,
            &mut layer.ln2_gamma.grad,
            &mut layer.ln2_beta.grad,
        )?;

        let mut d_ln1out = Tensor::zeros(tr.ln1_out.shape().to_vec());
        {
            let (attn_refs, mut attn_grads) = layer.attn_split();
            attention_backward(
                &tr.ln1_out,
                &trace.pmask,
                cfg.encoder.heads,
                &attn_refs,
                &tr.attn,
                &d_after,
                &mut attn_grads,
                &mut d_ln1out,
            )?;
        }
        let mut d_input = d_after;
        layer_norm_backward(
            &tr.ln1,
            &layer.ln1_gamma.value,
            &d_ln1out,
            &mut d_input,
            &mut layer.ln1_gamma.grad,
            &mut layer.ln1_beta.grad,
        )?;
        dx = d_input;
    }

    // Stem: positional add is identity in the gradient.
    let mut d_conv = Tensor::zeros(trace.conv_pre.shape().to_vec());
    gelu_backward(&trace.conv_pre, &dx, &mut d_conv);
    let mut d_embedded = Tensor::zeros(trace.embedded.shape().to_vec());
    conv1d_backward(
        &trace.embedded,
        &params.conv_kernels.value,
        &params.conv_bias.value,
        cfg.conv.stride,
        &d_conv,
        &mut d_embedded,
        &mut params.conv_kernels.grad,
        &mut params.conv_bias.grad,
    )?;
    embedding_backward(&trace.effective_tokens, &d_embedded, &mut params.embedding.grad)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_params;
    use crate::ndops::gradcheck::compare;
    use crate::rng::substream;
    use rand::Rng;

    fn tiny_cfg(variant: Variant) -> ModelConfig {
        let mut cfg = ModelConfig::sized(variant, 8, 3, 19);
        cfg.l_max = 32;
        cfg.conv.k = 8;
        cfg.conv.stride = 4;
        cfg.encoder.layers = 1;
        cfg.encoder.heads = 2;
        cfg.encoder.ffn_dim = 16;
        cfg
    }

    fn random_seq(l_max: usize, valid: usize, rng: &mut impl Rng) -> EncodedSequence {
        let tokens: Vec<u16> = (0..l_max)
            .map(|i| {
                if i < valid {
                    rng.gen_range(0..256) as u16
                } else {
                    PAD_TOKEN
                }
            })
            .collect();
        let mask: Vec<bool> = (0..l_max).map(|i| i < valid).collect();
        EncodedSequence {
            tokens,
            mask,
            original_length: valid,
        }
    }

    #[test]
    fn probabilities_are_normalized_and_argmax_is_stable() {
        for variant in [Variant::CnnTransformer, Variant::CnnOnly] {
            let cfg = tiny_cfg(variant);
            let params = init_params::<f64>(&cfg).unwrap();
            let mut rng = substream(23, "fwd-test", 0);
            let seq = random_seq(cfg.l_max, 20, &mut rng);
            let a = predict(&params, &cfg, &seq).unwrap();
            let b = predict(&params, &cfg, &seq).unwrap();
            let sum: f64 = a.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert_eq!(a.predicted_class, b.predicted_class);
            assert_eq!(a.probs, b.probs);
            assert!(a.predicted_class < cfg.k_classes);
        }
    }

    #[test]
    fn padded_region_bytes_cannot_change_any_output_bit() {
        for variant in [Variant::CnnTransformer, Variant::CnnOnly] {
            let cfg = tiny_cfg(variant);
            let params = init_params::<f64>(&cfg).unwrap();
            let mut rng = substream(23, "fwd-test", 1);
            let mut seq = random_seq(cfg.l_max, 13, &mut rng);
            let before = predict(&params, &cfg, &seq).unwrap();
            // adversarial garbage in the padded region
            for i in 13..cfg.l_max {
                seq.tokens[i] = rng.gen_range(0..256) as u16;
            }
            let after = predict(&params, &cfg, &seq).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&before.probs), bits(&after.probs));
            assert_eq!(bits(&before.logits), bits(&after.logits));
            assert_eq!(before.predicted_class, after.predicted_class);
        }
    }

    #[test]
    fn training_and_inference_paths_agree() {
        let cfg = tiny_cfg(Variant::CnnTransformer);
        let params = init_params::<f64>(&cfg).unwrap();
        let mut rng = substream(23, "fwd-test", 2);
        let seq = random_seq(cfg.l_max, 27, &mut rng);
        let pred = predict(&params, &cfg, &seq).unwrap();
        let trace = forward_loss(&params, &cfg, &seq, 1, 1.0).unwrap();
        for (a, b) in pred.probs.iter().zip(trace.probs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // loss agrees with −log p[target]
        assert!((trace.loss() + trace.probs()[1].ln()).abs() < 1e-12);
    }

    #[test]
    fn wrong_length_sequence_is_rejected() {
        let cfg = tiny_cfg(Variant::CnnOnly);
        let params = init_params::<f64>(&cfg).unwrap();
        let mut rng = substream(23, "fwd-test", 3);
        let seq = random_seq(cfg.l_max + 1, 10, &mut rng);
        assert!(matches!(
            predict(&params, &cfg, &seq),
            Err(ModelError::SequenceLength { .. })
        ));
    }

    /// Perturbs one element of the `ti`-th parameter tensor.
    fn poke(params: &mut ModelParams<f64>, ti: usize, j: usize, delta: f64) {
        let mut i = 0;
        params.visit_mut(|p| {
            if i == ti {
                p.value.data_mut()[j] += delta;
            }
            i += 1;
        });
    }

    #[test]
    fn end_to_end_gradients_match_central_differences_for_both_variants() {
        for variant in [Variant::CnnTransformer, Variant::CnnOnly] {
            let cfg = tiny_cfg(variant);
            let mut params = init_params::<f64>(&cfg).unwrap();
            let mut rng = substream(23, "fwd-gradcheck", 0);
            let seq = random_seq(cfg.l_max, 22, &mut rng);
            let (target, weight) = (2, 1.3);

            let trace = forward_loss(&params, &cfg, &seq, target, weight).unwrap();
            params.zero_grads();
            backward(&mut params, &cfg, &trace).unwrap();
            let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
            params.visit(|p| analytic.push((p.name.clone(), p.grad.data().to_vec())));

            for (ti, (name, grad)) in analytic.iter().enumerate() {
                let mut numeric = vec![0.0; grad.len()];
                for j in 0..grad.len() {
                    let mut value = 0.0;
                    let mut i = 0;
                    params.visit(|p| {
                        if i == ti {
                            value = p.value.data()[j];
                        }
                        i += 1;
                    });
                    let h = 1e-4 * value.abs().max(1.0);
                    poke(&mut params, ti, j, h);
                    let fp = forward_loss(&params, &cfg, &seq, target, weight).unwrap().loss();
                    poke(&mut params, ti, j, -2.0 * h);
                    let fm = forward_loss(&params, &cfg, &seq, target, weight).unwrap().loss();
                    poke(&mut params, ti, j, h);
                    numeric[j] = (fp - fm) / (2.0 * h);
                }
                let report = compare(grad, &numeric);
                assert!(
                    report.max_rel_error < 1e-4,
                    "{}: rel error {} at {}",
                    name,
                    report.max_rel_error,
                    report.worst_index
                );
            }
        }
    }
}
