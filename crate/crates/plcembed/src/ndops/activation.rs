//! Pointwise nonlinearity used after the convolution and inside the
//! feed-forward blocks: GELU in its tanh form. One activation everywhere keeps
//! the two model variants comparable.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const CUBIC_COEF: f64 = 0.044_715;

/// gelu(x) = 0.5 · x · (1 + tanh(√(2/π) · (x + 0.044715 x³)))
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::of(SQRT_2_OVER_PI);
    let a = T::of(CUBIC_COEF);
    let half = T::of(0.5);
    let inner = c * (x + a * x * x * x);
    half * x * (T::one() + inner.tanh())
}

/// d gelu / dx at `x`.
pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::of(SQRT_2_OVER_PI);
    let a = T::of(CUBIC_COEF);
    let half = T::of(0.5);
    let three = T::of(3.0);
    let inner = c * (x + a * x * x * x);
    let t = inner.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three * a * x * x)
}

/// Elementwise GELU of a whole tensor.
pub fn gelu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let data = input.data().iter().map(|&v| gelu(v)).collect();
    Tensor::from_vec(input.shape().to_vec(), data)
}

/// Accumulates `upstream ⊙ gelu'(input)` into `input_grad`.
pub fn gelu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>, input_grad: &mut Tensor<T>) {
    debug_assert_eq!(input.shape(), upstream.shape());
    debug_assert_eq!(input.shape(), input_grad.shape());
    for ((g, &x), &up) in input_grad
        .data_mut()
        .iter_mut()
        .zip(input.data().iter())
        .zip(upstream.data().iter())
    {
        *g += up * gelu_grad(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn known_values() {
        assert_eq!(gelu(0.0f64), 0.0);
        // gelu(x) − gelu(−x) = x for the tanh form
        for &x in &[0.3f64, 1.7, 4.0] {
            assert!((gelu(x) - gelu(-x) - x).abs() < 1e-12);
        }
        // large inputs pass through, large negative inputs vanish
        assert!((gelu(10.0f64) - 10.0).abs() < 1e-9);
        assert!(gelu(-10.0f64).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = substream(3, "gelu-test", 0);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-4.0..4.0);
            let h = 1e-5;
            let numeric = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!(
                (gelu_grad(x) - numeric).abs() < 1e-8,
                "x={x}: analytic {} vs numeric {numeric}",
                gelu_grad(x)
            );
        }
    }

    #[test]
    fn tensor_forms_agree_with_scalar_forms() {
        let t = Tensor::from_vec(vec![2, 2], vec![-1.0f64, 0.0, 0.5, 2.0]);
        let out = gelu_forward(&t);
        for (o, x) in out.data().iter().zip(t.data()) {
            assert_eq!(*o, gelu(*x));
        }
        let up = Tensor::filled(vec![2, 2], 2.0);
        let mut grad = Tensor::zeros(vec![2, 2]);
        gelu_backward(&t, &up, &mut grad);
        for (g, x) in grad.data().iter().zip(t.data()) {
            assert!((g - 2.0 * gelu_grad(*x)).abs() < 1e-15);
        }
    }
}
