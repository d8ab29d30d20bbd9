//! Adaptive-moment gradient descent with decoupled weight decay.

use crate::model::ModelParams;
use crate::scalar::Scalar;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Optimizer state: one pair of moment buffers per parameter tensor, in the
/// parameter set's canonical order. Weight decay is decoupled from the
/// adaptive update, i.e. applied directly to the weights each step.
pub struct AdamW<T> {
    learning_rate: f64,
    weight_decay: f64,
    step_count: u32,
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(learning_rate: f64, weight_decay: f64, params: &ModelParams<T>) -> Self {
        let mut first_moment = Vec::with_capacity(params.tensor_count());
        params.visit(|p| first_moment.push(vec![T::zero(); p.value.len()]));
        let second_moment = first_moment.clone();
        AdamW {
            learning_rate,
            weight_decay,
            step_count: 0,
            first_moment,
            second_moment,
        }
    }

    /// Applies one update from the gradients currently accumulated in
    /// `params`; the caller zeroes gradients between steps.
    pub fn step(&mut self, params: &mut ModelParams<T>) {
        self.step_count += 1;
        let b1 = T::of(BETA1);
        let b2 = T::of(BETA2);
        let one = T::one();
        let eps = T::of(EPS);
        let lr = T::of(self.learning_rate);
        let decay = T::of(self.learning_rate * self.weight_decay);
        let corr1 = T::of(1.0 - BETA1.powi(self.step_count as i32));
        let corr2 = T::of(1.0 - BETA2.powi(self.step_count as i32));

        let (first, second) = (&mut self.first_moment, &mut self.second_moment);
        let mut slot = 0;
        params.visit_mut(|p| {
            let m = &mut first[slot];
            let v = &mut second[slot];
            slot += 1;
            debug_assert_eq!(m.len(), p.value.len(), "optimizer built for other shapes");
            let values = p.value.data_mut();
            for i in 0..values.len() {
                let g = p.grad.data()[i];
                m[i] = b1 * m[i] + (one - b1) * g;
                v[i] = b2 * v[i] + (one - b2) * g * g;
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                values[i] -= lr * m_hat / (v_hat.sqrt() + eps) + decay * values[i];
            }
        });
    }

    pub fn steps_taken(&self) -> usize {
        self.step_count as usize
    }
}
