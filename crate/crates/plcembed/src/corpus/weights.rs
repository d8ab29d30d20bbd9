//! Inverse-frequency class weights for imbalanced training sets.

/// Per-class loss weights plus the classes that had no samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassWeights {
    pub weights: Vec<f64>,
    /// Classes with zero training samples; their weight is 0.
    pub absent_classes: Vec<usize>,
}

impl ClassWeights {
    pub fn weight_of(&self, class: usize) -> f64 {
        self.weights[class]
    }
}

/// Weight per class `k`: `N / (K_present * count_k)`, where `K_present` counts
/// classes that actually occur. Absent classes get weight 0 and are reported.
///
/// With this normalization the count-weighted mean of the weights is exactly 1
/// over the present classes, so weighting rebalances the loss without changing
/// its overall scale.
pub fn class_weights(labels: &[usize], k_classes: usize) -> ClassWeights {
    assert!(k_classes >= 1, "need at least one class");
    let mut counts = vec![0usize; k_classes];
    for &l in labels {
        assert!(l < k_classes, "label {l} out of range for {k_classes} classes");
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    let k_present = counts.iter().filter(|c| **c > 0).count();
    let mut weights = vec![0.0; k_classes];
    let mut absent_classes = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            absent_classes.push(k);
        } else {
            weights[k] = n / (k_present as f64 * c as f64);
        }
    }
    ClassWeights {
        weights,
        absent_classes,
    }
}
