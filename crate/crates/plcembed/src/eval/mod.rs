//! Evaluation: confusion-matrix metrics and byte-corruption robustness.
//!
//! The metric set follows the reporting convention for imbalanced multiclass
//! problems: accuracy, macro and weighted F1, Cohen's kappa, and the
//! multiclass Matthews correlation coefficient. Robustness evaluation
//! replaces a fraction of each test file's bytes with random values and
//! re-measures the same metrics.

mod corrupt;
mod metrics;
mod robustness;

pub use corrupt::corrupt_bytes;
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricsReport};
pub use robustness::{
    render_robustness_table, robustness_csv, robustness_eval, RobustnessError, RobustnessRow,
    RobustnessTable,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("prediction and truth lists differ in length ({preds} vs {truth})")]
    LengthMismatch { preds: usize, truth: usize },
    #[error("class id {class} at position {index} out of range for {k_classes} classes")]
    ClassOutOfRange {
        index: usize,
        class: usize,
        k_classes: usize,
    },
    #[error("confusion matrix holds no observations")]
    EmptyMatrix,
}
