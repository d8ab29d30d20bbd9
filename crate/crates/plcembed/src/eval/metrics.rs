//! Confusion matrix and the derived classification metrics.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// K×K counts; `count(i, j)` is the number of items with true class `i`
/// predicted as class `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k_classes: usize) -> Self {
        assert!(k_classes >= 1, "need at least one class");
        ConfusionMatrix {
            k: k_classes,
            counts: vec![0; k_classes * k_classes],
        }
    }

    pub fn k_classes(&self) -> usize {
        self.k
    }

    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn record(&mut self, truth: usize, pred: usize) {
        assert!(truth < self.k && pred < self.k, "class id out of range");
        self.counts[truth * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of items whose true class is `i`.
    pub fn truth_count(&self, i: usize) -> u64 {
        self.counts[i * self.k..(i + 1) * self.k].iter().sum()
    }

    /// Number of items predicted as class `j`.
    pub fn predicted_count(&self, j: usize) -> u64 {
        (0..self.k).map(|i| self.count(i, j)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.count(i, i)).sum()
    }

    /// Builds the matrix from explicit count rows (row = true class).
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let k = rows.len();
        assert!(rows.iter().all(|r| r.len() == k), "rows must form a square");
        ConfusionMatrix {
            k,
            counts: rows.iter().flatten().copied().collect(),
        }
    }
}

/// Counts prediction/truth pairs into a K×K matrix.
pub fn confusion(
    preds: &[usize],
    truth: &[usize],
    k_classes: usize,
) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            truth: truth.len(),
        });
    }
    let mut c = ConfusionMatrix::new(k_classes);
    for (index, (&p, &t)) in preds.iter().zip(truth).enumerate() {
        for class in [p, t] {
            if class >= k_classes {
                return Err(EvalError::ClassOutOfRange {
                    index,
                    class,
                    k_classes,
                });
            }
        }
        c.record(t, p);
    }
    Ok(c)
}

/// The five reported metrics. Accuracy and the F1 scores live in [0, 1];
/// kappa and MCC in [−1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub kappa: f64,
    pub mcc: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Computes all metrics from a confusion matrix.
///
/// Per-class F1 uses precision/recall with 0/0 := 0; macro-F1 averages over
/// all K classes unweighted, weighted-F1 weights by true-class counts.
/// Kappa is (p_o − p_e)/(1 − p_e) with p_e from the marginal products, := 0
/// when p_e = 1. MCC is the covariance-form multiclass generalization, := 0
/// when its denominator vanishes.
pub fn metrics(c: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = c.k_classes();
    let n = total as f64;

    let accuracy = c.trace() as f64 / n;

    let mut macro_f1 = 0.0;
    let mut weighted_f1 = 0.0;
    for i in 0..k {
        let tp = c.count(i, i) as f64;
        let precision = ratio(tp, c.predicted_count(i) as f64);
        let recall = ratio(tp, c.truth_count(i) as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        macro_f1 += f1 / k as f64;
        weighted_f1 += f1 * c.truth_count(i) as f64 / n;
    }

    let p_e: f64 = (0..k)
        .map(|i| c.truth_count(i) as f64 * c.predicted_count(i) as f64)
        .sum::<f64>()
        / (n * n);
    let kappa = if p_e == 1.0 {
        0.0
    } else {
        (accuracy - p_e) / (1.0 - p_e)
    };

    let sum_pt: f64 = (0..k)
        .map(|i| c.predicted_count(i) as f64 * c.truth_count(i) as f64)
        .sum();
    let sum_pp: f64 = (0..k).map(|i| (c.predicted_count(i) as f64).powi(2)).sum();
    let sum_tt: f64 = (0..k).map(|i| (c.truth_count(i) as f64).powi(2)).sum();
    let numerator = c.trace() as f64 * n - sum_pt;
    let denominator = ((n * n - sum_pp) * (n * n - sum_tt)).sqrt();
    let mcc = ratio(numerator, denominator);

    Ok(MetricsReport {
        accuracy,
        macro_f1,
        weighted_f1,
        kappa,
        mcc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    /// Textbook re-derivation with independently written loops, used as the
    /// oracle the production formulas must agree with.
    fn oracle(c: &ConfusionMatrix) -> MetricsReport {
        let k = c.k_classes();
        let mut grid = vec![vec![0.0f64; k]; k];
        for i in 0..k {
            for j in 0..k {
                grid[i][j] = c.count(i, j) as f64;
            }
        }
        let n: f64 = grid.iter().flatten().sum();
        let diag: f64 = (0..k).map(|i| grid[i][i]).sum();
        let row: Vec<f64> = grid.iter().map(|r| r.iter().sum()).collect();
        let col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| grid[i][j]).sum()).collect();

        let mut f1s = vec![0.0; k];
        for i in 0..k {
            let p = if col[i] > 0.0 { grid[i][i] / col[i] } else { 0.0 };
            let r = if row[i] > 0.0 { grid[i][i] / row[i] } else { 0.0 };
            f1s[i] = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        }
        let p_o = diag / n;
        let p_e: f64 = (0..k).map(|i| (row[i] / n) * (col[i] / n)).sum();

        // MCC via the explicit double-sum covariance definition.
        let mut cov_xy = 0.0;
        let mut cov_xx = 0.0;
        let mut cov_yy = 0.0;
        for i in 0..k {
            cov_xy += grid[i][i] * n - row[i] * col[i];
            cov_xx += row[i] * (n - row[i]);
            cov_yy += col[i] * (n - col[i]);
        }
        MetricsReport {
            accuracy: p_o,
            macro_f1: f1s.iter().sum::<f64>() / k as f64,
            weighted_f1: (0..k).map(|i| f1s[i] * row[i] / n).sum(),
            kappa: if p_e == 1.0 { 0.0 } else { (p_o - p_e) / (1.0 - p_e) },
            mcc: if cov_xx == 0.0 || cov_yy == 0.0 {
                0.0
            } else {
                cov_xy / (cov_xx.sqrt() * cov_yy.sqrt())
            },
        }
    }

    fn assert_close(a: &MetricsReport, b: &MetricsReport, tol: f64) {
        for (x, y, name) in [
            (a.accuracy, b.accuracy, "accuracy"),
            (a.macro_f1, b.macro_f1, "macro_f1"),
            (a.weighted_f1, b.weighted_f1, "weighted_f1"),
            (a.kappa, b.kappa, "kappa"),
            (a.mcc, b.mcc, "mcc"),
        ] {
            assert!((x - y).abs() <= tol, "{name}: {x} vs {y}");
        }
    }

    #[test]
    fn counting_matches_simple_cases() {
        let c = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.count(i, j), u64::from(i == j));
            }
        }

        let c = confusion(&[0, 0], &[0, 1], 2).unwrap();
        assert_eq!(
            c,
            ConfusionMatrix::from_rows(&[vec![1, 0], vec![1, 0]])
        );
    }

    #[test]
    fn row_sums_count_the_truth_labels() {
        let mut rng = substream(31, "confusion-random", 0);
        let preds: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..5)).collect();
        let truth: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..5)).collect();
        let c = confusion(&preds, &truth, 5).unwrap();
        assert_eq!(c.total(), 1000);
        for class in 0..5 {
            let expected = truth.iter().filter(|&&t| t == class).count() as u64;
            assert_eq!(c.truth_count(class), expected);
            let expected = preds.iter().filter(|&&p| p == class).count() as u64;
            assert_eq!(c.predicted_count(class), expected);
        }
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        assert_eq!(
            confusion(&[0], &[0, 1], 2).unwrap_err(),
            EvalError::LengthMismatch { preds: 1, truth: 2 }
        );
        assert_eq!(
            confusion(&[0, 3], &[0, 1], 2).unwrap_err(),
            EvalError::ClassOutOfRange {
                index: 1,
                class: 3,
                k_classes: 2
            }
        );
        assert_eq!(
            metrics(&ConfusionMatrix::new(4)).unwrap_err(),
            EvalError::EmptyMatrix
        );
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        for k in [2usize, 4, 22] {
            let rows: Vec<Vec<u64>> = (0..k)
                .map(|i| (0..k).map(|j| if i == j { (i + 3) as u64 } else { 0 }).collect())
                .collect();
            let m = metrics(&ConfusionMatrix::from_rows(&rows)).unwrap();
            assert_close(
                &m,
                &MetricsReport {
                    accuracy: 1.0,
                    macro_f1: 1.0,
                    weighted_f1: 1.0,
                    kappa: 1.0,
                    mcc: 1.0,
                },
                1e-12,
            );
        }
    }

    #[test]
    fn worked_two_class_case() {
        let c = ConfusionMatrix::from_rows(&[vec![20, 5], vec![10, 15]]);
        let m = metrics(&c).unwrap();
        assert!((m.accuracy - 0.70).abs() < 1e-12);
        // chance agreement: (25·30 + 25·20) / 50² = 0.5
        assert!((m.kappa - 0.40).abs() < 1e-12);
    }

    #[test]
    fn constant_predictor_on_balanced_data_scores_zero_agreement() {
        let c = confusion(&[0; 50], &[[0usize; 25], [1; 25]].concat(), 2).unwrap();
        let m = metrics(&c).unwrap();
        assert!((m.accuracy - 0.5).abs() < 1e-12);
        assert_eq!(m.kappa, 0.0);
        assert_eq!(m.mcc, 0.0);
    }

    #[test]
    fn agrees_with_the_direct_formula_oracle_on_random_matrices() {
        let mut rng = substream(57, "metric-oracle", 0);
        let mut checked = 0;
        while checked < 1200 {
            let k = [2, 4, 22][checked % 3];
            let sparse = checked % 5 == 0;
            let rows: Vec<Vec<u64>> = (0..k)
                .map(|_| {
                    (0..k)
                        .map(|_| {
                            if sparse && rng.gen_bool(0.7) {
                                0
                            } else {
                                rng.gen_range(0..40)
                            }
                        })
                        .collect()
                })
                .collect();
            let c = ConfusionMatrix::from_rows(&rows);
            if c.total() == 0 {
                continue;
            }
            let ours = metrics(&c).unwrap();
            assert_close(&ours, &oracle(&c), 1e-10);
            checked += 1;
        }
    }

    #[test]
    fn multiclass_mcc_reduces_to_the_binary_formula() {
        let mut rng = substream(58, "binary-mcc", 0);
        for _ in 0..500 {
            let tp = rng.gen_range(0u64..30);
            let fn_ = rng.gen_range(0u64..30);
            let fp = rng.gen_range(0u64..30);
            let tn = rng.gen_range(0u64..30);
            if tp + fn_ + fp + tn == 0 {
                continue;
            }
            let c = ConfusionMatrix::from_rows(&[vec![tp, fn_], vec![fp, tn]]);
            let m = metrics(&c).unwrap();
            let (tp, fn_, fp, tn) = (tp as f64, fn_ as f64, fp as f64, tn as f64);
            let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            let binary = if den == 0.0 {
                0.0
            } else {
                (tp * tn - fp * fn_) / den
            };
            assert!((m.mcc - binary).abs() < 1e-12, "{m:?} vs binary {binary}");
        }
    }

    #[test]
    fn consistent_label_permutation_leaves_metrics_unchanged() {
        let mut rng = substream(59, "perm-invariance", 0);
        let perm = [2usize, 0, 3, 1];
        for _ in 0..50 {
            let preds: Vec<usize> = (0..200).map(|_| rng.gen_range(0..4)).collect();
            let truth: Vec<usize> = (0..200).map(|_| rng.gen_range(0..4)).collect();
            let base = metrics(&confusion(&preds, &truth, 4).unwrap()).unwrap();
            let preds_p: Vec<usize> = preds.iter().map(|&p| perm[p]).collect();
            let truth_p: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
            let permuted = metrics(&confusion(&preds_p, &truth_p, 4).unwrap()).unwrap();
            assert_close(&base, &permuted, 1e-12);
        }
    }

    proptest! {
        #[test]
        fn metrics_stay_in_range(rows in proptest::collection::vec(
            proptest::collection::vec(0u64..50, 4), 4)
        ) {
            let c = ConfusionMatrix::from_rows(&rows);
            prop_assume!(c.total() > 0);
            let m = metrics(&c).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.accuracy));
            prop_assert!((0.0..=1.0).contains(&m.macro_f1));
            prop_assert!((0.0..=1.0).contains(&m.weighted_f1));
            prop_assert!((-1.0..=1.0).contains(&m.kappa));
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m.mcc));
        }
    }
}
