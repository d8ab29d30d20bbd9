//! Byte-corruption robustness protocol: evaluate clean, then re-evaluate
//! under increasing corruption fractions and report metric deltas.

use rand::Rng;

use super::corrupt::corrupt_bytes;
use super::metrics::{confusion, metrics, MetricsReport};
use super::EvalError;
use crate::corpus::{encode_sequence, ByteSequence, CorpusError};
use crate::model::{predict, ModelConfig, ModelError, ModelParams};
use crate::rng::substream;
use crate::scalar::Scalar;

/// Metrics for one corruption fraction. `delta_accuracy` is the signed change
/// versus the clean evaluation (negative = degradation).
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub metrics: MetricsReport,
    pub delta_accuracy: f64,
}

/// Clean metrics plus one row per requested fraction, in request order.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessTable {
    pub clean: MetricsReport,
    pub rows: Vec<RobustnessRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum RobustnessError {
    #[error("corruption fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

fn evaluate_bytes<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    items: impl Iterator<Item = Result<ByteSequence, RobustnessError>>,
    truth: &[usize],
) -> Result<MetricsReport, RobustnessError> {
    let mut preds = Vec::with_capacity(truth.len());
    for bytes in items {
        let seq = encode_sequence(&bytes?, cfg.l_max)?;
        preds.push(predict(params, cfg, &seq)?.predicted_class);
    }
    Ok(metrics(&confusion(&preds, truth, cfg.k_classes)?)?)
}

/// Runs the robustness protocol on raw test binaries.
///
/// Each item's corruption derives from its own substream of `seed`, so
/// results are independent of evaluation order, and the same item's
/// corruptions nest across fractions (a 5% corruption touches a subset of
/// the positions its 10% corruption touches).
pub fn robustness_eval<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    test_set: &[(ByteSequence, usize)],
    fractions: &[f64],
    seed: u64,
) -> Result<RobustnessTable, RobustnessError> {
    if test_set.is_empty() {
        return Err(EvalError::EmptyMatrix.into());
    }
    for &f in fractions {
        if !(0.0..=1.0).contains(&f) {
            return Err(RobustnessError::InvalidFraction(f));
        }
    }
    let truth: Vec<usize> = test_set.iter().map(|(_, label)| *label).collect();
    let item_seeds: Vec<u64> = (0..test_set.len())
        .map(|i| substream(seed, "robustness-item", i as u64).gen())
        .collect();

    let clean = evaluate_bytes(
        params,
        cfg,
        test_set.iter().map(|(b, _)| Ok(b.clone())),
        &truth,
    )?;

    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let corrupted = test_set
            .iter()
            .zip(&item_seeds)
            .map(|((b, _), &s)| Ok(corrupt_bytes(b, fraction, s)));
        let m = evaluate_bytes(params, cfg, corrupted, &truth)?;
        rows.push(RobustnessRow {
            fraction,
            metrics: m,
            delta_accuracy: m.accuracy - clean.accuracy,
        });
    }
    Ok(RobustnessTable { clean, rows })
}

/// CSV form: one clean row (fraction 0) followed by the corrupted rows.
/// Values are printed at full precision so identical runs emit identical
/// bytes.
pub fn robustness_csv(table: &RobustnessTable, dataset: &str) -> String {
    let mut out = String::from("dataset,fraction,acc,f1_macro,f1_weighted,kappa,mcc\n");
    let mut push = |fraction: f64, m: &MetricsReport| {
        out.push_str(&format!(
            "{dataset},{fraction},{},{},{},{},{}\n",
            m.accuracy, m.macro_f1, m.weighted_f1, m.kappa, m.mcc
        ));
    };
    push(0.0, &table.clean);
    for row in &table.rows {
        push(row.fraction, &row.metrics);
    }
    out
}

/// Fixed-width human-readable rendering of the same table.
pub fn render_robustness_table(table: &RobustnessTable, dataset: &str) -> String {
    let mut out = format!(
        "{:<24} {:>9} {:>8} {:>9} {:>9} {:>8} {:>8} {:>8}\n",
        "dataset", "fraction", "acc", "f1_macro", "f1_wtd", "kappa", "mcc", "d_acc"
    );
    let mut push = |fraction: f64, m: &MetricsReport, delta: f64| {
        out.push_str(&format!(
            "{:<24} {:>9.4} {:>8.4} {:>9.4} {:>9.4} {:>8.4} {:>8.4} {:>+8.4}\n",
            dataset, fraction, m.accuracy, m.macro_f1, m.weighted_f1, m.kappa, m.mcc, delta
        ));
    };
    push(0.0, &table.clean, 0.0);
    for row in &table.rows {
        push(row.fraction, &row.metrics, row.delta_accuracy);
    }
    out
}
