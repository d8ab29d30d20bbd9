//! The training loop.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::batch::make_batches;
use super::optim::AdamW;
use super::{EpochStats, ImbalanceMode, TrainConfig, TrainError, TrainReport};
use crate::corpus::{class_weights, EncodedSequence};
use crate::model::{
    backward, forward_loss, init_params, predict, save_checkpoint, ModelConfig, ModelParams,
};
use crate::scalar::Scalar;

/// File name of the best-epoch checkpoint inside the output directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
/// File name of the per-epoch CSV log inside the output directory.
pub const TRAINING_LOG_FILE: &str = "training_log.csv";

/// Result of a completed run: the best-epoch weights, the exact config they
/// were trained under, and the per-epoch record.
pub struct TrainOutcome<T> {
    pub params: ModelParams<T>,
    pub cfg: ModelConfig,
    pub report: TrainReport,
}

fn best_of(stats: &[EpochStats]) -> (usize, f64) {
    let mut best_epoch = 0;
    let mut best = 0.0;
    for s in stats {
        if best_epoch == 0 || s.val_accuracy > best {
            best = s.val_accuracy;
            best_epoch = s.epoch;
        }
    }
    (best_epoch, best)
}

fn check_labels(set: &[(EncodedSequence, usize)], k: usize) -> Result<(), TrainError> {
    match set.iter().map(|(_, label)| *label).max() {
        Some(label) if label >= k => Err(TrainError::LabelOutOfRange { label, k_classes: k }),
        _ => Ok(()),
    }
}

/// Trains a freshly initialized model and returns the weights of the epoch
/// with the best validation accuracy.
///
/// The model seed is replaced by `tcfg.seed`, so a single seed controls
/// initialization, epoch shuffles, and oversampling; two runs with the same
/// inputs and config produce identical reports and checkpoint bytes.
///
/// With an output directory the run also writes `training_log.csv`
/// (`epoch,train_loss,val_acc` per epoch) and the best-epoch checkpoint.
pub fn train<T: Scalar>(
    model_cfg: &ModelConfig,
    train_set: &[(EncodedSequence, usize)],
    val_set: &[(EncodedSequence, usize)],
    class_names: &[String],
    tcfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome<T>, TrainError> {
    tcfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyDataset { which: "training" });
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptyDataset {
            which: "validation",
        });
    }
    let k = model_cfg.k_classes;
    check_labels(train_set, k)?;
    check_labels(val_set, k)?;
    if class_names.len() != k {
        return Err(TrainError::InvalidConfig(format!(
            "{} class names for {k} classes",
            class_names.len()
        )));
    }

    let mut cfg = model_cfg.clone();
    cfg.seed = tcfg.seed;
    let mut params = init_params::<T>(&cfg)?;
    let mut optimizer = AdamW::new(tcfg.learning_rate, tcfg.weight_decay, &params);

    let labels: Vec<usize> = train_set.iter().map(|(_, label)| *label).collect();
    let item_weights: Vec<f64> = match tcfg.imbalance_mode {
        ImbalanceMode::Weights => {
            let cw = class_weights(&labels, k);
            labels.iter().map(|&l| cw.weights[l]).collect()
        }
        _ => vec![1.0; labels.len()],
    };

    let mut log = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| TrainError::Log {
                path: dir.to_path_buf(),
                source,
            })?;
            let path = dir.join(TRAINING_LOG_FILE);
            let mut file = fs::File::create(&path).map_err(|source| TrainError::Log {
                path: path.clone(),
                source,
            })?;
            writeln!(file, "epoch,train_loss,val_acc").map_err(|source| TrainError::Log {
                path: path.clone(),
                source,
            })?;
            Some((file, path))
        }
        None => None,
    };

    let mut stats: Vec<EpochStats> = Vec::new();
    let mut best_params: Option<ModelParams<T>> = None;
    let mut since_improvement = 0;
    let mut stopped_early = false;

    for epoch in 1..=tcfg.epochs {
        let batches = make_batches(
            &labels,
            tcfg.batch_size,
            tcfg.seed,
            epoch,
            tcfg.imbalance_mode,
        );
        let mut weighted_loss_sum = 0.0;
        let mut scheduled = 0usize;
        for batch in &batches {
            params.zero_grads();
            // Per-item loss weight w_i / B makes the accumulated gradient the
            // gradient of the batch's weighted mean loss.
            let batch_scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (seq, label) = &train_set[idx];
                let weight = T::of(item_weights[idx] * batch_scale);
                let trace = forward_loss(&params, &cfg, seq, *label, weight)?;
                batch_loss += trace.loss().as_f64();
                backward(&mut params, &cfg, &trace)?;
            }
            if !batch_loss.is_finite() {
                let (best_epoch, best_val_accuracy) = best_of(&stats);
                return Err(TrainError::DivergedLoss {
                    epoch,
                    report: Box::new(TrainReport {
                        epochs: stats,
                        best_epoch,
                        best_val_accuracy,
                        stopped_early: false,
                        optimizer_steps: optimizer.steps_taken(),
                        checkpoint: None,
                    }),
                });
            }
            optimizer.step(&mut params);
            weighted_loss_sum += batch_loss * batch.len() as f64;
            scheduled += batch.len();
        }
        let train_loss = weighted_loss_sum / scheduled as f64;

        let mut correct = 0usize;
        for (seq, label) in val_set {
            if predict(&params, &cfg, seq)?.predicted_class == *label {
                correct += 1;
            }
        }
        let val_accuracy = correct as f64 / val_set.len() as f64;

        stats.push(EpochStats {
            epoch,
            train_loss,
            val_accuracy,
        });
        if let Some((file, path)) = &mut log {
            writeln!(file, "{epoch},{train_loss},{val_accuracy}").map_err(|source| {
                TrainError::Log {
                    path: path.clone(),
                    source,
                }
            })?;
        }

        let improved = best_params.is_none() || val_accuracy > best_of(&stats[..stats.len() - 1]).1;
        if improved {
            best_params = Some(params.clone());
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= tcfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, best_val_accuracy) = best_of(&stats);
    let best = best_params.expect("at least one epoch ran");
    let checkpoint = match out_dir {
        Some(dir) => {
            let path = dir.join(CHECKPOINT_FILE);
            save_checkpoint(&best, &cfg, class_names, &path)?;
            Some(path)
        }
        None => None,
    };

    Ok(TrainOutcome {
        params: best,
        cfg,
        report: TrainReport {
            epochs: stats,
            best_epoch,
            best_val_accuracy,
            stopped_early,
            optimizer_steps: optimizer.steps_taken(),
            checkpoint,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{encode_sequence, ByteSequence};
    use crate::model::{load_checkpoint, Variant};
    use crate::rng::substream;
    use rand::Rng;

    const L_MAX: usize = 16;

    fn toy_cfg(variant: Variant) -> ModelConfig {
        let mut cfg = ModelConfig::sized(variant, 8, 2, 0);
        cfg.l_max = L_MAX;
        cfg.conv.k = 4;
        cfg.conv.stride = 2;
        cfg.encoder.layers = 1;
        cfg.encoder.heads = 2;
        cfg.encoder.ffn_dim = 16;
        cfg
    }

    /// Two classes distinguished by a 4-byte magic prefix; tails are random,
    /// so only the prefix is informative. Linearly separable by construction.
    fn toy_item(class: usize, i: usize) -> (EncodedSequence, usize) {
        let mut bytes = vec![if class == 0 { 0xAA } else { 0x55 }; 4];
        let mut rng = substream(77, "toy-tail", (class * 1000 + i) as u64);
        bytes.extend((0..12).map(|_| rng.gen::<u8>()));
        let seq = encode_sequence(&ByteSequence::from_bytes(bytes, "toy"), L_MAX).unwrap();
        (seq, class)
    }

    fn toy_sets(per_class: usize, val_per_class: usize) -> (Vec<(EncodedSequence, usize)>, Vec<(EncodedSequence, usize)>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for class in 0..2 {
            for i in 0..per_class {
                train.push(toy_item(class, i));
            }
            for i in 0..val_per_class {
                val.push(toy_item(class, per_class + i));
            }
        }
        (train, val)
    }

    fn names2() -> Vec<String> {
        vec!["zero".into(), "one".into()]
    }

    #[test]
    fn separable_toy_task_is_learned() {
        let (train_set, val_set) = toy_sets(8, 2);
        let tcfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 3e-3,
            patience: 30,
            seed: 1,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&toy_cfg(Variant::CnnTransformer), &train_set, &val_set, &names2(), &tcfg, None)
            .unwrap();
        let losses: Vec<f64> = out.report.epochs.iter().map(|e| e.train_loss).collect();
        assert!(
            losses[0] > losses[1] && losses[1] > losses[2],
            "first three epochs should strictly decrease: {losses:?}"
        );
        assert_eq!(out.report.best_val_accuracy, 1.0);

        // The reported best epoch really is the argmax over epochs run.
        let max = out
            .report
            .epochs
            .iter()
            .map(|e| e.val_accuracy)
            .fold(0.0, f64::max);
        let at_best = out.report.epochs[out.report.best_epoch - 1].val_accuracy;
        assert_eq!(at_best, max);
    }

    #[test]
    fn frozen_model_stops_after_patience_epochs() {
        let (train_set, _) = toy_sets(4, 0);
        let val_set = vec![toy_item(0, 99)];
        // A learning rate this small leaves predictions unchanged, so
        // validation accuracy can never improve after the first epoch.
        let tcfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 1e-12,
            weight_decay: 0.0,
            patience: 1,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&toy_cfg(Variant::CnnOnly), &train_set, &val_set, &names2(), &tcfg, None)
            .unwrap();
        assert!(out.report.stopped_early);
        assert_eq!(out.report.epochs.len(), 2);
        assert_eq!(out.report.best_epoch, 1);
    }

    #[test]
    fn same_seed_reproduces_report_and_checkpoint_bytes() {
        let (train_set, val_set) = toy_sets(4, 1);
        let tcfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            patience: 3,
            seed: 42,
            ..TrainConfig::default()
        };
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let cfg = toy_cfg(Variant::CnnTransformer);
        let a = train::<f32>(&cfg, &train_set, &val_set, &names2(), &tcfg, Some(dirs[0].path()))
            .unwrap();
        let b = train::<f32>(&cfg, &train_set, &val_set, &names2(), &tcfg, Some(dirs[1].path()))
            .unwrap();
        assert_eq!(a.report.epochs, b.report.epochs);
        assert_eq!(a.report.best_epoch, b.report.best_epoch);

        let bytes_a = fs::read(dirs[0].path().join(CHECKPOINT_FILE)).unwrap();
        let bytes_b = fs::read(dirs[1].path().join(CHECKPOINT_FILE)).unwrap();
        assert_eq!(bytes_a, bytes_b);

        let other = TrainConfig { seed: 43, ..tcfg };
        let dir_c = tempfile::tempdir().unwrap();
        train::<f32>(&cfg, &train_set, &val_set, &names2(), &other, Some(dir_c.path())).unwrap();
        assert_ne!(bytes_a, fs::read(dir_c.path().join(CHECKPOINT_FILE)).unwrap());
    }

    #[test]
    fn log_and_checkpoint_land_in_the_output_directory() {
        let (train_set, val_set) = toy_sets(4, 1);
        let tcfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            patience: 2,
            seed: 7,
            ..TrainConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_cfg(Variant::CnnOnly);
        let out =
            train::<f64>(&cfg, &train_set, &val_set, &names2(), &tcfg, Some(dir.path())).unwrap();

        let log = fs::read_to_string(dir.path().join(TRAINING_LOG_FILE)).unwrap();
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(lines[0], "epoch,train_loss,val_acc");
        assert_eq!(lines.len(), 1 + out.report.epochs.len());
        assert!(lines[1].starts_with("1,"));

        let path = out.report.checkpoint.clone().unwrap();
        let (loaded, meta) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(meta.class_names, names2());
        assert_eq!(meta.model.seed, tcfg.seed, "checkpoint records the run seed");
        let mut ours = Vec::new();
        out.params.visit(|p| ours.extend(p.value.data().iter().map(|v| v.to_bits())));
        let mut theirs = Vec::new();
        loaded.visit(|p| theirs.extend(p.value.data().iter().map(|v| v.to_bits())));
        assert_eq!(ours, theirs);
    }

    #[test]
    fn optimizer_steps_match_the_batch_count_formula() {
        let (mut train_set, val_set) = toy_sets(5, 1);
        train_set.truncate(10); // 10 items, batch 4 -> 3 batches per epoch
        for mode in [ImbalanceMode::None, ImbalanceMode::Weights] {
            let tcfg = TrainConfig {
                epochs: 3,
                batch_size: 4,
                patience: 3,
                imbalance_mode: mode,
                seed: 11,
                ..TrainConfig::default()
            };
            let out = train::<f64>(
                &toy_cfg(Variant::CnnOnly),
                &train_set,
                &val_set,
                &names2(),
                &tcfg,
                None,
            )
            .unwrap();
            let epochs_run = out.report.epochs.len();
            assert_eq!(out.report.optimizer_steps, 10usize.div_ceil(4) * epochs_run);
        }
    }

    #[test]
    fn single_class_weighting_equals_unweighted_training() {
        // With one class present its weight is exactly 1, so `weights` mode
        // must match `none` bit for bit.
        let train_set: Vec<_> = (0..6).map(|i| toy_item(0, i)).collect();
        let val_set = vec![toy_item(0, 50)];
        let base = TrainConfig {
            epochs: 2,
            batch_size: 3,
            patience: 2,
            seed: 9,
            imbalance_mode: ImbalanceMode::None,
            ..TrainConfig::default()
        };
        let weighted = TrainConfig {
            imbalance_mode: ImbalanceMode::Weights,
            ..base.clone()
        };
        let cfg = toy_cfg(Variant::CnnOnly);
        let a = train::<f64>(&cfg, &train_set, &val_set, &names2(), &base, None).unwrap();
        let b = train::<f64>(&cfg, &train_set, &val_set, &names2(), &weighted, None).unwrap();
        assert_eq!(a.report.epochs, b.report.epochs);
    }

    #[test]
    fn class_weights_change_the_loss_on_imbalanced_data() {
        let mut train_set: Vec<_> = (0..12).map(|i| toy_item(0, i)).collect();
        train_set.extend((0..4).map(|i| toy_item(1, i)));
        let val_set = vec![toy_item(0, 50), toy_item(1, 50)];
        let base = TrainConfig {
            epochs: 1,
            batch_size: 16,
            patience: 1,
            seed: 2,
            imbalance_mode: ImbalanceMode::None,
            ..TrainConfig::default()
        };
        let weighted = TrainConfig {
            imbalance_mode: ImbalanceMode::Weights,
            ..base.clone()
        };
        let cfg = toy_cfg(Variant::CnnOnly);
        let a = train::<f64>(&cfg, &train_set, &val_set, &names2(), &base, None).unwrap();
        let b = train::<f64>(&cfg, &train_set, &val_set, &names2(), &weighted, None).unwrap();
        assert_ne!(a.report.epochs[0].train_loss, b.report.epochs[0].train_loss);
    }

    #[test]
    fn empty_sets_and_bad_labels_are_rejected() {
        let (train_set, val_set) = toy_sets(2, 1);
        let cfg = toy_cfg(Variant::CnnOnly);
        let tcfg = TrainConfig::default();
        assert!(matches!(
            train::<f64>(&cfg, &[], &val_set, &names2(), &tcfg, None).map(|_| ()),
            Err(TrainError::EmptyDataset { which: "training" })
        ));
        assert!(matches!(
            train::<f64>(&cfg, &train_set, &[], &names2(), &tcfg, None).map(|_| ()),
            Err(TrainError::EmptyDataset {
                which: "validation"
            })
        ));
        let mut bad = train_set.clone();
        bad[0].1 = 2;
        assert!(matches!(
            train::<f64>(&cfg, &bad, &val_set, &names2(), &tcfg, None).map(|_| ()),
            Err(TrainError::LabelOutOfRange {
                label: 2,
                k_classes: 2
            })
        ));
    }

    #[test]
    fn exploding_loss_aborts_with_a_partial_report() {
        let (train_set, val_set) = toy_sets(2, 1);
        let tcfg = TrainConfig {
            epochs: 30,
            batch_size: 2,
            learning_rate: 1e30,
            patience: 30,
            seed: 5,
            ..TrainConfig::default()
        };
        let err = train::<f32>(
            &toy_cfg(Variant::CnnOnly),
            &train_set,
            &val_set,
            &names2(),
            &tcfg,
            None,
        )
        .map(|_| ())
        .unwrap_err();
        match err {
            TrainError::DivergedLoss { epoch, report } => {
                assert!(epoch <= 3, "explosion should be immediate, got epoch {epoch}");
                assert!(report.epochs.len() < 30);
                assert!(report.checkpoint.is_none());
            }
            other => panic!("expected DivergedLoss, got {other:?}"),
        }
    }
}
