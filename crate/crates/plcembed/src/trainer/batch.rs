//! Epoch scheduling: shuffling and minority-class oversampling.

use rand::seq::SliceRandom;

use super::ImbalanceMode;
use crate::rng::substream;

/// Builds the iteration order for one epoch as batches of indices into the
/// training set. The shuffle is seeded by `(seed, epoch)`, so every epoch
/// visits the items in a fresh but reproducible order.
///
/// `Oversample` first duplicates minority-class items (cycling through each
/// class's items in order) until every class count is at least half the
/// majority count; `Weights` and `None` schedule each item exactly once.
pub fn make_batches(
    labels: &[usize],
    batch_size: usize,
    seed: u64,
    epoch: usize,
    mode: ImbalanceMode,
) -> Vec<Vec<usize>> {
    assert!(batch_size > 0, "batch_size must be positive");
    if labels.is_empty() {
        return Vec::new();
    }

    let mut schedule: Vec<usize> = (0..labels.len()).collect();
    if mode == ImbalanceMode::Oversample {
        let k = labels.iter().max().unwrap() + 1;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &label) in labels.iter().enumerate() {
            members[label].push(i);
        }
        let majority = members.iter().map(Vec::len).max().unwrap();
        let floor = majority.div_ceil(2);
        for class_members in members.iter().filter(|m| !m.is_empty()) {
            for extra in 0..floor.saturating_sub(class_members.len()) {
                schedule.push(class_members[extra % class_members.len()]);
            }
        }
    }

    let mut rng = substream(seed, "epoch-shuffle", epoch as u64);
    schedule.shuffle(&mut rng);
    schedule.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
