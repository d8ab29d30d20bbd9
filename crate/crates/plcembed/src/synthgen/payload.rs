//! Category payload synthesis.
//!
//! Every functionality category owns a bank of short byte motifs; a payload
//! is a concatenation of motifs drawn from its category's bank, mixed with
//! motifs from one bank shared across categories. The shared fraction is the
//! `payload_overlap` knob: at 0 categories have disjoint content, and as it
//! approaches 1 their byte statistics converge.
//!
//! Banded mode replaces the per-category motifs with placement-coded
//! fingerprints: every category draws from one pool of band motifs common to
//! all categories, but splits it into an early half and a late half of the
//! payload in a category-specific way. Each motif occurs at the same overall
//! rate for every category, and coded motifs sit on isolated sites spaced so
//! far apart that no short window ever covers two of them — so local content
//! statistics carry no category signal at all, and a classifier must relate
//! motif identity to its position in the file.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::substream;

const MOTIFS_PER_BANK: usize = 8;
const SHARED_MOTIFS: usize = 16;
const MOTIF_LEN: usize = 6;
/// Size of the pool placed by banded fingerprints; half sits early, half late.
const BAND_MOTIFS: usize = 8;
/// Banded motifs occupy every SITE_SPACING-th slot, 24 bytes apart, so two
/// coded slots can never fall inside one short window (a window reaching any
/// byte of one coded slot extends at most 21 bytes from its start).
const SITE_SPACING: usize = 4;

/// Fixed motif vocabulary for one corpus: one bank per category plus the
/// shared bank, and the pool and per-category band split used by banded
/// fingerprints. Derived from the corpus seed alone, so every program of a
/// category sees the same vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct MotifBanks {
    category: Vec<Vec<Vec<u8>>>,
    shared: Vec<Vec<u8>>,
    band_pool: Vec<Vec<u8>>,
    /// `banding[c][i]` is the band (0 = early, 1 = late) where category `c`
    /// places band motif `i`. Exactly half the pool goes to each band, and no
    /// two categories share a split: the split IS the category.
    banding: Vec<Vec<usize>>,
}

impl MotifBanks {
    pub fn derive(seed: u64, categories: usize) -> Self {
        let draw_bank = |rng: &mut ChaCha8Rng, count: usize| -> Vec<Vec<u8>> {
            (0..count)
                .map(|_| (0..MOTIF_LEN).map(|_| rng.gen()).collect())
                .collect()
        };
        let category = (0..categories)
            .map(|c| draw_bank(&mut substream(seed, "motif-bank", c as u64), MOTIFS_PER_BANK))
            .collect();
        let shared = draw_bank(&mut substream(seed, "motif-bank-shared", 0), SHARED_MOTIFS);
        let band_pool = draw_bank(&mut substream(seed, "motif-band-pool", 0), BAND_MOTIFS);

        // Balanced band splits, pairwise distinct. Splits that differ in many
        // motifs are easier to tell apart, so each category first tries for a
        // split at least four motifs away from all previous ones and only
        // then settles for plain distinctness.
        let mut banding: Vec<Vec<usize>> = Vec::with_capacity(categories);
        for c in 0..categories {
            let mut rng = substream(seed, "motif-banding", c as u64);
            let mut order: Vec<usize> = (0..BAND_MOTIFS).collect();
            let mut best: Option<Vec<usize>> = None;
            for attempt in 0..512 {
                order.shuffle(&mut rng);
                let mut split = vec![1usize; BAND_MOTIFS];
                for &m in &order[..BAND_MOTIFS / 2] {
                    split[m] = 0;
                }
                let distance = |other: &Vec<usize>| -> usize {
                    split.iter().zip(other).filter(|(a, b)| a != b).count()
                };
                if banding.iter().any(|other| distance(other) == 0) {
                    continue;
                }
                if attempt < 256 && banding.iter().any(|other| distance(other) < 4) {
                    best.get_or_insert_with(|| split.clone());
                    continue;
                }
                best = Some(split);
                break;
            }
            banding.push(best.expect("no distinct band split found"));
        }
        MotifBanks {
            category,
            shared,
            band_pool,
            banding,
        }
    }

    pub fn categories(&self) -> usize {
        self.category.len()
    }

    pub fn band_motif(&self, i: usize) -> &[u8] {
        &self.band_pool[i]
    }

    /// The band (0 = early, 1 = late) where `category` places band motif `i`.
    pub fn band_of(&self, category: usize, i: usize) -> usize {
        self.banding[category][i]
    }

    /// Band motif indices that `category` places in `band`.
    fn band_members(&self, category: usize, band: usize) -> Vec<usize> {
        (0..BAND_MOTIFS)
            .filter(|&i| self.banding[category][i] == band)
            .collect()
    }

    fn random_shared(&self, rng: &mut ChaCha8Rng) -> &[u8] {
        &self.shared[rng.gen_range(0..self.shared.len())]
    }
}

/// Builds one payload of exactly `len` bytes for `category`, drawing each
/// motif from the shared bank with probability `overlap` and from the
/// category bank otherwise.
pub fn make_payload(
    banks: &MotifBanks,
    category: usize,
    overlap: f64,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    assert!(category < banks.categories(), "category out of range");
    let mut out = Vec::with_capacity(len + MOTIF_LEN);
    while out.len() < len {
        let motif = if rng.gen::<f64>() < overlap {
            banks.random_shared(rng)
        } else {
            let bank = &banks.category[category];
            &bank[rng.gen_range(0..bank.len())]
        };
        out.extend_from_slice(motif);
    }
    out.truncate(len);
    out
}

/// Builds one payload whose category signal is carried only by banded
/// fingerprints. Candidate sites sit on widely spaced slots inside the first
/// and last 40% of the payload; within each band, every motif of the half of
/// the pool that `category` assigns there is placed an identical number of
/// times (targeting a coded fraction of `1 - overlap`), in shuffled order
/// over randomly chosen sites. Counts are therefore constant given the
/// payload geometry — no occurrence statistic separates categories, only
/// where each motif sits. Everything else is shared filler, and the middle
/// fifth separates the bands so the signal spans distant file regions.
pub fn make_banded_payload(
    banks: &MotifBanks,
    category: usize,
    overlap: f64,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    assert!(category < banks.categories(), "category out of range");
    let coded_prob = (1.0 - overlap) * SITE_SPACING as f64;
    assert!(
        coded_prob <= 1.0 + 1e-12,
        "banded payloads need overlap >= 0.75"
    );
    let slots = len / MOTIF_LEN;
    let band_zone = slots * 2 / 5;
    // Random per-file site phases, so coded motifs land at file-varying byte
    // alignments and no fixed-alignment window feature tracks one band.
    let phases = [rng.gen_range(0..SITE_SPACING), rng.gen_range(0..SITE_SPACING)];
    let candidates: Vec<Vec<usize>> = (0..2)
        .map(|band| {
            (0..slots)
                .filter(|&slot| {
                    if band == 0 {
                        slot < band_zone && slot % SITE_SPACING == phases[0]
                    } else {
                        slot >= slots - band_zone
                            && (slots - 1 - slot) % SITE_SPACING == phases[1]
                    }
                })
                .collect()
        })
        .collect();
    // One shared copy count, so occurrence statistics cannot even tell the
    // bands apart when their site counts happen to differ.
    let half = BAND_MOTIFS / 2;
    let copies = candidates
        .iter()
        .map(|cands| {
            let ideal = ((cands.len() as f64 * coded_prob / half as f64) + 0.5).floor() as usize;
            ideal.min(cands.len() / half).max(1)
        })
        .min()
        .unwrap();

    let mut content: Vec<Option<&[u8]>> = vec![None; slots];
    for (band, cands) in candidates.into_iter().enumerate() {
        let members = banks.band_members(category, band);
        let mut sites = cands;
        sites.shuffle(rng);
        sites.truncate(copies * members.len());
        let mut motifs: Vec<usize> = members
            .iter()
            .flat_map(|&m| std::iter::repeat(m).take(copies))
            .collect();
        motifs.shuffle(rng);
        for (&slot, &m) in sites.iter().zip(&motifs) {
            content[slot] = Some(banks.band_motif(m));
        }
    }

    let mut out = Vec::with_capacity(len + MOTIF_LEN);
    for slot_content in content {
        match slot_content {
            Some(motif) => out.extend_from_slice(motif),
            None => out.extend_from_slice(banks.random_shared(rng)),
        }
    }
    while out.len() < len {
        out.extend_from_slice(banks.random_shared(rng));
    }
    out.truncate(len);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn byte_histogram(data: &[u8]) -> [f64; 256] {
        let mut h = [0.0; 256];
        for &b in data {
            h[b as usize] += 1.0;
        }
        for v in &mut h {
            *v /= data.len() as f64;
        }
        h
    }

    fn l1(a: &[f64; 256], b: &[f64; 256]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    /// Mean pairwise L1 distance between category byte histograms at one
    /// overlap setting, aggregated over many payloads.
    fn category_distance(overlap: f64, seed: u64) -> f64 {
        let categories = 3;
        let banks = MotifBanks::derive(seed, categories);
        let hists: Vec<[f64; 256]> = (0..categories)
            .map(|c| {
                let mut all = Vec::new();
                for p in 0..40 {
                    let mut rng = substream(seed, "payload-test", (c * 100 + p) as u64);
                    all.extend(make_payload(&banks, c, overlap, 512, &mut rng));
                }
                byte_histogram(&all)
            })
            .collect();
        let mut total = 0.0;
        let mut pairs = 0;
        for a in 0..categories {
            for b in a + 1..categories {
                total += l1(&hists[a], &hists[b]);
                pairs += 1;
            }
        }
        total / pairs as f64
    }

    /// Byte offsets where `motif` occurs in `data`.
    fn occurrences(data: &[u8], motif: &[u8]) -> Vec<usize> {
        data.windows(motif.len())
            .enumerate()
            .filter(|(_, w)| *w == motif)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn payloads_have_the_requested_length_and_are_deterministic() {
        let banks = MotifBanks::derive(5, 4);
        let mut rng = substream(5, "payload", 7);
        let a = make_payload(&banks, 2, 0.3, 777, &mut rng);
        assert_eq!(a.len(), 777);
        let mut rng = substream(5, "payload", 7);
        let b = make_payload(&banks, 2, 0.3, 777, &mut rng);
        assert_eq!(a, b);

        let mut rng = substream(5, "payload", 8);
        let c = make_banded_payload(&banks, 2, 0.8, 777, &mut rng);
        assert_eq!(c.len(), 777);
        let mut rng = substream(5, "payload", 8);
        let d = make_banded_payload(&banks, 2, 0.8, 777, &mut rng);
        assert_eq!(c, d);
    }

    #[test]
    fn zero_overlap_payloads_use_only_category_motifs() {
        let banks = MotifBanks::derive(9, 2);
        let mut rng = substream(9, "payload", 0);
        let payload = make_payload(&banks, 0, 0.0, 600, &mut rng);
        // Every aligned motif-sized block must come from category 0's bank.
        for chunk in payload.chunks(MOTIF_LEN) {
            assert!(
                banks.category[0].iter().any(|m| m.starts_with(chunk)),
                "foreign content {chunk:02x?}"
            );
        }
    }

    #[test]
    fn category_separation_shrinks_as_overlap_grows() {
        let d0 = category_distance(0.0, 33);
        let d_half = category_distance(0.5, 33);
        let d_high = category_distance(0.9, 33);
        assert!(
            d0 > d_half && d_half > d_high,
            "distances should fall: {d0} vs {d_half} vs {d_high}"
        );
        assert!(d_high < 0.5 * d0, "0.9 overlap should erase most contrast");
    }

    #[test]
    fn category_band_splits_are_distinct_and_balanced() {
        let banks = MotifBanks::derive(17, 22);
        for c in 0..22 {
            let early = (0..BAND_MOTIFS).filter(|&i| banks.band_of(c, i) == 0).count();
            assert_eq!(early, BAND_MOTIFS / 2, "category {c} split unbalanced");
            for other in 0..c {
                let distance = (0..BAND_MOTIFS)
                    .filter(|&i| banks.band_of(c, i) != banks.band_of(other, i))
                    .count();
                assert!(distance > 0, "categories {other} and {c} share a split");
                if c < BAND_MOTIFS {
                    assert!(
                        distance >= 4,
                        "early categories {other} and {c} only {distance} apart"
                    );
                }
            }
        }
    }

    #[test]
    fn banded_payloads_place_each_motif_only_in_its_category_band() {
        let banks = MotifBanks::derive(21, 6);
        let len = 540;
        let slots = len / MOTIF_LEN;
        let early_end = (slots * 2 / 5) * MOTIF_LEN;
        let late_start = (slots - slots * 2 / 5) * MOTIF_LEN;
        assert!(late_start - early_end >= 100, "dead zone too thin");

        for category in 0..6 {
            for p in 0..25u64 {
                let mut rng = substream(21, "payload-band-test", category as u64 * 100 + p);
                let payload = make_banded_payload(&banks, category, 0.8, len, &mut rng);
                for i in 0..BAND_MOTIFS {
                    for at in occurrences(&payload, banks.band_motif(i)) {
                        if banks.band_of(category, i) == 0 {
                            assert!(
                                at + MOTIF_LEN <= early_end,
                                "category {category}: early motif {i} at {at}"
                            );
                        } else {
                            assert!(
                                at >= late_start,
                                "category {category}: late motif {i} at {at}"
                            );
                        }
                    }
                }
            }
        }
    }

    /// No short window may ever see two coded motifs at once: consecutive
    /// band-motif occurrences stay at least SITE_SPACING slots apart, so any
    /// window shows at most one coded motif plus shared filler and local
    /// content statistics stay category-free.
    #[test]
    fn banded_motifs_sit_on_isolated_sites() {
        let banks = MotifBanks::derive(13, 4);
        for p in 0..40u64 {
            let mut rng = substream(13, "payload-site-test", p);
            let payload = make_banded_payload(&banks, 1, 0.8, 960, &mut rng);
            let mut coded: Vec<usize> = (0..BAND_MOTIFS)
                .flat_map(|i| occurrences(&payload, banks.band_motif(i)))
                .collect();
            coded.sort_unstable();
            for pair in coded.windows(2) {
                assert!(
                    pair[1] - pair[0] >= SITE_SPACING * MOTIF_LEN,
                    "coded motifs at {} and {} too close",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    /// Within one payload, every motif of a band appears exactly as often as
    /// its bandmates: occurrence counts carry no category signal at all.
    #[test]
    fn banded_counts_are_equal_within_each_band() {
        let banks = MotifBanks::derive(51, 8);
        for c in 0..8 {
            for p in 0..20u64 {
                let mut rng = substream(51, "payload-count-test", c as u64 * 100 + p);
                let payload = make_banded_payload(&banks, c, 0.8, 600, &mut rng);
                for band in 0..2 {
                    let counts: Vec<usize> = (0..BAND_MOTIFS)
                        .filter(|&i| banks.band_of(c, i) == band)
                        .map(|i| occurrences(&payload, banks.band_motif(i)).len())
                        .collect();
                    assert!(
                        counts.iter().all(|&n| n == counts[0]) && counts[0] >= 1,
                        "category {c} payload {p} band {band}: uneven counts {counts:?}"
                    );
                }
            }
        }
    }

    /// The category must be invisible to anything that only counts motif
    /// occurrences: every band motif appears at the same rate for every
    /// category, so only placement separates them.
    #[test]
    fn banded_payload_motif_marginals_are_category_independent() {
        let categories = 4;
        let banks = MotifBanks::derive(37, categories);
        let per_payload = 80;

        let mut rates = vec![vec![0.0f64; BAND_MOTIFS]; categories];
        for (c, per_cat) in rates.iter_mut().enumerate() {
            for p in 0..per_payload {
                let mut rng = substream(37, "payload-marginal-test", (c * 1000 + p) as u64);
                let payload = make_banded_payload(&banks, c, 0.8, 720, &mut rng);
                for i in 0..BAND_MOTIFS {
                    per_cat[i] += occurrences(&payload, banks.band_motif(i)).len() as f64;
                }
            }
        }

        for i in 0..BAND_MOTIFS {
            let per_cat: Vec<f64> = rates.iter().map(|r| r[i]).collect();
            let mean = per_cat.iter().sum::<f64>() / categories as f64;
            assert!(mean > 20.0, "motif {i} too rare to compare: {mean}");
            for (c, &r) in per_cat.iter().enumerate() {
                assert!(
                    (r - mean).abs() < 0.5 * mean,
                    "motif {i} rate {r} for category {c} far from mean {mean}"
                );
            }
        }
    }
}
