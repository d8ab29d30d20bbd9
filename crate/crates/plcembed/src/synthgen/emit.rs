//! Wrapping one payload in one dialect's byte-level conventions.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DialectSpec, SynthError};

/// Filler gap between two payload sections, in bytes.
const GAP_RANGE: (usize, usize) = (8, 24);

/// Body bytes needed to place `content_len` content bytes around the stamps.
fn body_len_for_content(content_len: usize, d: &DialectSpec) -> Result<usize, SynthError> {
    let plen = d.insert_pattern.len();
    let capacity = d.period - plen;
    if capacity == 0 && content_len > 0 {
        return Err(SynthError::InvalidConfig(format!(
            "dialect {}: insert_pattern fills the whole period, no room for content",
            d.dialect_id
        )));
    }
    let full_blocks = content_len / capacity;
    let tail = content_len % capacity;
    Ok(full_blocks * d.period + if tail > 0 { plen + tail } else { 0 })
}

/// Wraps `payload` in dialect `d`'s format:
/// `header_magic ‖ body`, where the body carries the payload split into
/// sections separated by filler gaps, the insert pattern stamped at every
/// `period`-aligned body offset, and trailing filler up to a length drawn
/// from `length_range` (total-file bounds, inclusive).
pub fn emit_binary(
    payload: &[u8],
    d: &DialectSpec,
    length_range: (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<Vec<u8>, SynthError> {
    d.validate()?;
    if payload.is_empty() {
        return Err(SynthError::InvalidConfig("payload must be nonempty".into()));
    }
    let (min_total, max_total) = length_range;
    if min_total > max_total || min_total <= d.header_magic.len() {
        return Err(SynthError::InvalidConfig(format!(
            "length_range ({min_total}, {max_total}) incompatible with a {}-byte header",
            d.header_magic.len()
        )));
    }
    let min_body = min_total - d.header_magic.len();
    let max_body = max_total - d.header_magic.len();

    let n_sections = rng.gen_range(d.section_count_range.0..=d.section_count_range.1);
    let gaps: Vec<usize> = (0..n_sections)
        .map(|_| rng.gen_range(GAP_RANGE.0..=GAP_RANGE.1))
        .collect();
    let content_len = payload.len() + gaps.iter().sum::<usize>();
    let needed = body_len_for_content(content_len, d)?;
    if needed > max_body {
        return Err(SynthError::InvalidConfig(format!(
            "dialect {}: payload of {} bytes needs a {}-byte body but max is {}",
            d.dialect_id,
            payload.len(),
            needed,
            max_body
        )));
    }
    let body_len = rng.gen_range(needed.max(min_body)..=max_body);

    // Content stream: payload in `n_sections` near-equal chunks, a filler gap
    // after each chunk (`None` = draw from the dialect's byte bias).
    let mut content: Vec<Option<u8>> = Vec::with_capacity(content_len);
    let q = payload.len() / n_sections;
    let r = payload.len() % n_sections;
    let mut cursor = 0;
    for (s, &gap) in gaps.iter().enumerate() {
        let take = q + usize::from(s < r);
        content.extend(payload[cursor..cursor + take].iter().copied().map(Some));
        cursor += take;
        content.extend(std::iter::repeat(None).take(gap));
    }
    debug_assert_eq!(cursor, payload.len());

    let filler = WeightedIndex::new(&d.byte_bias)
        .map_err(|e| SynthError::InvalidConfig(format!("byte_bias: {e}")))?;
    let mut body = Vec::with_capacity(body_len);
    let mut stream = content.into_iter();
    while body.len() < body_len {
        if body.len() % d.period == 0 && body.len() + d.insert_pattern.len() <= body_len {
            body.extend_from_slice(&d.insert_pattern);
            continue;
        }
        let byte = match stream.next() {
            Some(Some(b)) => b,
            _ => filler.sample(rng) as u8,
        };
        body.push(byte);
    }
    debug_assert!(stream.next().is_none(), "content must fit the body");

    let mut out = d.header_magic.clone();
    out.extend_from_slice(&body);
    Ok(out)
}
