//! Sampling distinct replacement combinations without replacement.
//!
//! Each span has `n` alternatives; a combination picks, per span, either
//! "keep" or one alternative, and at least one span must change. The
//! combinations are indexed in mixed radix `(1 + n_0) × (1 + n_1) × …`
//! with index 0 reserved for the all-keep choice.

use std::collections::HashSet;

use rand::Rng;

use super::{Edit, Span, Transform};

/// A finite, indexable set of replacement strings for one span.
pub(crate) trait Alternatives {
    fn len(&self) -> u64;
    fn get(&self, index: u64) -> String;
}

impl Alternatives for Vec<String> {
    fn len(&self) -> u64 {
        self.as_slice().len() as u64
    }

    fn get(&self, index: u64) -> String {
        self[index as usize].clone()
    }
}

/// Below this many combinations they are shuffled explicitly; above it
/// random draws are rejected when already seen.
const ENUMERATION_LIMIT: u128 = 1 << 16;

fn decode(mut index: u128, radices: &[u128]) -> Vec<u64> {
    let mut choices = vec![0u64; radices.len()];
    for (slot, &r) in choices.iter_mut().zip(radices).rev() {
        *slot = (index % r) as u64;
        index /= r;
    }
    choices
}

fn build(sentence: &str, spans: &[(Span, &dyn Alternatives)], choices: &[u64]) -> Transform {
    let edits = spans
        .iter()
        .zip(choices)
        .filter(|(_, &c)| c > 0)
        .map(|((span, alts), &c)| Edit {
            start: span.start,
            end: span.end,
            replacement: alts.get(c - 1),
            label: Some(span.label),
        })
        .collect();
    Transform::apply(sentence, edits)
}

/// Draws up to `cap` distinct transforms of `sentence`. `spans` must be
/// sorted and non-overlapping. Stops early when every combination has been
/// used.
pub(crate) fn sample_combinations<R: Rng + ?Sized>(
    sentence: &str,
    spans: &[(Span, &dyn Alternatives)],
    cap: usize,
    rng: &mut R,
) -> Vec<Transform> {
    let spans: Vec<(Span, &dyn Alternatives)> =
        spans.iter().filter(|(_, a)| a.len() > 0).copied().collect();
    if spans.is_empty() || cap == 0 {
        return Vec::new();
    }
    let radices: Vec<u128> = spans.iter().map(|(_, a)| a.len() as u128 + 1).collect();
    let total = radices
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r))
        .map_or(u128::MAX, |t| t - 1);

    let mut out = Vec::new();
    let mut texts: HashSet<String> = HashSet::new();
    let mut accept = |t: Transform, out: &mut Vec<Transform>| {
        if t.text != sentence && texts.insert(t.text.clone()) {
            out.push(t);
        }
    };

    if total <= ENUMERATION_LIMIT {
        // Lazy Fisher-Yates over 1..=total.
        let mut pool: Vec<u64> = (1..=total as u64).collect();
        let mut k = 0usize;
        while out.len() < cap && k < pool.len() {
            let j = rng.gen_range(k as u64..pool.len() as u64) as usize;
            pool.swap(k, j);
            let choices = decode(pool[k] as u128, &radices);
            accept(build(sentence, &spans, &choices), &mut out);
            k += 1;
        }
    } else {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let max_draws = cap.saturating_mul(64).max(1024);
        for _ in 0..max_draws {
            if out.len() >= cap {
                break;
            }
            let choices: Vec<u64> = radices
                .iter()
                .map(|&r| rng.gen_range(0..r.min(u64::MAX as u128) as u64))
                .collect();
            if choices.iter().all(|&c| c == 0) || !seen.insert(choices.clone()) {
                continue;
            }
            accept(build(sentence, &spans, &choices), &mut out);
        }
    }
    out
}
