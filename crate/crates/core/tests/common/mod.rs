//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

pub mod pipeline;

use std::collections::HashMap;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use xsimkit::align::{EmbeddingMatrix, Margin};
use xsimkit::augment::{detect_numbers, Edit, NumericClass, SpanLabel, Transform};
use xsimkit::corpus::{Candidate, CandidateSet, TransformCategory};
use xsimkit::ranking::{Polarity, SystemRecord};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(rng: &mut impl Rng, rows: usize, dim: usize) -> Vec<Vec<f32>> {
    (0..rows)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect()
}

pub fn matrix(rows: &[Vec<f32>]) -> EmbeddingMatrix {
    EmbeddingMatrix::from_rows(rows).unwrap()
}

/// `n` originals followed by `extra` transforms with random origins and
/// categories in canonical order.
pub fn random_candidate_set(rng: &mut impl Rng, n: usize, extra: usize) -> CandidateSet {
    let mut candidates: Vec<Candidate> = (0..n).map(|i| Candidate::original(format!("o{i}"), i)).collect();
    let mut t: Vec<(usize, TransformCategory)> = (0..extra)
        .map(|_| {
            (
                rng.gen_range(0..n),
                TransformCategory::ALL[rng.gen_range(0..3)],
            )
        })
        .collect();
    t.sort();
    for (j, (origin, cat)) in t.into_iter().enumerate() {
        candidates.push(Candidate::transformed(format!("t{j}"), origin, cat));
    }
    CandidateSet::from_candidates(candidates).unwrap()
}

/// A source matrix correlated with the originals: row `i` is candidate `i`
/// plus noise, so alignments are neither trivial nor random.
pub fn correlated_instance(
    rng: &mut impl Rng,
    set: &CandidateSet,
    dim: usize,
    noise: f32,
) -> (Vec<Vec<f32>>, Vec<Vec<f32>>) {
    let mut cand = random_rows(rng, set.num_originals(), dim);
    for c in set.transformed() {
        let base = cand[c.origin].clone();
        cand.push(base.iter().map(|v| v + 0.5 * rng.gen_range(-1.0f32..1.0)).collect());
    }
    let src = (0..set.num_originals())
        .map(|i| cand[i].iter().map(|v| v + noise * rng.gen_range(-1.0f32..1.0)).collect())
        .collect();
    (src, cand)
}

fn unit_f32(row: &[f32]) -> Vec<f32> {
    let norm: f64 = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
    row.iter().map(|&v| (f64::from(v) / norm) as f32).collect()
}

fn cos(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        s += f64::from(a[i]) * f64::from(b[i]);
    }
    s
}

fn mean_top_k(mut values: Vec<f64>, k: usize) -> f64 {
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values[..k].iter().sum::<f64>() / k as f64
}

/// Full margin score matrix by direct enumeration.
pub fn oracle_scores(src: &[Vec<f32>], cand: &[Vec<f32>], margin: Margin, k: usize) -> Vec<Vec<f64>> {
    let src: Vec<Vec<f32>> = src.iter().map(|r| unit_f32(r)).collect();
    let cand: Vec<Vec<f32>> = cand.iter().map(|r| unit_f32(r)).collect();
    let sim: Vec<Vec<f64>> = src.iter().map(|x| cand.iter().map(|y| cos(x, y)).collect()).collect();
    let nn_x: Vec<f64> = sim.iter().map(|row| mean_top_k(row.clone(), k)).collect();
    let nn_y: Vec<f64> = (0..cand.len())
        .map(|j| mean_top_k(sim.iter().map(|row| row[j]).collect(), k))
        .collect();
    sim.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &a)| {
                    let b = (nn_x[i] + nn_y[j]) / 2.0;
                    match margin {
                        Margin::Absolute => a,
                        Margin::Ratio => a / b,
                        Margin::Distance => a - b,
                    }
                })
                .collect()
        })
        .collect()
}

/// Index of the best score, lowest index on ties.
pub fn oracle_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

pub fn oracle_predictions(src: &[Vec<f32>], cand: &[Vec<f32>], margin: Margin, k: usize) -> Vec<usize> {
    oracle_scores(src, cand, margin, k)
        .iter()
        .map(|r| oracle_argmax(r))
        .collect()
}

/// Classic xsim: percentage of sources whose nearest original by cosine is
/// not their own translation.
pub fn cosine_argmax_error_rate(src: &[Vec<f32>], originals: &[Vec<f32>]) -> f64 {
    let mut errors = 0;
    for (i, x) in src.iter().enumerate() {
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, y) in originals.iter().enumerate() {
            let c = cos(x, y) / (cos(x, x).sqrt() * cos(y, y).sqrt());
            if c > best.0 {
                best = (c, j);
            }
        }
        if best.1 != i {
            errors += 1;
        }
    }
    100.0 * errors as f64 / src.len() as f64
}

/// Character edit distance. The common prefix and suffix are stripped
/// first, which leaves the distance unchanged.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Bound on the edit distance implied by a transform's edits.
pub fn locality_bound(sentence: &str, edits: &[Edit]) -> usize {
    edits
        .iter()
        .map(|e| sentence[e.start..e.end].chars().count() + e.replacement.chars().count())
        .sum()
}

/// Checks that `t` differs from `sentence` only inside its edits.
pub fn check_locality(sentence: &str, t: &Transform) -> Result<(), String> {
    let mut rebuilt = String::new();
    let mut cursor = 0;
    for e in &t.edits {
        if e.start < cursor || e.end > sentence.len() {
            return Err(format!("bad edit order in {:?}", t.text));
        }
        rebuilt.push_str(&sentence[cursor..e.start]);
        rebuilt.push_str(&e.replacement);
        cursor = e.end;
    }
    rebuilt.push_str(&sentence[cursor..]);
    if rebuilt != t.text {
        return Err(format!("edits do not rebuild {:?}", t.text));
    }
    let d = levenshtein(sentence, &t.text);
    let bound = locality_bound(sentence, &t.edits);
    if d > bound {
        return Err(format!("edit distance {d} > {bound} for {:?}", t.text));
    }
    Ok(())
}

const ORDINALS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

fn english_suffix(n: u64) -> &'static str {
    if (11..=13).contains(&(n % 100)) {
        return "th";
    }
    match n % 10 {
        1 => "st",
        2 => "nd",
        3 => "rd",
        _ => "th",
    }
}

fn digit_shape(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_digit() { '9' } else { c }).collect()
}

fn case_style(s: &str) -> (bool, bool) {
    let first_upper = s.chars().next().is_some_and(char::is_uppercase);
    let all_upper = s.chars().all(|c| !c.is_lowercase());
    (first_upper, all_upper)
}

static PERCENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,3})(?:\.(\d+))?%$").unwrap());
static DIGIT_ORDINAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)(st|nd|rd|th)$").unwrap());

/// Class and surface-format preservation of one numeric replacement.
pub fn check_number_format(original: &str, replacement: &str, class: NumericClass) -> Result<(), String> {
    let fail = |why: &str| Err(format!("{class:?} {original:?} -> {replacement:?}: {why}"));
    if original == replacement {
        return fail("unchanged");
    }
    match class {
        NumericClass::Percent => {
            let Some(c) = PERCENT.captures(replacement) else {
                return fail("not a percentage");
            };
            let value: f64 = replacement.trim_end_matches('%').parse().unwrap();
            if value > 100.0 {
                return fail("above 100");
            }
            let decimals = |s: &str| s.split_once('.').map_or(0, |(_, d)| d.trim_end_matches('%').len());
            if c.get(2).map_or(0, |m| m.as_str().len()) != decimals(original) {
                return fail("decimal places changed");
            }
        }
        NumericClass::Ordinal => {
            let lower = original.to_lowercase();
            if ORDINALS.contains(&lower.as_str()) {
                if !ORDINALS.contains(&replacement.to_lowercase().as_str()) {
                    return fail("not a word ordinal");
                }
                if case_style(original) != case_style(replacement) {
                    return fail("case changed");
                }
            } else {
                let Some(c) = DIGIT_ORDINAL.captures(replacement) else {
                    return fail("not a digit ordinal");
                };
                let n: u64 = c[1].parse().unwrap();
                if &c[2] != english_suffix(n) {
                    return fail("wrong suffix");
                }
                let width = original.trim_end_matches(char::is_alphabetic).len();
                if c[1].len() != width {
                    return fail("digit count changed");
                }
            }
        }
        NumericClass::Cardinal | NumericClass::Number | NumericClass::Time | NumericClass::Date => {
            if digit_shape(original) != digit_shape(replacement) {
                return fail("shape changed");
            }
        }
    }
    let again = detect_numbers(replacement);
    if again.len() != 1 || again[0].start != 0 || again[0].end != replacement.len() {
        return fail("not re-detected as one span");
    }
    if again[0].label != SpanLabel::Numeric(class) {
        return fail("class changed on re-detection");
    }
    Ok(())
}

/// Pairwise accuracy by the direct double loop over all records.
pub fn brute_force_accuracy(records: &[SystemRecord], polarity: Polarity) -> (usize, usize, usize, usize) {
    let (mut total, mut conc, mut disc, mut tied) = (0, 0, 0, 0);
    for i in 0..records.len() {
        for j in (i + 1)..records.len() {
            let (a, b) = (&records[i], &records[j]);
            if a.direction != b.direction {
                continue;
            }
            total += 1;
            let oriented = match polarity {
                Polarity::Error => -(a.proxy - b.proxy),
                Polarity::Score => a.proxy - b.proxy,
            };
            let mining = a.downstream - b.downstream;
            if oriented == 0.0 || mining == 0.0 {
                tied += 1;
            } else if (oriented > 0.0) == (mining > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    (total, conc, disc, tied)
}

/// Random table: `directions` × up to `max_systems` systems, proxy values
/// on a coarse grid so ties occur.
pub fn random_records(rng: &mut impl Rng, directions: usize, max_systems: usize, grouped: bool) -> Vec<SystemRecord> {
    let mut out = Vec::new();
    for d in 0..directions {
        let n = rng.gen_range(1..=max_systems);
        for s in 0..n {
            let mut r = SystemRecord::new(
                &format!("sys{s}"),
                &format!("d{d}"),
                f64::from(rng.gen_range(0..20u32)) / 2.0,
                f64::from(rng.gen_range(0..40u32)) / 4.0,
            );
            if grouped {
                r = r.with_group(if rng.gen_bool(0.3) {
                    xsimkit::ranking::Group::Across
                } else {
                    xsimkit::ranking::Group::Within
                });
            }
            out.push(r);
        }
    }
    out
}

/// Paired bootstrap, written out directly: resample `r` draws `n` indices
/// from `seed::stream(seed, [r])`, and counts when A fails to beat B.
pub fn oracle_bootstrap(hits_a: &[bool], hits_b: &[bool], resamples: usize, seed: u64) -> f64 {
    let n = hits_a.len();
    let mut not_better = 0usize;
    for r in 0..resamples {
        let mut stream = xsimkit::seed::stream(seed, &[r as u64]);
        let mut a = 0i64;
        let mut b = 0i64;
        for _ in 0..n {
            let i = stream.gen_range(0..n as u64) as usize;
            a += i64::from(hits_a[i]);
            b += i64::from(hits_b[i]);
        }
        if a <= b {
            not_better += 1;
        }
    }
    not_better as f64 / resamples as f64
}

/// Random English-like sentences mixing lexicon words, pooled entities,
/// capitalized tokens, numbers of every shape and stray punctuation.
pub fn fuzz_sentences(seed: u64, count: usize) -> Vec<String> {
    let lexicon_words = [
        "good", "bad", "big", "small", "happy", "cold", "hot", "easy", "hard", "did not", "did", "is not", "is",
        "may", "might", "could", "possibly", "probably", "likely", "suggests", "seemed", "appears", "never",
        "always", "strong", "weak", "early", "late", "new", "old",
    ];
    let filler = [
        "the", "a", "of", "and", "to", "in", "was", "were", "that", "with", "for", "on", "it", "people", "data",
        "river", "report", "city", "team", "over", "after", "hours", "said", "found", "I", "we", "very",
    ];
    let entities = [
        "Charles", "Paris", "London", "Google", "Microsoft", "Tokyo", "Madrid", "India", "Berlin",
        "the British Royal Family", "The University", "Maria", "New York",
    ];
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let words = rng.gen_range(1..18);
        let mut parts: Vec<String> = Vec::new();
        for _ in 0..words {
            let piece = match rng.gen_range(0..20) {
                0..=5 => filler[rng.gen_range(0..filler.len())].to_owned(),
                6..=9 => lexicon_words[rng.gen_range(0..lexicon_words.len())].to_owned(),
                10..=11 => entities[rng.gen_range(0..entities.len())].to_owned(),
                12 => {
                    let w = filler[rng.gen_range(0..filler.len())];
                    let mut c = w.chars();
                    c.next().map_or(String::new(), |f| f.to_uppercase().chain(c).collect())
                }
                13 => rng.gen_range(0..100_000u32).to_string(),
                14 => format!("{}%", rng.gen_range(0..=100u32)),
                15 => format!("{:02}:{:02}", rng.gen_range(0..24u32), rng.gen_range(0..60u32)),
                16 => match rng.gen_range(0..3) {
                    0 => format!(
                        "{}-{:02}-{:02}",
                        rng.gen_range(1900..2100u32),
                        rng.gen_range(1..13u32),
                        rng.gen_range(1..29u32)
                    ),
                    1 => format!("{}/{}/{}", rng.gen_range(1..13u32), rng.gen_range(1..13u32), rng.gen_range(1950..2030u32)),
                    _ => format!("{}.{}", rng.gen_range(0..1000u32), rng.gen_range(0..100u32)),
                },
                17 => {
                    let n = rng.gen_range(1..200u64);
                    format!("{n}{}", english_suffix(n))
                }
                18 => ORDINALS[rng.gen_range(0..10)].to_owned(),
                _ => ["1,234", "12,500,000", "0.5", "007", "café", "don't", "well-known", "(", ")", ",", "\u{2014}"]
                    [rng.gen_range(0..11)]
                .to_owned(),
            };
            parts.push(piece);
        }
        let mut s = parts.join(" ");
        s.push(['.', '!', '?', ';'][rng.gen_range(0..4)]);
        out.push(s);
    }
    out
}

/// Counts per (origin, category) in a candidate set.
pub fn per_origin_counts(set: &CandidateSet) -> HashMap<(usize, TransformCategory), usize> {
    let mut m = HashMap::new();
    for c in set.transformed() {
        *m.entry((c.origin, c.kind.category().unwrap())).or_insert(0) += 1;
    }
    m
}
