//! Causality alternation: antonym swaps, negation insertion or removal, and
//! hedge strengthening. Every output applies exactly one rule once.

use std::collections::HashSet;

use rand::Rng;

use super::lexicon::{lower_tokens, PhraseRule};
use super::tokenize::{match_case, tokenize, Token};
use super::{AugmentConfig, Edit, Lexicons, Transform};

/// Token-index ranges where `pattern` occurs (case-insensitive).
fn occurrences(tokens: &[Token<'_>], lowered: &[String], pattern: &[String]) -> Vec<(usize, usize)> {
    if pattern.is_empty() || pattern.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - pattern.len())
        .filter(|&i| lowered[i..i + pattern.len()] == *pattern)
        .map(|i| (i, i + pattern.len()))
        .collect()
}

fn apply_rules(
    sentence: &str,
    tokens: &[Token<'_>],
    lowered: &[String],
    rules: &[PhraseRule],
    out: &mut Vec<Transform>,
) {
    let mut found: Vec<(usize, Transform)> = Vec::new();
    for rule in rules {
        let replacement_tokens = lower_tokens(&rule.replacement);
        let extends = replacement_tokens.len() > rule.pattern.len()
            && replacement_tokens.starts_with(&rule.pattern);
        for (first, last) in occurrences(tokens, lowered, &rule.pattern) {
            // "did" -> "did not" must not fire on an existing "did not".
            if extends && lowered[first..].starts_with(&replacement_tokens) {
                continue;
            }
            let (start, end) = (tokens[first].start, tokens[last - 1].end);
            let edit = Edit {
                start,
                end,
                replacement: match_case(tokens[first].text, &rule.replacement),
                label: None,
            };
            found.push((start, Transform::apply(sentence, vec![edit])));
        }
    }
    // Position order; rule order among applications at the same position.
    found.sort_by_key(|(start, _)| *start);
    out.extend(found.into_iter().map(|(_, t)| t));
}

/// All single-rule causality alternations of `sentence`, at most `cap` of
/// them. When more apply, a seeded subset is kept in generation order.
pub fn causality_transforms<R: Rng + ?Sized>(
    sentence: &str,
    lexicons: &Lexicons,
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<Transform> {
    let tokens = tokenize(sentence);
    let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();

    let mut all = Vec::new();
    apply_rules(sentence, &tokens, &lowered, &lexicons.antonym_rules, &mut all);
    apply_rules(sentence, &tokens, &lowered, &lexicons.negation_rules, &mut all);
    apply_rules(sentence, &tokens, &lowered, &lexicons.strengthener_rules, &mut all);

    let mut seen = HashSet::new();
    all.retain(|t| t.text != sentence && seen.insert(t.text.clone()));

    let cap = config.cap();
    if all.len() <= cap {
        return all;
    }
    let mut order: Vec<u64> = (0..all.len() as u64).collect();
    for k in 0..cap {
        let j = rng.gen_range(k as u64..order.len() as u64) as usize;
        order.swap(k, j);
    }
    let mut keep: Vec<usize> = order[..cap].iter().map(|&i| i as usize).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| all[i].clone()).collect()
}

/// Text-only form of [`causality_transforms`].
pub fn transform_causality<R: Rng + ?Sized>(
    sentence: &str,
    lexicons: &Lexicons,
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<String> {
    causality_transforms(sentence, lexicons, config, rng)
        .into_iter()
        .map(|t| t.text)
        .collect()
}
