//! Entity detection and replacement.
//!
//! Detection is two-pass: exact gazetteer matches (longest first), then
//! runs of capitalized words labeled `OTHER`. A run that starts the
//! sentence is dropped whole, since its first capital may be positional.

use rand::Rng;

use super::sample::{sample_combinations, Alternatives};
use super::tokenize::{tokenize, Token};
use super::{AugmentConfig, EntityClass, Lexicons, Span, SpanLabel, Transform};

fn gazetteer_spans(sentence: &str, tokens: &[Token<'_>], lexicons: &Lexicons) -> Vec<Span> {
    let gaz = &lexicons.gazetteer;
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = gaz.max_tokens.min(tokens.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let key: Vec<String> = tokens[i..i + len].iter().map(|t| t.text.to_owned()).collect();
            let (start, end) = (tokens[i].start, tokens[i + len - 1].end);
            gaz.entries.get(&key).and_then(|entries| {
                entries
                    .iter()
                    .find(|(surface, _)| surface == &sentence[start..end])
                    .map(|(_, class)| (len, Span::new(start, end, SpanLabel::Entity(*class))))
            })
        });
        match hit {
            Some((len, span)) => {
                spans.push(span);
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}

fn capitalized_runs(tokens: &[Token<'_>], taken: &[Span]) -> Vec<Span> {
    let first_word = tokens.iter().find(|t| t.is_word).map(|t| t.start);
    let candidate = |t: &Token<'_>| {
        t.is_word
            && t.is_capitalized()
            && t.text != "I"
            && !taken.iter().any(|s| s.start < t.end && t.start < s.end)
    };
    let mut runs = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for t in tokens {
        run = match (run, candidate(t)) {
            (Some((start, _)), true) => Some((start, t.end)),
            (None, true) => Some((t.start, t.end)),
            (Some(r), false) => {
                runs.push(r);
                None
            }
            (None, false) => None,
        };
    }
    runs.extend(run);
    runs.into_iter()
        .filter(|&(start, _)| Some(start) != first_word)
        .map(|(start, end)| Span::new(start, end, SpanLabel::Entity(EntityClass::Other)))
        .collect()
}

/// Non-overlapping entity spans of `sentence`, sorted by position.
pub fn detect_entities(sentence: &str, lexicons: &Lexicons) -> Vec<Span> {
    let tokens = tokenize(sentence);
    let mut spans = gazetteer_spans(sentence, &tokens, lexicons);
    let runs = capitalized_runs(&tokens, &spans);
    spans.extend(runs);
    spans.sort();
    spans
}

/// Replaces one or more entity spans per output with pool entries of the
/// same class. Numeric spans in `spans` are ignored.
pub fn entity_transforms<R: Rng + ?Sized>(
    sentence: &str,
    spans: &[Span],
    lexicons: &Lexicons,
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<Transform> {
    let entity_spans: Vec<(Span, Vec<String>)> = spans
        .iter()
        .filter_map(|s| match s.label {
            SpanLabel::Entity(class) => {
                let surface = s.text(sentence);
                let alts: Vec<String> = lexicons
                    .entities(class)
                    .iter()
                    .filter(|e| e.as_str() != surface)
                    .cloned()
                    .collect();
                Some((*s, alts))
            }
            SpanLabel::Numeric(_) => None,
        })
        .collect();
    let refs: Vec<(Span, &dyn Alternatives)> = entity_spans
        .iter()
        .map(|(s, a)| (*s, a as &dyn Alternatives))
        .collect();
    sample_combinations(sentence, &refs, config.cap(), rng)
}

/// Text-only form of [`entity_transforms`].
pub fn transform_entities<R: Rng + ?Sized>(
    sentence: &str,
    spans: &[Span],
    lexicons: &Lexicons,
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<String> {
    entity_transforms(sentence, spans, lexicons, config, rng)
        .into_iter()
        .map(|t| t.text)
        .collect()
}
