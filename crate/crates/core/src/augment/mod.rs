//! Rule-based hard-negative generation.
//!
//! Every English reference is expanded with minimally edited variants that
//! change its meaning: causality alternations (antonyms, negation, modal
//! strengthening), entity replacements and number replacements. Each
//! (origin, category) pair draws from its own seeded stream, so the output
//! does not depend on the order in which sentences are processed.

mod causality;
mod entity;
mod lexicon;
mod number;
mod sample;
pub mod tokenize;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Candidate, CandidateSet, EvalSet, TransformCategory, DEFAULT_CAP};
use crate::seed::{self, StreamRng};

pub use causality::{causality_transforms, transform_causality};
pub use entity::{detect_entities, entity_transforms, transform_entities};
pub use lexicon::Lexicons;
pub use number::{detect_numbers, number_transforms, transform_numbers};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Lexicon {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("annotations line {line}: {message}")]
    Annotation { line: usize, message: String },
    #[error("invalid augment config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityClass {
    Person,
    Org,
    Gpe,
    Other,
}

impl EntityClass {
    pub const ALL: [EntityClass; 4] = [
        EntityClass::Person,
        EntityClass::Org,
        EntityClass::Gpe,
        EntityClass::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityClass::Person => "PERSON",
            EntityClass::Org => "ORG",
            EntityClass::Gpe => "GPE",
            EntityClass::Other => "OTHER",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown entity class {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumericClass {
    Date,
    Ordinal,
    Cardinal,
    Time,
    Number,
    Percent,
}

impl NumericClass {
    pub const ALL: [NumericClass; 6] = [
        NumericClass::Date,
        NumericClass::Ordinal,
        NumericClass::Cardinal,
        NumericClass::Time,
        NumericClass::Number,
        NumericClass::Percent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NumericClass::Date => "DATE",
            NumericClass::Ordinal => "ORDINAL",
            NumericClass::Cardinal => "CARDINAL",
            NumericClass::Time => "TIME",
            NumericClass::Number => "NUMBER",
            NumericClass::Percent => "PERCENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpanLabel {
    Entity(EntityClass),
    Numeric(NumericClass),
}

impl SpanLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SpanLabel::Entity(c) => c.as_str(),
            SpanLabel::Numeric(c) => c.as_str(),
        }
    }
}

impl fmt::Display for SpanLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpanLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(c) = s.parse::<EntityClass>() {
            return Ok(SpanLabel::Entity(c));
        }
        NumericClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .map(SpanLabel::Numeric)
            .ok_or_else(|| format!("unknown span label {s:?}"))
    }
}

/// A labeled byte range inside one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: SpanLabel,
}

impl Span {
    pub fn new(start: usize, end: usize, label: SpanLabel) -> Self {
        Self { start, end, label }
    }

    pub fn text<'a>(&self, sentence: &'a str) -> &'a str {
        &sentence[self.start..self.end]
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A span tied to a sentence of the evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanAnnotation {
    pub sentence_index: usize,
    pub span: Span,
}

/// Greedy non-overlapping selection: earliest start first, longest first
/// among equal starts.
pub fn resolve_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.end.cmp(&a.end))
            .then(a.label.cmp(&b.label))
    });
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans {
        if out.last().is_none_or(|last| last.end <= s.start) {
            out.push(s);
        }
    }
    out
}

/// `primary` spans win; `secondary` spans survive only where they do not
/// overlap a primary span.
pub(crate) fn merge_spans(primary: &[Span], secondary: &[Span]) -> Vec<Span> {
    let mut all = resolve_spans(primary.to_vec());
    all.extend(
        secondary
            .iter()
            .filter(|s| !all.iter().any(|p| p.overlaps(s)))
            .copied()
            .collect::<Vec<_>>(),
    );
    all.sort();
    all
}

/// Reads `sentence_index<TAB>start<TAB>end<TAB>label` rows.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<SpanAnnotation>, AugmentError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AugmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_annotations(&text)
}

pub fn parse_annotations(text: &str) -> Result<Vec<SpanAnnotation>, AugmentError> {
    let mut out = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i + 1;
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let err = |message: String| AugmentError::Annotation { line, message };
        let fields: Vec<&str> = row.split('\t').collect();
        let [index, start, end, label] = fields[..] else {
            return Err(err(format!("expected 4 columns, found {}", fields.len())));
        };
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("invalid integer {s:?}")))
        };
        let span = Span::new(num(start)?, num(end)?, label.parse().map_err(err)?);
        if span.start >= span.end {
            return Err(err("start must be below end".into()));
        }
        out.push(SpanAnnotation {
            sentence_index: num(index)?,
            span,
        });
    }
    Ok(out)
}

/// Knobs for candidate generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentConfig {
    seed: u64,
    cap_per_category: usize,
    categories: BTreeSet<TransformCategory>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cap_per_category: DEFAULT_CAP,
            categories: TransformCategory::ALL.into_iter().collect(),
        }
    }
}

impl AugmentConfig {
    pub fn new(
        seed: u64,
        cap_per_category: usize,
        categories: impl IntoIterator<Item = TransformCategory>,
    ) -> Result<Self, AugmentError> {
        let categories: BTreeSet<_> = categories.into_iter().collect();
        if cap_per_category == 0 {
            return Err(AugmentError::Config("cap_per_category must be at least 1".into()));
        }
        if categories.is_empty() {
            return Err(AugmentError::Config("no transform categories enabled".into()));
        }
        Ok(Self {
            seed,
            cap_per_category,
            categories,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cap(&self) -> usize {
        self.cap_per_category
    }

    pub fn categories(&self) -> &BTreeSet<TransformCategory> {
        &self.categories
    }

    pub fn is_enabled(&self, category: TransformCategory) -> bool {
        self.categories.contains(&category)
    }

    /// The random stream for one (origin, category) pair.
    pub fn stream(&self, origin: usize, category: TransformCategory) -> StreamRng {
        let code = match category {
            TransformCategory::Causality => 1,
            TransformCategory::Entity => 2,
            TransformCategory::Number => 3,
        };
        seed::stream(self.seed, &[origin as u64, code])
    }
}

/// One replaced byte range of the source sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
    pub label: Option<SpanLabel>,
}

/// A transformed sentence together with the edits that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transform {
    pub text: String,
    pub edits: Vec<Edit>,
}

impl Transform {
    /// Applies non-overlapping edits, sorted by start, to `sentence`.
    pub(crate) fn apply(sentence: &str, edits: Vec<Edit>) -> Self {
        let mut text = String::with_capacity(sentence.len() + 16);
        let mut cursor = 0;
        for e in &edits {
            text.push_str(&sentence[cursor..e.start]);
            text.push_str(&e.replacement);
            cursor = e.end;
        }
        text.push_str(&sentence[cursor..]);
        Self { text, edits }
    }
}

/// Generated negatives for one reference, per category in canonical order.
#[derive(Debug, Clone, Default)]
struct OriginTransforms {
    by_category: Vec<(TransformCategory, Vec<Transform>)>,
}

fn check_annotation(sentence: &str, a: &SpanAnnotation, line_hint: usize) -> Result<(), AugmentError> {
    let s = a.span;
    if s.end > sentence.len() || !sentence.is_char_boundary(s.start) || !sentence.is_char_boundary(s.end)
    {
        return Err(AugmentError::Annotation {
            line: line_hint,
            message: format!(
                "span {}..{} is not valid for sentence {}",
                s.start, s.end, a.sentence_index
            ),
        });
    }
    Ok(())
}

fn generate_for_origin(
    origin: usize,
    sentence: &str,
    external: &[Span],
    lexicons: &Lexicons,
    config: &AugmentConfig,
) -> OriginTransforms {
    let mut out = OriginTransforms::default();
    for category in TransformCategory::ALL {
        if !config.is_enabled(category) {
            continue;
        }
        let mut rng = config.stream(origin, category);
        let transforms = match category {
            TransformCategory::Causality => causality_transforms(sentence, lexicons, config, &mut rng),
            TransformCategory::Entity => {
                let ext: Vec<Span> = external
                    .iter()
                    .filter(|s| matches!(s.label, SpanLabel::Entity(_)))
                    .copied()
                    .collect();
                let spans = merge_spans(&ext, &detect_entities(sentence, lexicons));
                entity_transforms(sentence, &spans, lexicons, config, &mut rng)
            }
            TransformCategory::Number => {
                let ext: Vec<Span> = external
                    .iter()
                    .filter(|s| matches!(s.label, SpanLabel::Numeric(_)))
                    .copied()
                    .collect();
                let spans = merge_spans(&ext, &detect_numbers(sentence));
                number_transforms(sentence, &spans, config, &mut rng)
            }
        };
        out.by_category.push((category, transforms));
    }
    out
}

/// Expands the references of `eval` into a candidate set.
pub fn build_candidate_set(eval: &EvalSet, lexicons: &Lexicons, config: &AugmentConfig) -> CandidateSet {
    build_candidates(eval.references(), lexicons, config, &[])
        .expect("no external annotations to validate")
}

/// Expands `references` into a candidate set: originals in order, then
/// transforms grouped by origin, then category, then generation order.
/// Exact-duplicate texts are dropped, keeping the first occurrence.
///
/// External annotations take precedence over rule-based detections they
/// overlap.
pub fn build_candidates(
    references: &[String],
    lexicons: &Lexicons,
    config: &AugmentConfig,
    annotations: &[SpanAnnotation],
) -> Result<CandidateSet, AugmentError> {
    let mut external: Vec<Vec<Span>> = vec![Vec::new(); references.len()];
    for (i, a) in annotations.iter().enumerate() {
        let Some(sentence) = references.get(a.sentence_index) else {
            return Err(AugmentError::Annotation {
                line: i + 1,
                message: format!("sentence index {} out of range", a.sentence_index),
            });
        };
        check_annotation(sentence, a, i + 1)?;
        external[a.sentence_index].push(a.span);
    }

    let generated: Vec<OriginTransforms> = references
        .par_iter()
        .enumerate()
        .map(|(origin, sentence)| {
            generate_for_origin(origin, sentence, &external[origin], lexicons, config)
        })
        .collect();

    let mut set = CandidateSet::from_originals(references);
    let mut seen: HashSet<String> = references.iter().cloned().collect();
    for (origin, per_origin) in generated.into_iter().enumerate() {
        for (category, transforms) in per_origin.by_category {
            for t in transforms {
                set.push_dedup(&mut seen, Candidate::transformed(t.text, origin, category));
            }
        }
    }
    Ok(set)
}
