//! Error rates with per-category attribution, and category ablations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{align, AlignError, AlignmentResult, EmbeddingMatrix, ErrorKind, Margin, MarginConfig};
use crate::corpus::{CandidateSet, TransformCategory};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("empty candidate selection: enable a category or include misaligned errors")]
    EmptyCandidateSet,
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("invalid subset {0:?}")]
    InvalidSubset(String),
}

/// Key used for errors whose prediction belongs to another origin.
pub const MISALIGNED: &str = "misaligned";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindCount {
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub total: usize,
    pub causality: KindCount,
    pub entity: KindCount,
    pub number: KindCount,
    pub misaligned: KindCount,
}

impl ErrorBreakdown {
    pub fn get(&self, category: TransformCategory) -> KindCount {
        match category {
            TransformCategory::Causality => self.causality,
            TransformCategory::Entity => self.entity,
            TransformCategory::Number => self.number,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub margin: Margin,
    pub k: usize,
    pub candidates: usize,
    pub categories_included: Vec<TransformCategory>,
    /// Error kinds counted by `error_rate`.
    pub counted: Vec<String>,
}

/// xsim-style error report for one language direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub direction: String,
    pub total_sources: usize,
    /// Percentage of sources whose error kind is listed in `config.counted`.
    pub error_rate: f64,
    pub errors: ErrorBreakdown,
    pub config: ReportConfig,
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Which error kinds an error rate counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ErrorSelection {
    pub categories: Vec<TransformCategory>,
    pub misaligned: bool,
}

impl ErrorSelection {
    /// Every category plus misaligned errors: the full xsim++ error rate.
    pub fn all() -> Self {
        Self {
            categories: TransformCategory::ALL.to_vec(),
            misaligned: true,
        }
    }

    /// Originals only, misaligned errors only: classic xsim.
    pub fn originals_only() -> Self {
        Self {
            categories: Vec::new(),
            misaligned: true,
        }
    }

    pub fn new(categories: impl IntoIterator<Item = TransformCategory>, misaligned: bool) -> Self {
        let mut categories: Vec<_> = categories.into_iter().collect();
        categories.sort();
        categories.dedup();
        Self {
            categories,
            misaligned,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty() && !self.misaligned
    }

    fn counts(&self, kind: ErrorKind) -> bool {
        match kind {
            ErrorKind::Correct => false,
            ErrorKind::Misaligned => self.misaligned,
            ErrorKind::Category(c) => self.categories.contains(&c),
        }
    }

    fn keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self.categories.iter().map(|c| c.as_str().to_owned()).collect();
        if self.misaligned {
            keys.push(MISALIGNED.to_owned());
        }
        keys
    }

    /// Table-style name, e.g. `Causality + Entity + Misaligned`.
    pub fn title(&self) -> String {
        let mut parts: Vec<&str> = self.categories.iter().map(|c| c.title()).collect();
        if self.misaligned {
            parts.push("Misaligned");
        }
        parts.join(" + ")
    }

    /// The thirteen category combinations of the ablation table, in order.
    pub fn ablation_table() -> Vec<ErrorSelection> {
        use TransformCategory::*;
        let rows: [(&[TransformCategory], bool); 13] = [
            (&[Causality], false),
            (&[Entity], false),
            (&[Number], false),
            (&[], true),
            (&[Causality, Entity], false),
            (&[Causality, Entity], true),
            (&[Causality], true),
            (&[Causality, Number], false),
            (&[Causality, Number], true),
            (&[Entity], true),
            (&[Number, Entity], false),
            (&[Number, Entity], true),
            (&[Number], true),
        ];
        rows.iter()
            .map(|(cats, m)| ErrorSelection::new(cats.iter().copied(), *m))
            .collect()
    }
}

impl fmt::Display for ErrorSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keys().join("+"))
    }
}

impl FromStr for ErrorSelection {
    type Err = ScoringError;

    /// Parses `causality+entity+misaligned` style names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut categories = Vec::new();
        let mut misaligned = false;
        for part in s.split('+').map(str::trim) {
            if part == MISALIGNED {
                misaligned = true;
            } else {
                categories.push(
                    part.parse::<TransformCategory>()
                        .map_err(|_| ScoringError::InvalidSubset(s.to_owned()))?,
                );
            }
        }
        let sel = ErrorSelection::new(categories, misaligned);
        if sel.is_empty() {
            return Err(ScoringError::InvalidSubset(s.to_owned()));
        }
        Ok(sel)
    }
}

/// Error report counting every error kind.
pub fn error_rate(result: &AlignmentResult, direction: &str) -> ErrorReport {
    error_rate_counting(result, direction, &ErrorSelection::all())
}

/// Error report whose `error_rate` counts only the kinds in `counted`.
/// The breakdown always lists every kind.
pub fn error_rate_counting(result: &AlignmentResult, direction: &str, counted: &ErrorSelection) -> ErrorReport {
    let total_sources = result.predictions.len();
    let mut counts: BTreeMap<ErrorKind, usize> = BTreeMap::new();
    for p in &result.predictions {
        *counts.entry(p.error_kind).or_default() += 1;
    }
    let kind = |k: ErrorKind| {
        let count = counts.get(&k).copied().unwrap_or(0);
        KindCount {
            count,
            percent: percent(count, total_sources),
        }
    };
    let errors = ErrorBreakdown {
        total: result.errors(),
        causality: kind(ErrorKind::Category(TransformCategory::Causality)),
        entity: kind(ErrorKind::Category(TransformCategory::Entity)),
        number: kind(ErrorKind::Category(TransformCategory::Number)),
        misaligned: kind(ErrorKind::Misaligned),
    };
    let counted_errors = result
        .predictions
        .iter()
        .filter(|p| counted.counts(p.error_kind))
        .count();
    ErrorReport {
        direction: direction.to_owned(),
        total_sources,
        error_rate: percent(counted_errors, total_sources),
        errors,
        config: ReportConfig {
            margin: result.config.margin,
            k: result.config.k,
            candidates: result.num_candidates,
            categories_included: result.categories_included.clone(),
            counted: counted.keys(),
        },
    }
}

/// Re-aligns against originals plus the transforms of `selection`'s
/// categories and reports the error rate counting those categories (and
/// misaligned errors when selected).
pub fn subset_rescore(
    src: &EmbeddingMatrix,
    direction: &str,
    full_set: &CandidateSet,
    cand_emb: &EmbeddingMatrix,
    cfg: &MarginConfig,
    selection: &ErrorSelection,
) -> Result<ErrorReport, ScoringError> {
    if selection.is_empty() {
        return Err(ScoringError::EmptyCandidateSet);
    }
    if cand_emb.rows() != full_set.len() {
        return Err(AlignError::RowCountMismatch {
            what: "candidate embeddings",
            expected: full_set.len(),
            found: cand_emb.rows(),
        }
        .into());
    }
    let (subset, rows) = full_set.filter_categories(&selection.categories);
    let emb = cand_emb.select_rows(&rows);
    let result = align(src, &subset, &emb, cfg)?;
    Ok(error_rate_counting(&result, direction, selection))
}
