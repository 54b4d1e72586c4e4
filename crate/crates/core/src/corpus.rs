//! Evaluation sets, candidate sets and their on-disk formats.
//!
//! A [`CandidateSet`] is the interchange artifact between augmentation and
//! alignment. It always starts with the `N` original references in order,
//! followed by the transformed negatives. On disk it is a TSV file:
//!
//! ```text
//! #xsimpp-candidates v1
//! <text>\t<origin>\t<kind>
//! ```
//!
//! where `kind` is one of `original`, `causality`, `entity`, `number`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Header line of the candidate TSV format.
pub const CANDIDATE_HEADER: &str = "#xsimpp-candidates v1";

/// Default maximum number of transformations per (origin, category).
pub const DEFAULT_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: invalid UTF-8 on line {line}")]
    Encoding { path: PathBuf, line: usize },
    #[error("{path}: line {line} is empty")]
    EmptyLine { path: PathBuf, line: usize },
    #[error("{path}: line {line} contains a tab or carriage return")]
    ControlCharacter { path: PathBuf, line: usize },
    #[error("line count mismatch: {sources} source sentences vs {references} references")]
    LengthMismatch { sources: usize, references: usize },
    #[error("evaluation set is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("candidate set invariant violated: {0}")]
    InvariantViolation(String),
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Aligned source-language sentences and English references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSet {
    direction: String,
    sources: Vec<String>,
    references: Vec<String>,
}

impl EvalSet {
    pub fn new(
        direction: impl Into<String>,
        sources: Vec<String>,
        references: Vec<String>,
    ) -> Result<Self, CorpusError> {
        if sources.len() != references.len() {
            return Err(CorpusError::LengthMismatch {
                sources: sources.len(),
                references: references.len(),
            });
        }
        if sources.is_empty() {
            return Err(CorpusError::Empty);
        }
        let blank = |v: &[String]| v.iter().position(|s| s.trim().is_empty());
        if let Some(i) = blank(&sources).or_else(|| blank(&references)) {
            return Err(CorpusError::EmptyLine {
                path: PathBuf::from("<memory>"),
                line: i + 1,
            });
        }
        Ok(Self {
            direction: direction.into(),
            sources,
            references,
        })
    }

    pub fn direction(&self) -> &str {
        &self.direction
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn references(&self) -> &[String] {
        &self.references
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }
}

/// Reads a one-sentence-per-line UTF-8 file.
///
/// A single trailing newline is accepted. Blank lines, tabs and carriage
/// returns are rejected so every sentence can be stored in a TSV column.
pub fn load_sentences(path: impl AsRef<Path>) -> Result<Vec<String>, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let body = bytes.strip_suffix(b"\n").unwrap_or(&bytes);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let line = i + 1;
            let text = std::str::from_utf8(raw).map_err(|_| CorpusError::Encoding {
                path: path.to_path_buf(),
                line,
            })?;
            if text.contains(['\t', '\r']) {
                return Err(CorpusError::ControlCharacter {
                    path: path.to_path_buf(),
                    line,
                });
            }
            if text.trim().is_empty() {
                return Err(CorpusError::EmptyLine {
                    path: path.to_path_buf(),
                    line,
                });
            }
            Ok(text.to_owned())
        })
        .collect()
}

/// Loads a parallel evaluation set; line `i` of both files pair together.
pub fn load_eval_set(
    src_path: impl AsRef<Path>,
    ref_path: impl AsRef<Path>,
    direction: &str,
) -> Result<EvalSet, CorpusError> {
    let sources = load_sentences(src_path)?;
    let references = load_sentences(ref_path)?;
    EvalSet::new(direction, sources, references)
}

/// The three families of hard-negative transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformCategory {
    Causality,
    Entity,
    Number,
}

impl TransformCategory {
    pub const ALL: [TransformCategory; 3] = [
        TransformCategory::Causality,
        TransformCategory::Entity,
        TransformCategory::Number,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformCategory::Causality => "causality",
            TransformCategory::Entity => "entity",
            TransformCategory::Number => "number",
        }
    }

    /// Display name used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            TransformCategory::Causality => "Causality",
            TransformCategory::Entity => "Entity",
            TransformCategory::Number => "Number",
        }
    }
}

impl fmt::Display for TransformCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "causality" => Ok(TransformCategory::Causality),
            "entity" => Ok(TransformCategory::Entity),
            "number" => Ok(TransformCategory::Number),
            other => Err(format!("unknown transform category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateKind {
    Original,
    Transformed(TransformCategory),
}

impl CandidateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::Original => "original",
            CandidateKind::Transformed(c) => c.as_str(),
        }
    }

    pub fn category(self) -> Option<TransformCategory> {
        match self {
            CandidateKind::Original => None,
            CandidateKind::Transformed(c) => Some(c),
        }
    }
}

impl FromStr for CandidateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            Ok(CandidateKind::Original)
        } else {
            s.parse().map(CandidateKind::Transformed)
        }
    }
}

/// One English target candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub text: String,
    pub origin: usize,
    pub kind: CandidateKind,
}

impl Candidate {
    pub fn original(text: impl Into<String>, origin: usize) -> Self {
        Self {
            text: text.into(),
            origin,
            kind: CandidateKind::Original,
        }
    }

    pub fn transformed(text: impl Into<String>, origin: usize, category: TransformCategory) -> Self {
        Self {
            text: text.into(),
            origin,
            kind: CandidateKind::Transformed(category),
        }
    }

    pub fn is_original(&self) -> bool {
        self.kind == CandidateKind::Original
    }
}

/// Originals followed by transformed negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
    num_originals: usize,
}

impl CandidateSet {
    /// Builds a set from its originals alone: the classic xsim candidate pool.
    pub fn from_originals(references: &[String]) -> Self {
        Self {
            candidates: references
                .iter()
                .enumerate()
                .map(|(i, r)| Candidate::original(r.clone(), i))
                .collect(),
            num_originals: references.len(),
        }
    }

    /// Validates structural invariants. The cap is not checked here; see
    /// [`CandidateSet::check_cap`].
    pub fn from_candidates(candidates: Vec<Candidate>) -> Result<Self, CorpusError> {
        let num_originals = candidates.iter().take_while(|c| c.is_original()).count();
        let set = Self {
            candidates,
            num_originals,
        };
        set.validate()?;
        Ok(set)
    }

    /// Appends transformed candidates, dropping any whose text already exists.
    pub(crate) fn push_dedup(&mut self, seen: &mut HashSet<String>, candidate: Candidate) -> bool {
        debug_assert!(!candidate.is_original());
        if seen.contains(&candidate.text) {
            return false;
        }
        seen.insert(candidate.text.clone());
        self.candidates.push(candidate);
        true
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn originals(&self) -> &[Candidate] {
        &self.candidates[..self.num_originals]
    }

    pub fn transformed(&self) -> &[Candidate] {
        &self.candidates[self.num_originals..]
    }

    pub fn num_originals(&self) -> usize {
        self.num_originals
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Candidate> {
        self.candidates.get(index)
    }

    /// Categories that occur at least once among the transformed candidates.
    pub fn categories_present(&self) -> Vec<TransformCategory> {
        self.transformed()
            .iter()
            .filter_map(|c| c.kind.category())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Keeps originals plus transforms whose category is in `keep`. Returns
    /// the filtered set and the row indices of the kept candidates.
    pub fn filter_categories(&self, keep: &[TransformCategory]) -> (CandidateSet, Vec<usize>) {
        let rows: Vec<usize> = self
            .candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| match c.kind {
                CandidateKind::Original => true,
                CandidateKind::Transformed(cat) => keep.contains(&cat),
            })
            .map(|(i, _)| i)
            .collect();
        let set = CandidateSet {
            candidates: rows.iter().map(|&i| self.candidates[i].clone()).collect(),
            num_originals: self.num_originals,
        };
        (set, rows)
    }

    /// Number of transformed candidates for each (origin, category).
    pub fn transform_counts(&self) -> HashMap<(usize, TransformCategory), usize> {
        let mut counts = HashMap::new();
        for c in self.transformed() {
            if let Some(cat) = c.kind.category() {
                *counts.entry((c.origin, cat)).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn check_cap(&self, cap: usize) -> Result<(), CorpusError> {
        for ((origin, cat), n) in self.transform_counts() {
            if n > cap {
                return Err(CorpusError::InvariantViolation(format!(
                    "origin {origin} has {n} {cat} transforms, cap is {cap}"
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let violation = |m: String| Err(CorpusError::InvariantViolation(m));
        if self.num_originals == 0 {
            return violation("no original candidates".into());
        }
        let mut seen: HashSet<&str> = HashSet::with_capacity(self.candidates.len());
        for (i, c) in self.candidates.iter().enumerate() {
            if c.text.is_empty() || c.text.contains(['\t', '\n', '\r']) {
                return violation(format!("row {i}: text is empty or has control characters"));
            }
            if i < self.num_originals {
                if c.origin != i {
                    return violation(format!("original at row {i} has origin {}", c.origin));
                }
                // Duplicate references are legal; each still needs its own row.
                seen.insert(&c.text);
                continue;
            }
            if c.is_original() {
                return violation(format!("original at row {i} follows transformed rows"));
            }
            if c.origin >= self.num_originals {
                return violation(format!("row {i}: origin {} out of range", c.origin));
            }
            if c.text == self.candidates[c.origin].text {
                return violation(format!("row {i}: transform equals its origin"));
            }
            if !seen.insert(&c.text) {
                return violation(format!("row {i}: duplicate text"));
            }
        }
        Ok(())
    }
}

pub fn write_candidate_set(set: &CandidateSet, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    set.validate()?;
    let file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_candidates_to(set, &mut out).map_err(|e| CorpusError::io(path, e))?;
    out.flush().map_err(|e| CorpusError::io(path, e))
}

/// Serializes a set into the candidate TSV format.
pub fn write_candidates_to(set: &CandidateSet, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CANDIDATE_HEADER}")?;
    for c in &set.candidates {
        writeln!(out, "{}\t{}\t{}", c.text, c.origin, c.kind.as_str())?;
    }
    Ok(())
}

pub fn read_candidate_set(path: impl AsRef<Path>) -> Result<CandidateSet, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        CorpusError::Encoding {
            path: path.to_path_buf(),
            line: valid.iter().filter(|&&b| b == b'\n').count() + 1,
        }
    })?;
    parse_candidates(&text)
}

/// Parses the candidate TSV format.
pub fn parse_candidates(text: &str) -> Result<CandidateSet, CorpusError> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(CANDIDATE_HEADER) => {}
        _ => {
            return Err(CorpusError::Format {
                line: 1,
                message: format!("expected header {CANDIDATE_HEADER:?}"),
            })
        }
    }
    let body: Vec<&str> = lines.collect();
    let body = match body.split_last() {
        Some((&"", rest)) => rest,
        _ => {
            return Err(CorpusError::Format {
                line: body.len() + 1,
                message: "missing trailing newline".into(),
            })
        }
    };
    let mut candidates = Vec::with_capacity(body.len());
    for (i, row) in body.iter().enumerate() {
        let line = i + 2;
        let format = |message: String| CorpusError::Format { line, message };
        let fields: Vec<&str> = row.split('\t').collect();
        let [text, origin, kind] = fields[..] else {
            return Err(format(format!("expected 3 columns, found {}", fields.len())));
        };
        let origin = origin
            .parse::<usize>()
            .map_err(|_| format(format!("invalid origin {origin:?}")))?;
        let kind = kind.parse::<CandidateKind>().map_err(format)?;
        candidates.push(Candidate {
            text: text.to_owned(),
            origin,
            kind,
        });
    }
    CandidateSet::from_candidates(candidates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: usize,
    pub per_original: f64,
}

/// Per-category totals and per-original averages of a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub originals: usize,
    pub categories: BTreeMap<String, CategoryStats>,
}

/// `round_half_up(100 * total / originals) / 100`, computed in integers.
fn per_original(total: usize, originals: usize) -> f64 {
    let (t, n) = (total as u128, originals as u128);
    let hundredths = (200 * t + n) / (2 * n);
    hundredths as f64 / 100.0
}

pub fn candidate_stats(set: &CandidateSet) -> StatsReport {
    let originals = set.num_originals();
    let categories = TransformCategory::ALL
        .iter()
        .map(|&cat| {
            let total = set
                .transformed()
                .iter()
                .filter(|c| c.kind == CandidateKind::Transformed(cat))
                .count();
            let stats = CategoryStats {
                total,
                per_original: if originals == 0 {
                    0.0
                } else {
                    per_original(total, originals)
                },
            };
            (cat.as_str().to_owned(), stats)
        })
        .collect();
    StatsReport {
        originals,
        categories,
    }
}
