//! Margin-based nearest-neighbour alignment over sentence embeddings.
//!
//! For a source vector `x` and a candidate `y` with cosine `a = cos(x, y)`,
//! the neighbourhood term is
//!
//! ```text
//! b = (Σ_{z ∈ NN_k(x, candidates)} cos(x, z) + Σ_{v ∈ NN_k(y, sources)} cos(y, v)) / 2k
//! ```
//!
//! and the margin is `a` (absolute), `a / b` (ratio) or `a - b` (distance).
//! Each source is aligned to the argmax candidate, lowest index on ties.
//! Neighbourhoods are found by exhaustive search; dot products of the fp32
//! inputs are accumulated in f64.

use std::borrow::Cow;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Candidate, CandidateKind, CandidateSet, TransformCategory};

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 4;

/// Default embedding dimensionality of the raw fp32 files.
pub const DEFAULT_DIM: usize = 1024;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("{bytes} bytes is not a whole number of {dim}-dimensional fp32 rows")]
    SizeMismatch { bytes: usize, dim: usize },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("embeddings must be normalized before scoring")]
    NotNormalized,
    #[error("{what}: expected {expected} rows, found {found}")]
    RowCountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid margin config: {0}")]
    Config(String),
}

/// Dense row-major fp32 matrix, one row per sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self, AlignError> {
        if dim == 0 {
            return Err(AlignError::ZeroDim);
        }
        if data.len() != rows * dim {
            return Err(AlignError::SizeMismatch {
                bytes: data.len() * 4,
                dim,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(AlignError::NonFinite { row: i / dim });
        }
        Ok(Self {
            rows,
            dim,
            data,
            normalized: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, AlignError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(AlignError::DimMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// L2-normalizes every row. Zero rows are rejected.
    pub fn normalized(&self) -> Result<Self, AlignError> {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            let row = self.row(i);
            let norm = dot(row, row).sqrt();
            if norm == 0.0 {
                return Err(AlignError::ZeroRow { row: i });
            }
            data.extend(row.iter().map(|&v| (f64::from(v) / norm) as f32));
        }
        Ok(Self {
            rows: self.rows,
            dim: self.dim,
            data,
            normalized: true,
        })
    }

    /// Rows `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            dim: self.dim,
            data,
            normalized: self.normalized,
        }
    }
}

/// Reads a headerless little-endian fp32 file with `dim` columns.
pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingMatrix, AlignError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| AlignError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embeddings(&bytes, dim)
}

pub fn parse_embeddings(bytes: &[u8], dim: usize) -> Result<EmbeddingMatrix, AlignError> {
    if dim == 0 {
        return Err(AlignError::ZeroDim);
    }
    if !bytes.len().is_multiple_of(4 * dim) {
        return Err(AlignError::SizeMismatch {
            bytes: bytes.len(),
            dim,
        });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingMatrix::new(bytes.len() / (4 * dim), dim, data)
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), AlignError> {
    let path = path.as_ref();
    let io_err = |source| AlignError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for v in &matrix.data {
        out.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margin {
    Absolute,
    Ratio,
    Distance,
}

impl Margin {
    pub fn as_str(self) -> &'static str {
        match self {
            Margin::Absolute => "absolute",
            Margin::Ratio => "ratio",
            Margin::Distance => "distance",
        }
    }

    pub fn apply(self, cosine: f64, neighbourhood: f64) -> f64 {
        match self {
            Margin::Absolute => cosine,
            Margin::Ratio => cosine / neighbourhood,
            Margin::Distance => cosine - neighbourhood,
        }
    }
}

impl fmt::Display for Margin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Margin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "absolute" => Ok(Margin::Absolute),
            "ratio" => Ok(Margin::Ratio),
            "distance" => Ok(Margin::Distance),
            other => Err(format!("unknown margin {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginConfig {
    pub margin: Margin,
    pub k: usize,
}

impl Default for MarginConfig {
    fn default() -> Self {
        Self {
            margin: Margin::Absolute,
            k: DEFAULT_K,
        }
    }
}

impl MarginConfig {
    pub fn new(margin: Margin, k: usize) -> Self {
        Self { margin, k }
    }

    /// `1 <= k < min(source_rows, candidate_rows)`.
    pub fn validate(&self, source_rows: usize, candidate_rows: usize) -> Result<(), AlignError> {
        let limit = source_rows.min(candidate_rows);
        if self.k == 0 || self.k >= limit {
            return Err(AlignError::Config(format!(
                "k = {} must satisfy 1 <= k < {limit}",
                self.k
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Mean of the `k` largest values.
fn top_k_mean(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for v in values {
        if best.len() < k || v > best[best.len() - 1] {
            let pos = best.partition_point(|&b| b >= v);
            best.insert(pos, v);
            best.truncate(k);
        }
    }
    best.iter().sum::<f64>() / k as f64
}

fn check_pair(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, cfg: &MarginConfig) -> Result<(), AlignError> {
    if !src.normalized || !tgt.normalized {
        return Err(AlignError::NotNormalized);
    }
    if src.dim != tgt.dim {
        return Err(AlignError::DimMismatch {
            left: src.dim,
            right: tgt.dim,
        });
    }
    cfg.validate(src.rows, tgt.rows)
}

/// Precomputed neighbourhood means on the candidate side
/// (`NN_k(y, sources)` for every candidate `y`). Empty for the absolute
/// margin, which does not use them.
fn candidate_neighbourhoods(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, cfg: &MarginConfig) -> Vec<f64> {
    if cfg.margin == Margin::Absolute {
        return Vec::new();
    }
    (0..tgt.rows)
        .into_par_iter()
        .map(|y| {
            let cand = tgt.row(y);
            top_k_mean((0..src.rows).map(|x| dot(src.row(x), cand)), cfg.k)
        })
        .collect()
}

/// Margin scores of one source row against every candidate.
fn score_row(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    cfg: &MarginConfig,
    tgt_nn: &[f64],
    x: usize,
    buf: &mut Vec<f64>,
) {
    let row = src.row(x);
    buf.clear();
    buf.extend((0..tgt.rows).map(|y| dot(row, tgt.row(y))));
    if cfg.margin == Margin::Absolute {
        return;
    }
    let src_nn = top_k_mean(buf.iter().copied(), cfg.k);
    for (score, &cand_nn) in buf.iter_mut().zip(tgt_nn) {
        *score = cfg.margin.apply(*score, (src_nn + cand_nn) / 2.0);
    }
}

/// Dense source × candidate margin score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// Full margin score matrix. Both inputs must be normalized.
pub fn pairwise_scores(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    cfg: &MarginConfig,
) -> Result<ScoreMatrix, AlignError> {
    check_pair(src, tgt, cfg)?;
    let tgt_nn = candidate_neighbourhoods(src, tgt, cfg);
    let rows: Vec<Vec<f64>> = (0..src.rows)
        .into_par_iter()
        .map(|x| {
            let mut buf = Vec::with_capacity(tgt.rows);
            score_row(src, tgt, cfg, &tgt_nn, x, &mut buf);
            buf
        })
        .collect();
    Ok(ScoreMatrix {
        rows: src.rows,
        cols: tgt.rows,
        data: rows.concat(),
    })
}

/// Index and value of the maximum; the first index wins ties and NaN never
/// wins.
fn argmax(scores: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Correct,
    Category(TransformCategory),
    Misaligned,
}

impl ErrorKind {
    pub fn is_error(self) -> bool {
        self != ErrorKind::Correct
    }
}

/// Classifies a prediction for source `source_index`: its own original is
/// correct, its own transform is a category error, anything with another
/// origin is misaligned.
pub fn decide_error(source_index: usize, predicted: &Candidate) -> ErrorKind {
    if predicted.origin != source_index {
        return ErrorKind::Misaligned;
    }
    match predicted.kind {
        CandidateKind::Original => ErrorKind::Correct,
        CandidateKind::Transformed(c) => ErrorKind::Category(c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub source: usize,
    pub predicted: usize,
    pub score: f64,
    pub error_kind: ErrorKind,
}

impl Prediction {
    pub fn is_error(&self) -> bool {
        self.error_kind.is_error()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub config: MarginConfig,
    pub num_candidates: usize,
    pub categories_included: Vec<TransformCategory>,
    pub predictions: Vec<Prediction>,
}

impl AlignmentResult {
    pub fn errors(&self) -> usize {
        self.predictions.iter().filter(|p| p.is_error()).count()
    }
}

fn normalize_cow(m: &EmbeddingMatrix) -> Result<Cow<'_, EmbeddingMatrix>, AlignError> {
    if m.normalized {
        Ok(Cow::Borrowed(m))
    } else {
        m.normalized().map(Cow::Owned)
    }
}

/// Aligns every source row to its best-scoring candidate. Unnormalized
/// inputs are normalized first.
pub fn align(
    src: &EmbeddingMatrix,
    candidates: &CandidateSet,
    cand_emb: &EmbeddingMatrix,
    cfg: &MarginConfig,
) -> Result<AlignmentResult, AlignError> {
    if cand_emb.rows != candidates.len() {
        return Err(AlignError::RowCountMismatch {
            what: "candidate embeddings",
            expected: candidates.len(),
            found: cand_emb.rows,
        });
    }
    if src.rows != candidates.num_originals() {
        return Err(AlignError::RowCountMismatch {
            what: "source embeddings",
            expected: candidates.num_originals(),
            found: src.rows,
        });
    }
    let src = normalize_cow(src)?;
    let tgt = normalize_cow(cand_emb)?;
    check_pair(&src, &tgt, cfg)?;

    let tgt_nn = candidate_neighbourhoods(&src, &tgt, cfg);
    let predictions = (0..src.rows)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(tgt.rows),
            |buf, x| {
                score_row(&src, &tgt, cfg, &tgt_nn, x, buf);
                let (predicted, score) = argmax(buf);
                Prediction {
                    source: x,
                    predicted,
                    score,
                    error_kind: decide_error(x, &candidates.candidates()[predicted]),
                }
            },
        )
        .collect();
    Ok(AlignmentResult {
        config: *cfg,
        num_candidates: candidates.len(),
        categories_included: candidates.categories_present(),
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f32]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn bytes(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn loads_raw_fp32() {
        let m = parse_embeddings(&bytes(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!((m.rows(), m.dim()), (2, 2));
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert!(!m.is_normalized());
        assert!(matches!(
            parse_embeddings(&[0u8; 17], 2),
            Err(AlignError::SizeMismatch { bytes: 17, dim: 2 })
        ));
        let nan = parse_embeddings(&bytes(&[1.0, 2.0, 3.0, f32::NAN]), 2);
        assert!(matches!(nan, Err(AlignError::NonFinite { row: 1 })));
        assert!(matches!(parse_embeddings(&[], 0), Err(AlignError::ZeroDim)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let m = matrix(&[&[1.0, -2.5], &[0.25, 8.0]]);
        write_embeddings(&m, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16);
        assert_eq!(load_embeddings(&path, 2).unwrap(), m);
    }

    #[test]
    fn normalization() {
        let m = matrix(&[&[3.0, 4.0], &[0.0, -2.0]]).normalized().unwrap();
        assert!(m.is_normalized());
        assert_eq!(m.row(0), &[0.6, 0.8]);
        for i in 0..m.rows() {
            assert!((dot(m.row(i), m.row(i)).sqrt() - 1.0).abs() < 1e-5);
        }
        assert!(matches!(
            matrix(&[&[1.0, 1.0], &[0.0, 0.0]]).normalized(),
            Err(AlignError::ZeroRow { row: 1 })
        ));
    }

    #[test]
    fn k_must_be_below_row_counts() {
        let one = matrix(&[&[1.0, 0.0]]).normalized().unwrap();
        let cfg = MarginConfig::new(Margin::Absolute, 1);
        assert!(matches!(pairwise_scores(&one, &one, &cfg), Err(AlignError::Config(_))));
        let two = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]).normalized().unwrap();
        assert!(pairwise_scores(&two, &two, &MarginConfig::new(Margin::Ratio, 0)).is_err());
        assert!(pairwise_scores(&two, &two, &MarginConfig::new(Margin::Ratio, 2)).is_err());
        assert!(pairwise_scores(&two, &two, &MarginConfig::new(Margin::Ratio, 1)).is_ok());
    }

    #[test]
    fn scores_require_normalized_matching_dims() {
        let raw = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let cfg = MarginConfig::new(Margin::Absolute, 1);
        assert!(matches!(pairwise_scores(&raw, &raw, &cfg), Err(AlignError::NotNormalized)));
        let three = matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).normalized().unwrap();
        let norm = raw.normalized().unwrap();
        assert!(matches!(
            pairwise_scores(&norm, &three, &cfg),
            Err(AlignError::DimMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn absolute_on_orthonormal_is_identity() {
        let eye = matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])
            .normalized()
            .unwrap();
        let s = pairwise_scores(&eye, &eye, &MarginConfig::new(Margin::Absolute, 1)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn top_k_mean_picks_largest() {
        assert_eq!(top_k_mean([0.1, 0.9, 0.5, 0.7].into_iter(), 2), 0.8);
        assert_eq!(top_k_mean([0.3, 0.3, 0.3].into_iter(), 3), 0.3 * 3.0 / 3.0);
    }

    #[test]
    fn error_classification() {
        use TransformCategory::*;
        assert_eq!(decide_error(5, &Candidate::original("a", 5)), ErrorKind::Correct);
        assert_eq!(
            decide_error(5, &Candidate::transformed("b", 5, Entity)),
            ErrorKind::Category(Entity)
        );
        assert_eq!(
            decide_error(5, &Candidate::transformed("c", 9, Number)),
            ErrorKind::Misaligned
        );
        assert_eq!(decide_error(5, &Candidate::original("d", 2)), ErrorKind::Misaligned);
    }

    fn three_originals() -> CandidateSet {
        CandidateSet::from_candidates(vec![
            Candidate::original("a", 0),
            Candidate::original("b", 1),
            Candidate::original("c", 2),
            Candidate::transformed("a2", 0, TransformCategory::Entity),
        ])
        .unwrap()
    }

    #[test]
    fn forced_argmax_has_no_errors() {
        let set = three_originals();
        let src = matrix(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]]);
        let cand = matrix(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let r = align(&src, &set, &cand, &MarginConfig::new(Margin::Absolute, 1)).unwrap();
        assert_eq!(r.errors(), 0);
        assert_eq!(r.categories_included, vec![TransformCategory::Entity]);
    }

    #[test]
    fn equal_candidates_tie_break_to_zero() {
        let set = three_originals();
        let src = matrix(&[&[1.0, 0.2], &[0.3, 1.0], &[-1.0, 0.5]]);
        let cand = matrix(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        for margin in [Margin::Absolute, Margin::Ratio, Margin::Distance] {
            let r = align(&src, &set, &cand, &MarginConfig::new(margin, 1)).unwrap();
            assert!(r.predictions.iter().all(|p| p.predicted == 0));
            let kinds: Vec<_> = r.predictions.iter().map(|p| p.error_kind).collect();
            assert_eq!(kinds, vec![ErrorKind::Correct, ErrorKind::Misaligned, ErrorKind::Misaligned]);
        }
    }

    #[test]
    fn row_count_checks() {
        let set = three_originals();
        let src = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let short = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            align(&src, &set, &short, &MarginConfig::new(Margin::Absolute, 1)),
            Err(AlignError::RowCountMismatch { expected: 4, found: 3, .. })
        ));
        let cand = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[1.0, 2.0]]);
        assert!(matches!(
            align(&short.select_rows(&[0, 1]), &set, &cand, &MarginConfig::new(Margin::Absolute, 1)),
            Err(AlignError::RowCountMismatch { expected: 3, found: 2, .. })
        ));
    }
}
