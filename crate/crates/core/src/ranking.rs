//! Pairwise ranking accuracy of a proxy metric against downstream scores.
//!
//! Systems are only compared within a language direction. A pair is
//! concordant when the oriented proxy difference and the downstream
//! difference have the same sign; pairs where either difference is exactly
//! zero are tied and count in the denominator only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Default number of bootstrap resamples.
pub const DEFAULT_RESAMPLES: usize = 1000;

/// One-sided significance threshold.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("records line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no language direction has at least two systems")]
    InsufficientSystems,
    #[error("system {system_id:?} in {direction:?} has no within/across group tag")]
    MissingGroupTags { system_id: String, direction: String },
    #[error("proxies are not scored over the same system pairs: {0}")]
    PopulationMismatch(String),
    #[error("duplicate system {system_id:?} in {direction:?}")]
    DuplicateSystem { system_id: String, direction: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// A checkpoint of the model family under study.
    Within,
    /// An external reference system.
    Across,
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "within" => Ok(Group::Within),
            "across" => Ok(Group::Across),
            other => Err(format!("unknown group {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub system_id: String,
    pub direction: String,
    pub proxy: f64,
    pub downstream: f64,
    pub group: Option<Group>,
}

impl SystemRecord {
    pub fn new(system_id: &str, direction: &str, proxy: f64, downstream: f64) -> Self {
        Self {
            system_id: system_id.to_owned(),
            direction: direction.to_owned(),
            proxy,
            downstream,
            group: None,
        }
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = Some(group);
        self
    }
}

/// Orientation of the proxy metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Lower is better (error rates).
    Error,
    /// Higher is better.
    Score,
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(Polarity::Error),
            "score" => Ok(Polarity::Score),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Error => "error",
            Polarity::Score => "score",
        })
    }
}

/// Reads `system_id<TAB>direction<TAB>proxy<TAB>downstream[<TAB>group]`.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<SystemRecord>, RankingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| RankingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_records(&text)
}

pub fn parse_records(text: &str) -> Result<Vec<SystemRecord>, RankingError> {
    let mut records: Vec<SystemRecord> = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i + 1;
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let err = |message: String| RankingError::Format { line, message };
        let fields: Vec<&str> = row.split('\t').collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(err(format!("expected 4 or 5 columns, found {}", fields.len())));
        }
        let number = |s: &str| match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err(format!("invalid number {s:?}"))),
        };
        let group = match fields.get(4) {
            Some(g) => Some(g.trim().parse::<Group>().map_err(err)?),
            None => None,
        };
        let record = SystemRecord {
            system_id: fields[0].to_owned(),
            direction: fields[1].to_owned(),
            proxy: number(fields[2])?,
            downstream: number(fields[3])?,
            group,
        };
        if records
            .iter()
            .any(|r| r.system_id == record.system_id && r.direction == record.direction)
        {
            return Err(RankingError::DuplicateSystem {
                system_id: record.system_id,
                direction: record.direction,
            });
        }
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairOutcome {
    Concordant,
    Discordant,
    Tied,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn pair_outcome(a: &SystemRecord, b: &SystemRecord, polarity: Polarity) -> PairOutcome {
    let proxy_delta = match polarity {
        Polarity::Error => b.proxy - a.proxy,
        Polarity::Score => a.proxy - b.proxy,
    };
    let mining_delta = a.downstream - b.downstream;
    match (sign(proxy_delta), sign(mining_delta)) {
        (0, _) | (_, 0) => PairOutcome::Tied,
        (p, m) if p == m => PairOutcome::Concordant,
        _ => PairOutcome::Discordant,
    }
}

/// An unordered within-direction pair, as indices into the record slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemPair {
    pub first: usize,
    pub second: usize,
}

/// Records grouped by direction (sorted by name), input order kept inside
/// each direction.
fn by_direction(records: &[SystemRecord]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.direction.as_str()).or_default().push(i);
    }
    groups
}

/// Every within-direction pair, selected by `keep`.
fn pairs_where(records: &[SystemRecord], keep: impl Fn(&SystemRecord, &SystemRecord) -> bool) -> Vec<SystemPair> {
    let mut pairs = Vec::new();
    for members in by_direction(records).values() {
        for (n, &i) in members.iter().enumerate() {
            for &j in &members[n + 1..] {
                if keep(&records[i], &records[j]) {
                    pairs.push(SystemPair { first: i, second: j });
                }
            }
        }
    }
    pairs
}

pub fn system_pairs(records: &[SystemRecord]) -> Vec<SystemPair> {
    pairs_where(records, |_, _| true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub accuracy: f64,
    pub total_pairs: usize,
    pub concordant: usize,
    pub discordant: usize,
    pub tied: usize,
    pub pairs_per_direction: BTreeMap<String, usize>,
    pub empty: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

fn report_for(records: &[SystemRecord], pairs: &[SystemPair], polarity: Polarity) -> RankingReport {
    let mut report = RankingReport {
        accuracy: 0.0,
        total_pairs: pairs.len(),
        concordant: 0,
        discordant: 0,
        tied: 0,
        pairs_per_direction: BTreeMap::new(),
        empty: pairs.is_empty(),
        p_value: None,
    };
    for p in pairs {
        let (a, b) = (&records[p.first], &records[p.second]);
        *report
            .pairs_per_direction
            .entry(a.direction.clone())
            .or_default() += 1;
        match pair_outcome(a, b, polarity) {
            PairOutcome::Concordant => report.concordant += 1,
            PairOutcome::Discordant => report.discordant += 1,
            PairOutcome::Tied => report.tied += 1,
        }
    }
    if !pairs.is_empty() {
        report.accuracy = 100.0 * report.concordant as f64 / pairs.len() as f64;
    }
    report
}

/// Accuracy over every within-direction system pair.
pub fn pairwise_accuracy(records: &[SystemRecord], polarity: Polarity) -> Result<RankingReport, RankingError> {
    let pairs = system_pairs(records);
    if pairs.is_empty() {
        return Err(RankingError::InsufficientSystems);
    }
    Ok(report_for(records, &pairs, polarity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    /// Checkpoint-vs-checkpoint pairs.
    Within,
    /// Pairs with exactly one external system.
    Across,
}

fn require_groups(records: &[SystemRecord]) -> Result<(), RankingError> {
    match records.iter().find(|r| r.group.is_none()) {
        Some(r) => Err(RankingError::MissingGroupTags {
            system_id: r.system_id.clone(),
            direction: r.direction.clone(),
        }),
        None => Ok(()),
    }
}

fn split_pairs(records: &[SystemRecord], split: Split) -> Vec<SystemPair> {
    pairs_where(records, |a, b| match split {
        Split::Within => a.group == Some(Group::Within) && b.group == Some(Group::Within),
        Split::Across => (a.group == Some(Group::Across)) != (b.group == Some(Group::Across)),
    })
}

/// Accuracy over the within-model or across-model pairs only. An empty
/// split is reported with `empty = true` rather than as an error.
pub fn split_report(records: &[SystemRecord], split: Split, polarity: Polarity) -> Result<RankingReport, RankingError> {
    require_groups(records)?;
    Ok(report_for(records, &split_pairs(records, split), polarity))
}

fn key(r: &SystemRecord) -> (&str, &str) {
    (r.direction.as_str(), r.system_id.as_str())
}

/// Per-pair concordance of proxy A and proxy B over the shared pair
/// population of `records_a`.
fn paired_outcomes(
    records_a: &[SystemRecord],
    records_b: &[SystemRecord],
    pairs: &[SystemPair],
    polarity: Polarity,
) -> Result<(Vec<bool>, Vec<bool>), RankingError> {
    if records_a.len() != records_b.len() {
        return Err(RankingError::PopulationMismatch(format!(
            "{} vs {} systems",
            records_a.len(),
            records_b.len()
        )));
    }
    let index_b: HashMap<(&str, &str), &SystemRecord> = records_b.iter().map(|r| (key(r), r)).collect();
    for a in records_a {
        match index_b.get(&key(a)) {
            None => {
                return Err(RankingError::PopulationMismatch(format!(
                    "{}/{} missing from the second table",
                    a.direction, a.system_id
                )))
            }
            Some(b) if b.downstream != a.downstream => {
                return Err(RankingError::PopulationMismatch(format!(
                    "{}/{} has different downstream scores",
                    a.direction, a.system_id
                )))
            }
            Some(_) => {}
        }
    }
    let concordant = |x: &SystemRecord, y: &SystemRecord| pair_outcome(x, y, polarity) == PairOutcome::Concordant;
    let mut hits_a = Vec::with_capacity(pairs.len());
    let mut hits_b = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (x, y) = (&records_a[p.first], &records_a[p.second]);
        hits_a.push(concordant(x, y));
        hits_b.push(concordant(index_b[&key(x)], index_b[&key(y)]));
    }
    Ok((hits_a, hits_b))
}

/// Paired bootstrap over system pairs: the share of resamples in which
/// proxy A does not achieve a strictly higher accuracy than proxy B.
///
/// Resample `r` draws its pair indices from the stream
/// `seed::stream(seed, &[r])`.
pub fn bootstrap_p_value(hits_a: &[bool], hits_b: &[bool], resamples: usize, seed: u64) -> f64 {
    assert_eq!(hits_a.len(), hits_b.len());
    let n = hits_a.len();
    if n == 0 || resamples == 0 {
        return 1.0;
    }
    let losses: usize = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stream(seed, &[r as u64]);
            let (mut a, mut b) = (0usize, 0usize);
            for _ in 0..n {
                let i = rng.gen_range(0..n as u64) as usize;
                a += usize::from(hits_a[i]);
                b += usize::from(hits_b[i]);
            }
            usize::from(a <= b)
        })
        .sum();
    losses as f64 / resamples as f64
}

/// One-sided paired bootstrap p-value that proxy A ranks systems better than
/// proxy B against the same downstream scores.
pub fn significance(
    records_a: &[SystemRecord],
    records_b: &[SystemRecord],
    polarity: Polarity,
    resamples: usize,
    seed: u64,
) -> Result<f64, RankingError> {
    let pairs = system_pairs(records_a);
    if pairs.is_empty() {
        return Err(RankingError::InsufficientSystems);
    }
    let (hits_a, hits_b) = paired_outcomes(records_a, records_b, &pairs, polarity)?;
    Ok(bootstrap_p_value(&hits_a, &hits_b, resamples, seed))
}
