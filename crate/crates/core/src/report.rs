//! JSON output documents and their Markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cli::RunManifest;
use crate::corpus::{StatsReport, TransformCategory};
use crate::ranking::{Polarity, RankingReport, SIGNIFICANCE_LEVEL};
use crate::scoring::ErrorReport;

/// Output of `stats` and `augment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument {
    #[serde(flatten)]
    pub stats: StatsReport,
    pub manifest: RunManifest,
}

/// Output of `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDocument {
    #[serde(flatten)]
    pub report: ErrorReport,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    /// Machine name, e.g. `entity+misaligned`.
    pub subset: String,
    pub title: String,
    pub report: ErrorReport,
}

/// Output of `ablate`: the full xsim++ report plus one report per subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationDocument {
    pub direction: String,
    pub reference: ErrorReport,
    pub subsets: Vec<SubsetReport>,
    pub manifest: RunManifest,
}

impl AblationDocument {
    pub fn subset(&self, name: &str) -> Option<&ErrorReport> {
        self.subsets.iter().find(|s| s.subset == name).map(|s| &s.report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRanking {
    pub subset: String,
    pub title: String,
    pub report: RankingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRanking {
    pub label: String,
    pub report: RankingReport,
}

/// Output of `rank`. `overall.p_value` is the one-sided bootstrap p-value
/// of the proxy against the baseline, when there is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDocument {
    pub polarity: Polarity,
    pub label: String,
    pub overall: RankingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineRanking>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within: Option<RankingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub across: Option<RankingReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<SubsetRanking>,
    pub manifest: RunManifest,
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

/// Candidate statistics, one column pair per labelled set.
pub fn stats_table(sets: &[(&str, &StatsReport)]) -> String {
    let mut out = String::new();
    let multi = sets.len() > 1;
    out.push('|');
    out.push_str(" |");
    for (label, _) in sets {
        if multi {
            let _ = write!(out, " {label} Total # | {label} # per orig. |");
        } else {
            out.push_str(" Total # | # per orig. |");
        }
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---:|---:|".repeat(sets.len()));
    out.push('\n');
    out.push_str("| Original |");
    for (_, s) in sets {
        let _ = write!(out, " {} | - |", s.originals);
    }
    out.push('\n');
    for cat in TransformCategory::ALL {
        let _ = write!(out, "| {} |", cat.title());
        for (_, s) in sets {
            match s.categories.get(cat.as_str()) {
                Some(c) => {
                    let _ = write!(out, " {} | {} |", c.total, two(c.per_original));
                }
                None => out.push_str(" 0 | 0.00 |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Error rates of one system per error-category combination.
pub fn ablation_table(doc: &AblationDocument) -> String {
    let mut out = format!("Direction: {}\n\n", doc.direction);
    out.push_str("| Errors counted | Candidates | Error rate (%) |\n|---|---:|---:|\n");
    let _ = writeln!(
        out,
        "| xsim++ | {} | {} |",
        doc.reference.config.candidates,
        two(doc.reference.error_rate)
    );
    for s in &doc.subsets {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            s.title,
            s.report.config.candidates,
            two(s.report.error_rate)
        );
    }
    out
}

fn accuracy_cell(r: &RankingReport) -> String {
    if r.empty {
        "n/a".to_owned()
    } else {
        two(r.accuracy)
    }
}

/// Pairwise ranking accuracy: the headline comparison, the within/across
/// splits and the per-combination ablation, whichever are present.
pub fn ranking_table(doc: &RankingDocument) -> String {
    let mut out = String::from("| Metric | Accuracy |\n|---|---:|\n");
    if let Some(b) = &doc.baseline {
        let _ = writeln!(out, "| {} | {} |", b.label, accuracy_cell(&b.report));
    }
    let marker = match doc.overall.p_value {
        Some(p) if p < SIGNIFICANCE_LEVEL => "*",
        _ => "",
    };
    let _ = writeln!(out, "| {} | {}{} |", doc.label, accuracy_cell(&doc.overall), marker);
    out.push('\n');
    if let Some(p) = doc.overall.p_value {
        let baseline = doc.baseline.as_ref().map_or("the baseline", |b| &b.label);
        let _ = writeln!(out, "p = {p:.3} against {baseline} (* marks p < {SIGNIFICANCE_LEVEL}).");
    }
    let _ = writeln!(
        out,
        "{} system pairs over {} directions.",
        doc.overall.total_pairs,
        doc.overall.pairs_per_direction.len()
    );

    if doc.within.is_some() || doc.across.is_some() {
        out.push_str("\n| Metric | Within | Across |\n|---|---:|---:|\n");
        let cell = |r: &Option<RankingReport>| r.as_ref().map_or("n/a".to_owned(), accuracy_cell);
        let _ = writeln!(out, "| {} | {} | {} |", doc.label, cell(&doc.within), cell(&doc.across));
    }

    if !doc.subsets.is_empty() {
        out.push_str("\n| Errors counted | Accuracy |\n|---|---:|\n");
        let _ = writeln!(out, "| {} | {} |", doc.label, accuracy_cell(&doc.overall));
        for s in &doc.subsets {
            let _ = writeln!(out, "| {} | {} |", s.title, accuracy_cell(&s.report));
        }
    }
    out
}
