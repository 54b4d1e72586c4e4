//! The `xsimkit` command line: augment, score, ablate, rank, stats, report.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or format errors.
//! Machine-readable output is JSON (files or stdout); diagnostics go to
//! stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{load_embeddings, Margin, MarginConfig, DEFAULT_DIM, DEFAULT_K};
use crate::augment::{build_candidates, load_annotations, AugmentConfig, Lexicons};
use crate::corpus::{
    candidate_stats, load_sentences, read_candidate_set, write_candidate_set, StatsReport, TransformCategory,
    DEFAULT_CAP,
};
use crate::ranking::{
    load_records, pairwise_accuracy, significance, split_report, Group, Polarity, RankingReport, Split,
    SystemRecord, DEFAULT_RESAMPLES,
};
use crate::report::{
    ablation_table, ranking_table, stats_table, AblationDocument, BaselineRanking, RankingDocument, ScoreDocument,
    StatsDocument, SubsetRanking, SubsetReport,
};
use crate::scoring::{error_rate, subset_rescore, ErrorSelection};

pub const TOOL: &str = "xsimkit";

/// Reproducibility metadata embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunManifest {
    fn new(ctx: &Context, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        Self {
            tool: TOOL.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: ctx.command.clone(),
            config_digest: hex::encode(Sha256::digest(&canonical)),
            config,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            timestamp_unix: if ctx.timestamp {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .ok()
                    .map(|d| d.as_secs())
            } else {
                None
            },
        }
    }

    fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_owned(), value);
        self
    }

    fn input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs
            .insert(role.to_owned(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn io(path: &Path, e: io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_errors!(
    crate::corpus::CorpusError,
    crate::augment::AugmentError,
    crate::align::AlignError,
    crate::scoring::ScoringError,
    crate::ranking::RankingError,
    serde_json::Error
);

#[derive(Debug, Parser)]
#[command(name = "xsimkit", version, about = "Hard-negative augmented bitext mining evaluation")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Embedding dimensionality.
    #[arg(long, global = true, default_value_t = DEFAULT_DIM)]
    dim: usize,
    /// Leave the timestamp out of the run manifest.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand references into an xsim++ candidate set.
    Augment(AugmentArgs),
    /// Align sources against a candidate set and report error rates.
    Score(ScoreArgs),
    /// Error rates for combinations of error categories.
    Ablate(AblateArgs),
    /// Pairwise ranking accuracy of a proxy against downstream scores.
    Rank(RankArgs),
    /// Candidate statistics of a candidate file.
    Stats(StatsArgs),
    /// Render Markdown tables from JSON outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// English references, one sentence per line.
    #[arg(long)]
    refs: PathBuf,
    /// Directory with antonyms/negations/strengtheners/entities TSVs
    /// (default: built-in lexicons).
    #[arg(long)]
    lexicons: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Comma-separated categories to generate.
    #[arg(long, value_delimiter = ',', default_values_t = TransformCategory::ALL.to_vec())]
    categories: Vec<TransformCategory>,
    /// External span annotations (`index<TAB>start<TAB>end<TAB>label`).
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[arg(long)]
    src_emb: PathBuf,
    #[arg(long)]
    cand_emb: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = Margin::Absolute)]
    margin: Margin,
    #[arg(short = 'k', long = "k", default_value_t = DEFAULT_K)]
    k: usize,
    /// Language direction label, e.g. `fao-eng`.
    #[arg(long, default_value = "unknown")]
    direction: String,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    align: AlignArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    align: AlignArgs,
    /// `all` for the thirteen table combinations, or a comma-separated list
    /// such as `entity,causality+misaligned`.
    #[arg(long, default_value = "all")]
    subsets: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["records", "runs"]))]
struct RankArgs {
    /// `system_id<TAB>direction<TAB>proxy<TAB>downstream[<TAB>group]`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// `system_id<TAB>direction<TAB>ablation.json<TAB>downstream[<TAB>group]`;
    /// ranks xsim++ against xsim and every ablation subset.
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Records of a competing proxy over the same systems.
    #[arg(long, conflicts_with = "runs")]
    baseline: Option<PathBuf>,
    #[arg(long, default_value = "error")]
    polarity: Polarity,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    bootstrap: usize,
    /// Name of the proxy in reports.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    candidates: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// `label=stats.json`, repeatable.
    #[arg(long)]
    stats: Vec<String>,
    /// Ablation JSON, repeatable.
    #[arg(long)]
    ablation: Vec<PathBuf>,
    /// Ranking JSON, repeatable.
    #[arg(long)]
    ranking: Vec<PathBuf>,
    /// Output Markdown file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Context {
    command: Vec<String>,
    seed: Option<u64>,
    dim: usize,
    timestamp: bool,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut command = vec![TOOL.to_owned()];
    command.extend(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()));
    let ctx = Context {
        command,
        seed: cli.seed,
        dim: cli.dim,
        timestamp: !cli.no_timestamp,
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&ctx, cli.command)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&ctx, cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("xsimkit: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(ctx: &Context, command: Command) -> Result<(), CliError> {
    match command {
        Command::Augment(a) => augment(ctx, a),
        Command::Score(a) => score(ctx, a),
        Command::Ablate(a) => ablate(ctx, a),
        Command::Rank(a) => rank(ctx, a),
        Command::Stats(a) => stats(ctx, a),
        Command::Report(a) => report(a),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(&text, out)
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

const LEXICON_FILES: [&str; 4] = ["antonyms.tsv", "negations.tsv", "strengtheners.tsv", "entities.tsv"];

fn augment(ctx: &Context, a: AugmentArgs) -> Result<(), CliError> {
    let seed = ctx.seed.unwrap_or(0);
    let config = AugmentConfig::new(seed, a.cap, a.categories.iter().copied())?;
    let references = load_sentences(&a.refs)?;
    let lexicons = match &a.lexicons {
        Some(dir) => Lexicons::load_dir(dir)?,
        None => Lexicons::builtin(),
    };
    let annotations = match &a.annotations {
        Some(p) => load_annotations(p)?,
        None => Vec::new(),
    };
    let set = build_candidates(&references, &lexicons, &config, &annotations)?;
    write_candidate_set(&set, &a.out)?;

    let mut manifest = RunManifest::new(
        ctx,
        serde_json::json!({
            "command": "augment",
            "cap": a.cap,
            "categories": config.categories(),
            "lexicons": if a.lexicons.is_some() { "directory" } else { "builtin" },
        }),
    )
    .seed("augment", seed);
    manifest.input("refs", &a.refs)?;
    if let Some(dir) = &a.lexicons {
        for name in LEXICON_FILES {
            manifest.input(&format!("lexicons/{name}"), &dir.join(name))?;
        }
    }
    if let Some(p) = &a.annotations {
        manifest.input("annotations", p)?;
    }
    eprintln!(
        "xsimkit: wrote {} candidates ({} originals) to {}",
        set.len(),
        set.num_originals(),
        a.out.display()
    );
    emit_json(
        &StatsDocument {
            stats: candidate_stats(&set),
            manifest,
        },
        None,
    )
}

struct Loaded {
    set: crate::corpus::CandidateSet,
    src: crate::align::EmbeddingMatrix,
    cand: crate::align::EmbeddingMatrix,
    cfg: MarginConfig,
}

fn load_alignment_inputs(ctx: &Context, a: &AlignArgs, manifest: &mut RunManifest) -> Result<Loaded, CliError> {
    let set = read_candidate_set(&a.candidates)?;
    let src = load_embeddings(&a.src_emb, ctx.dim)?;
    let cand = load_embeddings(&a.cand_emb, ctx.dim)?;
    manifest.input("candidates", &a.candidates)?;
    manifest.input("src_emb", &a.src_emb)?;
    manifest.input("cand_emb", &a.cand_emb)?;
    Ok(Loaded {
        set,
        src,
        cand,
        cfg: MarginConfig::new(a.margin, a.k),
    })
}

fn align_config(command: &str, ctx: &Context, a: &AlignArgs) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "dim": ctx.dim,
        "margin": a.margin,
        "k": a.k,
        "direction": a.direction,
    })
}

fn score(ctx: &Context, a: ScoreArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(ctx, align_config("score", ctx, &a.align));
    let l = load_alignment_inputs(ctx, &a.align, &mut manifest)?;
    let result = crate::align::align(&l.src, &l.set, &l.cand, &l.cfg)?;
    let report = error_rate(&result, &a.align.direction);
    eprintln!(
        "xsimkit: {}: error rate {:.2}% over {} sources",
        report.direction, report.error_rate, report.total_sources
    );
    emit_json(&ScoreDocument { report, manifest }, a.out.as_deref())
}

fn parse_subsets(spec: &str) -> Result<Vec<ErrorSelection>, CliError> {
    if spec.trim() == "all" {
        return Ok(ErrorSelection::ablation_table());
    }
    spec.split(',')
        .map(|s| s.parse::<ErrorSelection>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn ablate(ctx: &Context, a: AblateArgs) -> Result<(), CliError> {
    let selections = parse_subsets(&a.subsets)?;
    let mut config = align_config("ablate", ctx, &a.align);
    config["subsets"] = serde_json::json!(selections.iter().map(ToString::to_string).collect::<Vec<_>>());
    let mut manifest = RunManifest::new(ctx, config);
    let l = load_alignment_inputs(ctx, &a.align, &mut manifest)?;
    let direction = &a.align.direction;
    let reference = error_rate(&crate::align::align(&l.src, &l.set, &l.cand, &l.cfg)?, direction);
    let subsets = selections
        .iter()
        .map(|sel| {
            Ok(SubsetReport {
                subset: sel.to_string(),
                title: sel.title(),
                report: subset_rescore(&l.src, direction, &l.set, &l.cand, &l.cfg, sel)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    eprintln!("xsimkit: {direction}: {} subsets scored", subsets.len());
    emit_json(
        &AblationDocument {
            direction: direction.clone(),
            reference,
            subsets,
            manifest,
        },
        a.out.as_deref(),
    )
}

/// One row of a `--runs` table.
struct Run {
    system_id: String,
    direction: String,
    downstream: f64,
    group: Option<Group>,
    doc: AblationDocument,
}

fn load_runs(path: &Path, manifest: &mut RunManifest) -> Result<Vec<Run>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut runs = Vec::new();
    for (i, row) in text.lines().enumerate() {
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let bad = |m: &str| CliError::Data(format!("{}:{}: {m}", path.display(), i + 1));
        let f: Vec<&str> = row.split('\t').collect();
        if !(4..=5).contains(&f.len()) {
            return Err(bad("expected 4 or 5 columns"));
        }
        let downstream: f64 = f[3]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| bad("invalid downstream score"))?;
        let group = f.get(4).map(|g| g.trim().parse::<Group>()).transpose().map_err(|m| bad(&m))?;
        let doc_path = base.join(f[2]);
        let doc_text = fs::read_to_string(&doc_path).map_err(|e| CliError::io(&doc_path, e))?;
        let doc: AblationDocument = serde_json::from_str(&doc_text)
            .map_err(|e| CliError::Data(format!("{}: {e}", doc_path.display())))?;
        manifest.input(&format!("runs/{}", f[2]), &doc_path)?;
        runs.push(Run {
            system_id: f[0].to_owned(),
            direction: f[1].to_owned(),
            downstream,
            group,
            doc,
        });
    }
    Ok(runs)
}

fn records_from_runs(runs: &[Run], proxy: impl Fn(&AblationDocument) -> Option<f64>) -> Option<Vec<SystemRecord>> {
    runs.iter()
        .map(|r| {
            Some(SystemRecord {
                system_id: r.system_id.clone(),
                direction: r.direction.clone(),
                proxy: proxy(&r.doc)?,
                downstream: r.downstream,
                group: r.group,
            })
        })
        .collect()
}

fn splits(records: &[SystemRecord], polarity: Polarity) -> Result<(Option<RankingReport>, Option<RankingReport>), CliError> {
    if records.iter().any(|r| r.group.is_none()) {
        return Ok((None, None));
    }
    Ok((
        Some(split_report(records, Split::Within, polarity)?),
        Some(split_report(records, Split::Across, polarity)?),
    ))
}

fn rank(ctx: &Context, a: RankArgs) -> Result<(), CliError> {
    let seed = ctx.seed.unwrap_or(0);
    let mut manifest = RunManifest::new(
        ctx,
        serde_json::json!({
            "command": "rank",
            "polarity": a.polarity,
            "bootstrap": a.bootstrap,
            "mode": if a.runs.is_some() { "runs" } else { "records" },
        }),
    )
    .seed("bootstrap", seed);

    let (records, baseline, subsets, label) = if let Some(path) = &a.runs {
        let runs = load_runs(path, &mut manifest)?;
        let full = records_from_runs(&runs, |d| Some(d.reference.error_rate)).expect("every run has a reference");
        let misaligned = ErrorSelection::originals_only().to_string();
        let xsim = records_from_runs(&runs, |d| d.subset(&misaligned).map(|r| r.error_rate))
            .map(|r| ("xsim".to_owned(), r));
        let mut subsets = Vec::new();
        if let Some(first) = runs.first() {
            for s in &first.doc.subsets {
                if let Some(recs) = records_from_runs(&runs, |d| d.subset(&s.subset).map(|r| r.error_rate)) {
                    subsets.push(SubsetRanking {
                        subset: s.subset.clone(),
                        title: s.title.clone(),
                        report: pairwise_accuracy(&recs, a.polarity)?,
                    });
                }
            }
        }
        (full, xsim, subsets, a.label.clone().unwrap_or_else(|| "xsim++".into()))
    } else {
        let path = a.records.as_ref().expect("clap enforces one input");
        manifest.input("records", path)?;
        let records = load_records(path)?;
        let baseline = match &a.baseline {
            Some(p) => {
                manifest.input("baseline", p)?;
                Some(("baseline".to_owned(), load_records(p)?))
            }
            None => None,
        };
        (records, baseline, Vec::new(), a.label.clone().unwrap_or_else(|| "proxy".into()))
    };

    let mut overall = pairwise_accuracy(&records, a.polarity)?;
    let baseline = match baseline {
        Some((label, recs)) => {
            overall.p_value = Some(significance(&records, &recs, a.polarity, a.bootstrap, seed)?);
            Some(BaselineRanking {
                label,
                report: pairwise_accuracy(&recs, a.polarity)?,
            })
        }
        None => None,
    };
    let (within, across) = splits(&records, a.polarity)?;
    eprintln!(
        "xsimkit: {label}: accuracy {:.2}% over {} pairs",
        overall.accuracy, overall.total_pairs
    );
    emit_json(
        &RankingDocument {
            polarity: a.polarity,
            label,
            overall,
            baseline,
            within,
            across,
            subsets,
            manifest,
        },
        a.out.as_deref(),
    )
}

fn stats(ctx: &Context, a: StatsArgs) -> Result<(), CliError> {
    let set = read_candidate_set(&a.candidates)?;
    let mut manifest = RunManifest::new(ctx, serde_json::json!({ "command": "stats" }));
    manifest.input("candidates", &a.candidates)?;
    emit_json(
        &StatsDocument {
            stats: candidate_stats(&set),
            manifest,
        },
        a.out.as_deref(),
    )
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    if a.stats.is_empty() && a.ablation.is_empty() && a.ranking.is_empty() {
        return Err(CliError::Usage("report needs at least one of --stats, --ablation, --ranking".into()));
    }
    let mut out = String::new();
    if !a.stats.is_empty() {
        let mut sets: Vec<(String, StatsReport)> = Vec::new();
        for item in &a.stats {
            let (label, path) = match item.split_once('=') {
                Some((l, p)) => (l.to_owned(), PathBuf::from(p)),
                None => (String::new(), PathBuf::from(item)),
            };
            let doc: StatsDocument = read_json(&path)?;
            sets.push((label, doc.stats));
        }
        let refs: Vec<(&str, &StatsReport)> = sets.iter().map(|(l, s)| (l.as_str(), s)).collect();
        out.push_str("## Candidate statistics\n\n");
        out.push_str(&stats_table(&refs));
        out.push('\n');
    }
    for path in &a.ablation {
        let doc: AblationDocument = read_json(path)?;
        out.push_str("## Error rates by category\n\n");
        out.push_str(&ablation_table(&doc));
        out.push('\n');
    }
    for path in &a.ranking {
        let doc: RankingDocument = read_json(path)?;
        out.push_str("## Pairwise ranking accuracy\n\n");
        out.push_str(&ranking_table(&doc));
        out.push('\n');
    }
    emit_text(&out, a.out.as_deref())
}
