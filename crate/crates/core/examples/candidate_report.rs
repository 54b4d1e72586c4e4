//! Markdown statistics table for one or more candidate files.
//!
//!     cargo run --example candidate_report -- dev=dev.tsv devtest=devtest.tsv

use xsimkit::corpus::{candidate_stats, read_candidate_set, StatsReport};
use xsimkit::report::stats_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        args.push(format!("mini={}/tests/golden/candidates.tsv", env!("CARGO_MANIFEST_DIR")));
    }
    let mut sets: Vec<(String, StatsReport)> = Vec::new();
    for arg in &args {
        let (label, path) = arg.split_once('=').unwrap_or(("set", arg));
        sets.push((label.to_owned(), candidate_stats(&read_candidate_set(path)?)));
    }
    let refs: Vec<(&str, &StatsReport)> = sets.iter().map(|(l, s)| (l.as_str(), s)).collect();
    print!("{}", stats_table(&refs));
    Ok(())
}
