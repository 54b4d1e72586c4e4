//! Expands a reference file into an xsim++ candidate set and prints its
//! statistics.
//!
//!     cargo run --example build_candidates -- refs.txt candidates.tsv [seed] [cap]

use xsimkit::augment::{build_candidates, AugmentConfig, Lexicons};
use xsimkit::corpus::{candidate_stats, load_sentences, write_candidate_set, TransformCategory};
use xsimkit::report::stats_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let refs = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini/refs.txt").to_owned());
    let out = args.next();
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let cap = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);

    let references = load_sentences(&refs)?;
    let config = AugmentConfig::new(seed, cap, TransformCategory::ALL)?;
    let set = build_candidates(&references, &Lexicons::builtin(), &config, &[])?;
    if let Some(out) = out {
        write_candidate_set(&set, out)?;
    }
    print!("{}", stats_table(&[("refs", &candidate_stats(&set))]));
    for c in set.transformed().iter().take(5) {
        println!("{:>9}  {}", c.kind.as_str(), c.text);
    }
    Ok(())
}
