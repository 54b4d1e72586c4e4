//! Error rates per error-category combination, with embeddings from the
//! deterministic synthetic encoder.
//!
//!     cargo run --example category_ablation -- [noise]

use xsimkit::align::{Margin, MarginConfig};
use xsimkit::augment::{build_candidates, AugmentConfig, Lexicons};
use xsimkit::corpus::{load_sentences, TransformCategory};
use xsimkit::scoring::{subset_rescore, ErrorSelection};
use xsimkit::synthetic::SyntheticEncoder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let noise: f32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.9);
    let refs = load_sentences(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini/refs.txt"))?;
    let config = AugmentConfig::new(7, 100, TransformCategory::ALL)?;
    let set = build_candidates(&refs, &Lexicons::builtin(), &config, &[])?;
    let texts: Vec<String> = set.candidates().iter().map(|c| c.text.clone()).collect();

    let enc = SyntheticEncoder::new(128, "example").with_noise(noise);
    let src = enc.embed_sources(&refs)?;
    let cand = enc.embed_targets(&texts)?;
    let cfg = MarginConfig::new(Margin::Ratio, 4);

    println!("| Errors counted | Candidates | Error rate (%) |\n|---|---:|---:|");
    let mut rows = vec![ErrorSelection::all()];
    rows.extend(ErrorSelection::ablation_table());
    for selection in rows {
        let r = subset_rescore(&src, "toy", &set, &cand, &cfg, &selection)?;
        println!("| {} | {} | {:.2} |", selection.title(), r.config.candidates, r.error_rate);
    }
    Ok(())
}
