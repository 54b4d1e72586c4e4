//! Margin-based alignment on a toy candidate set where each source has a
//! near-duplicate hard negative.

use xsimkit::align::{align, pairwise_scores, EmbeddingMatrix, Margin, MarginConfig};
use xsimkit::corpus::{Candidate, CandidateSet, TransformCategory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = CandidateSet::from_candidates(vec![
        Candidate::original("the cat sat", 0),
        Candidate::original("rain fell", 1),
        Candidate::original("prices rose 5%", 2),
        Candidate::transformed("the cat stood", 0, TransformCategory::Causality),
        Candidate::transformed("prices rose 7%", 2, TransformCategory::Number),
    ])?;
    let src = EmbeddingMatrix::from_rows(&[vec![1.0, 0.1, 0.0], vec![0.0, 1.0, 0.1], vec![0.1, 0.0, 1.0]])?;
    let cand = EmbeddingMatrix::from_rows(&[
        vec![0.9, 0.2, 0.0],
        vec![0.1, 1.0, 0.0],
        vec![0.0, 0.2, 0.9],
        vec![1.0, 0.0, 0.1],
        vec![0.2, 0.0, 1.0],
    ])?;
    for margin in [Margin::Absolute, Margin::Distance, Margin::Ratio] {
        let cfg = MarginConfig::new(margin, 1);
        let scores = pairwise_scores(&src.normalized()?, &cand.normalized()?, &cfg)?;
        let result = align(&src, &set, &cand, &cfg)?;
        println!("{}:", margin.as_str());
        for p in &result.predictions {
            let row: Vec<String> = scores.row(p.source).iter().map(|s| format!("{s:6.3}")).collect();
            println!(
                "  src {} -> {:<16} {:?}  [{}]",
                p.source,
                set.candidates()[p.predicted].text,
                p.error_kind,
                row.join(" ")
            );
        }
    }
    Ok(())
}
