//! Entity and number spans found in each sentence of a file.
//!
//!     cargo run --example detect_spans -- tests/fixtures/mini/refs.txt
//!
//! Prints `index<TAB>label<TAB>surface`, one row per span.

use xsimkit::augment::{detect_entities, detect_numbers, resolve_spans, Lexicons};
use xsimkit::corpus::load_sentences;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentences = match std::env::args().nth(1) {
        Some(path) => load_sentences(path)?,
        None => vec![
            "Charles was the first member of the British Royal Family to be awarded a degree.".to_owned(),
            "Nadal won 88% of his points on the first serve and took the match in 76 minutes.".to_owned(),
        ],
    };
    let lexicons = Lexicons::builtin();
    for (i, s) in sentences.iter().enumerate() {
        let mut spans = detect_entities(s, &lexicons);
        spans.extend(detect_numbers(s));
        for span in resolve_spans(spans) {
            println!("{i}\t{}\t{}", span.label, span.text(s));
        }
    }
    Ok(())
}
