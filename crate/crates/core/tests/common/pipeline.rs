//! The end-to-end fixture run: augment, score, ablate, rank and report via
//! the `xsimkit` binary, with embeddings from the synthetic encoder.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use xsimkit::align::write_embeddings;
use xsimkit::corpus::read_candidate_set;
use xsimkit::synthetic::SyntheticEncoder;

pub const DIM: usize = 64;

/// (system, noise, group)
pub const SYSTEMS: [(&str, f32, &str); 4] = [
    ("ckpt-a", 0.6, "within"),
    ("ckpt-b", 0.9, "within"),
    ("ckpt-c", 1.2, "within"),
    ("labse", 0.8, "across"),
];

/// (direction, downstream score per system in `SYSTEMS` order)
pub const DIRECTIONS: [(&str, [f64; 4]); 2] = [("fao-eng", [31.2, 28.4, 22.9, 27.1]), ("kab-eng", [18.5, 19.1, 12.0, 14.6])];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn xsimkit(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_xsimkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("xsimkit runs");
    assert!(
        out.status.success(),
        "xsimkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Runs the pipeline in `dir` and returns the produced files, as
/// (relative name, bytes), in a fixed order.
pub fn run(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fs::copy(fixture_dir().join("refs.txt"), dir.join("refs.txt")).unwrap();
    let stats = xsimkit(
        dir,
        &["--no-timestamp", "--seed", "7", "augment", "--refs", "refs.txt", "--cap", "100", "--out", "candidates.tsv"],
    );
    fs::write(dir.join("stats.json"), &stats).unwrap();

    let set = read_candidate_set(dir.join("candidates.tsv")).unwrap();
    let texts: Vec<String> = set.candidates().iter().map(|c| c.text.clone()).collect();
    let refs: Vec<String> = set.originals().iter().map(|c| c.text.clone()).collect();

    let mut runs = String::new();
    let mut produced = vec!["candidates.tsv".to_owned(), "stats.json".to_owned()];
    for (direction, downstream) in DIRECTIONS {
        for (i, (system, noise, group)) in SYSTEMS.iter().enumerate() {
            let enc = SyntheticEncoder::new(DIM, &format!("{system}/{direction}")).with_noise(*noise);
            let stem = format!("{system}.{direction}");
            write_embeddings(&enc.embed_sources(&refs).unwrap(), dir.join(format!("{stem}.src.bin"))).unwrap();
            write_embeddings(&enc.embed_targets(&texts).unwrap(), dir.join(format!("{stem}.cand.bin"))).unwrap();
            let src = format!("{stem}.src.bin");
            let cand = format!("{stem}.cand.bin");
            let score_out = format!("{stem}.score.json");
            let ablate_out = format!("{stem}.ablation.json");
            let common = [
                "--no-timestamp", "--dim", "64", "--src-emb", &src, "--cand-emb", &cand, "--candidates",
                "candidates.tsv", "--margin", "ratio", "-k", "4", "--direction", direction,
            ];
            let mut score_args = vec!["score"];
            score_args.extend(common);
            score_args.extend(["--out", &score_out]);
            xsimkit(dir, &score_args);
            let mut ablate_args = vec!["ablate"];
            ablate_args.extend(common);
            ablate_args.extend(["--subsets", "all", "--out", &ablate_out]);
            xsimkit(dir, &ablate_args);
            runs.push_str(&format!("{system}\t{direction}\t{ablate_out}\t{}\t{group}\n", downstream[i]));
            produced.push(score_out);
            produced.push(ablate_out);
        }
    }
    fs::write(dir.join("runs.tsv"), &runs).unwrap();
    xsimkit(
        dir,
        &["--no-timestamp", "--seed", "13", "rank", "--runs", "runs.tsv", "--bootstrap", "1000", "--out", "ranking.json"],
    );
    xsimkit(
        dir,
        &[
            "report", "--stats", "mini=stats.json", "--ablation", "ckpt-a.fao-eng.ablation.json", "--ranking",
            "ranking.json", "--out", "report.md",
        ],
    );
    produced.extend(["runs.tsv".to_owned(), "ranking.json".to_owned(), "report.md".to_owned()]);
    produced
        .into_iter()
        .map(|name| {
            let bytes = fs::read(dir.join(&name)).unwrap();
            (name, bytes)
        })
        .collect()
}

/// Compares against the frozen golden files; with `XSIMKIT_BLESS=1` the
/// golden files are rewritten instead. Returns the names that differ.
pub fn compare_with_golden(outputs: &[(String, Vec<u8>)]) -> Vec<String> {
    let golden = golden_dir();
    if std::env::var_os("XSIMKIT_BLESS").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for (name, bytes) in outputs {
            fs::write(golden.join(name), bytes).unwrap();
        }
        return Vec::new();
    }
    outputs
        .iter()
        .filter(|(name, bytes)| fs::read(golden.join(name)).ok().as_deref() != Some(bytes.as_slice()))
        .map(|(name, _)| name.clone())
        .collect()
}
