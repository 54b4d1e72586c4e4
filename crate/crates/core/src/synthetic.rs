//! A deterministic hashed bag-of-features sentence encoder.
//!
//! Stands in for a real multilingual encoder in examples and golden runs.
//! Every feature maps to a pseudo-random direction drawn from a ChaCha8
//! stream keyed by SHA-256, and all arithmetic is plain fp32 addition and
//! multiplication, so embeddings are bit-identical on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::align::{AlignError, EmbeddingMatrix};
use crate::augment::tokenize::tokenize;

const WORD_WEIGHT: f32 = 1.0;
const TRIGRAM_WEIGHT: f32 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEncoder {
    dim: usize,
    salt: String,
    noise: f32,
}

fn stream(salt: &str, tag: u8, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0, tag]);
    h.update(key.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Uniform in [-1, 1) with 24 bits of resolution; exact in fp32.
fn uniform(rng: &mut ChaCha8Rng) -> f32 {
    (rng.next_u32() >> 8) as f32 * (1.0 / (1u32 << 23) as f32) - 1.0
}

fn add_direction(acc: &mut [f32], rng: &mut ChaCha8Rng, weight: f32) {
    for v in acc.iter_mut() {
        *v += weight * uniform(rng);
    }
}

impl SyntheticEncoder {
    /// `salt` distinguishes encoders: two salts give unrelated spaces.
    pub fn new(dim: usize, salt: &str) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            salt: salt.to_owned(),
            noise: 0.0,
        }
    }

    /// Relative strength of the per-sentence perturbation applied by
    /// [`SyntheticEncoder::encode_source`]. Higher means a worse encoder.
    pub fn with_noise(mut self, noise: f32) -> Self {
        assert!(noise.is_finite() && noise >= 0.0);
        self.noise = noise;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn features(text: &str) -> Vec<(String, f32)> {
        let mut out = Vec::new();
        for token in tokenize(text).into_iter().filter(|t| t.is_word) {
            let word = token.text.to_lowercase();
            let padded: Vec<char> = format!("#{word}#").chars().collect();
            for gram in padded.windows(3) {
                out.push((format!("3:{}", gram.iter().collect::<String>()), TRIGRAM_WEIGHT));
            }
            out.push((format!("w:{word}"), WORD_WEIGHT));
        }
        out
    }

    /// Target-side embedding: the weighted sum of feature directions.
    pub fn encode(&self, text: &str) -> Vec<f32> {
        let mut acc = vec![0.0f32; self.dim];
        for (feature, weight) in Self::features(text) {
            add_direction(&mut acc, &mut stream(&self.salt, 1, &feature), weight);
        }
        if acc.iter().all(|&v| v == 0.0) {
            add_direction(&mut acc, &mut stream(&self.salt, 2, text), 1.0);
        }
        acc
    }

    /// Source-side embedding of the sentence whose English translation is
    /// `text`: [`SyntheticEncoder::encode`] plus a sentence-keyed random
    /// perturbation scaled by the noise level.
    pub fn encode_source(&self, text: &str) -> Vec<f32> {
        let mut acc = self.encode(text);
        if self.noise > 0.0 {
            let energy: f32 = acc.iter().map(|v| v * v).sum();
            // Uniform [-1, 1) entries have mean square 1/3.
            let scale = self.noise * (3.0 * energy / self.dim as f32).sqrt();
            add_direction(&mut acc, &mut stream(&self.salt, 3, text), scale);
        }
        acc
    }

    pub fn embed_targets(&self, texts: &[String]) -> Result<EmbeddingMatrix, AlignError> {
        let rows: Vec<Vec<f32>> = texts.par_iter().map(|t| self.encode(t)).collect();
        EmbeddingMatrix::new(texts.len(), self.dim, rows.concat())
    }

    pub fn embed_sources(&self, texts: &[String]) -> Result<EmbeddingMatrix, AlignError> {
        let rows: Vec<Vec<f32>> = texts.par_iter().map(|t| self.encode_source(t)).collect();
        EmbeddingMatrix::new(texts.len(), self.dim, rows.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::dot;

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    #[test]
    fn deterministic_and_salted() {
        let e = SyntheticEncoder::new(32, "a");
        assert_eq!(e.encode("The cat sat."), e.encode("The cat sat."));
        assert_ne!(e.encode("The cat sat."), SyntheticEncoder::new(32, "b").encode("The cat sat."));
        assert_eq!(e.encode("the CAT sat"), e.encode("The cat sat."));
    }

    #[test]
    fn minimal_edits_stay_close() {
        let e = SyntheticEncoder::new(256, "s");
        let a = e.encode("He was born in 1990 in Paris and studied law.");
        let b = e.encode("He was born in 1991 in Paris and studied law.");
        let c = e.encode("Quantum chromodynamics describes strong interactions.");
        assert!(cosine(&a, &b) > 0.8);
        assert!(cosine(&a, &b) > cosine(&a, &c) + 0.3);
    }

    #[test]
    fn noise_moves_sources_away() {
        let clean = SyntheticEncoder::new(128, "s");
        let noisy = clean.clone().with_noise(1.0);
        let t = "A sentence with a few words.";
        assert_eq!(clean.encode_source(t), clean.encode(t));
        let c = cosine(&noisy.encode_source(t), &noisy.encode(t));
        assert!(c < 0.9 && c > 0.4, "{c}");
    }

    #[test]
    fn empty_text_is_not_a_zero_row() {
        let e = SyntheticEncoder::new(8, "s");
        assert!(e.encode("...").iter().any(|&v| v != 0.0));
        assert!(e.embed_targets(&["...".into(), "x".into()]).unwrap().normalized().is_ok());
    }
}
