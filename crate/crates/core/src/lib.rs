//! Hard-negative augmented evaluation of sentence encoders for bitext mining.
//!
//! The crate covers the whole evaluation loop:
//!
//! * [`augment`] expands English references with rule-based hard negatives
//!   (causality alternation, entity replacement, number replacement);
//! * [`corpus`] holds the evaluation and candidate sets and their formats;
//! * [`align`] performs margin-based nearest-neighbour alignment over raw
//!   fp32 sentence embeddings;
//! * [`scoring`] turns alignments into error rates with per-category error
//!   attribution and category ablations;
//! * [`ranking`] meta-evaluates a proxy metric against downstream scores
//!   with pairwise ranking accuracy and a paired bootstrap test;
//! * [`report`] renders Markdown tables from the JSON outputs.
//!
//! The `xsimkit` binary wires these into a command-line pipeline; the
//! `examples/` directory has one runnable program per capability.

pub mod align;
pub mod augment;
pub mod cli;
pub mod corpus;
pub mod ranking;
pub mod report;
pub mod scoring;
pub mod seed;
pub mod synthetic;
