//! Post-hoc analysis of dumped language-model artifacts.
//!
//! Everything here consumes files produced elsewhere (sampled continuations,
//! per-token probability traces, hidden-state matrices) and computes the
//! statistics and structures used to compare base and preference-tuned
//! models: multiple sequence alignment of continuations with overlap curves,
//! anchor-span extraction with Sankey flow graphs, n-gram sharing and
//! diversity statistics, probability-concentration and perplexity metrics,
//! ranking-game scores, linear future-token probes, and a value-iteration
//! check of the stochasticity penalty.
//!
//! No model is ever run; all inputs arrive as dumps (see [`corpus`] for the
//! file formats).

pub mod align;
pub mod anchors;
pub mod corpus;
pub mod fixtures;
pub mod ngrams;
pub mod planner;
pub mod probdist;
pub mod probe;
pub mod shannon;

/// Toolkit version embedded in every exported report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
