//! refmap analyzes how the reference patterns of a document corpus
//! evolve over time. It ingests field-tagged citation-index exports,
//! cleans the cited-venue subfield, slices the corpus into moving
//! windows of publication years, and derives per-window co-citation
//! structure: cosine similarity networks, community partitions with
//! modularity, factor solutions with Varimax rotation, temporal
//! community flows (alluvial bands), and stress-minimized layouts that
//! stay stable across windows.
//!
//! Every product serializes to plain files (CSV, Pajek, SVG) and every
//! stage is deterministic for a fixed seed. The `examples/` directory
//! walks through each capability; the `refmap` binary chains them into
//! a batch pipeline of independent subcommands.

pub mod community;
pub mod corpus;
pub mod error;
pub mod export;
pub mod factors;
pub mod flow;
pub mod ingest;
pub mod layout;
pub mod pipeline;
pub mod plot;
pub mod seeding;
pub mod simnet;
pub mod synth;

pub use error::{Error, Result};
