//! Diagnostics for periodic structure in number-token embeddings.
//!
//! Two levels are measured separately: *spectral* structure (Fourier spikes at
//! `ν = 1/T` along the token index, [`spectral`]) and *geometric* structure
//! (linear separability of the residue classes `n mod T`, [`geometry`] and
//! [`probes`]). [`synth`] builds tables where the two provably disagree, and
//! [`perturb`] rewrites token corpora to remove specific co-occurrence signals.

pub mod embedding_io;
pub mod error;
pub mod geometry;
mod linalg;
pub mod output;
pub mod perturb;
pub mod probes;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod svg;
pub mod synth;

pub use embedding_io::{EmbeddingTable, TokenCorpus, TokenFrequencyTable};
pub use error::{Error, Result};
pub use geometry::ScatterSummary;
pub use probes::{ProbeConfig, ProbeKind, ProbeResult};
pub use spectral::Spectrum;
