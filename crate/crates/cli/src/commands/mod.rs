//! Subcommand implementations. Each returns the component errors it tolerated; fatal
//! problems come back as `Err`.

mod analyze;
mod perturb;
mod synth;

pub use analyze::{freq_baseline, probe, report, scatter, spectrum};
pub use perturb::perturb;
pub use synth::synth;

use std::path::Path;

use anyhow::{Context, Result};
use twotier::embedding_io::{load_embeddings, EmbeddingTable};

use crate::args::TableArgs;
use crate::manifest::RunManifest;

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_table(args: &TableArgs, manifest: &mut RunManifest) -> Result<EmbeddingTable> {
    manifest.input(&args.table)?;
    load_embeddings(&args.table, args.table_format())
        .with_context(|| format!("loading table {}", args.table.display()))
}
