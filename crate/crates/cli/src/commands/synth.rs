use anyhow::{bail, Result};
use serde_json::json;

use twotier::embedding_io::{encode_embeddings, TableFormat};
use twotier::output::json_document;
use twotier::synth::{self, SynthSpec};

use super::prepare_out;
use crate::args::{FixtureArg, FormatArg, SynthArgs};
use crate::manifest::{RunManifest, MANIFEST_FILE};

const SYNTH_SCHEMA: &str = "twotier.synth/1";

pub fn synth(args: &SynthArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("synth", args)?;
    let dir = &args.out.out;
    prepare_out(dir)?;

    let (table, description) = match args.fixture {
        FixtureArg::Construction => {
            let block = args.block_scale.unwrap_or(0.0);
            let spec = match (args.power, args.amplitude) {
                (Some(c), _) => SynthSpec::new(args.period, args.epsilon, c, block)?,
                (None, a) => SynthSpec::from_amplitude(args.period, args.epsilon, a.unwrap_or(5.0), block)?,
            };
            let spec = match args.preset {
                Some(p) => spec.with_preset(p.into()),
                None if args.block_scale.is_none() => {
                    bail!("construction needs --block-scale or --preset")
                }
                None => spec,
            };
            let prediction = synth::predict(&spec);
            println!(
                "N={} K={} A={} B={} phi={:.6e} ceiling={:.4} interleaving={}",
                spec.n_tokens,
                spec.k_blocks,
                spec.amplitude,
                spec.block_scale,
                prediction.phi,
                prediction.accuracy_ceiling,
                prediction.interleaving
            );
            (synth::construct(&spec), json!({ "spec": spec, "prediction": prediction }))
        }
        FixtureArg::IdealCircle => (
            synth::ideal_circle(args.period, args.n_tokens, args.dim, args.seed)?,
            json!({ "period": args.period, "n_tokens": args.n_tokens, "dim": args.dim, "lift_seed": args.seed }),
        ),
        FixtureArg::ZeroHarmonic => {
            let seed = args.seed.unwrap_or(0);
            manifest.seeds.push(seed);
            (
                synth::zero_harmonic_table(args.period, args.n_tokens, args.dim, seed)?,
                json!({ "period": args.period, "n_tokens": args.n_tokens, "dim": args.dim, "seed": seed }),
            )
        }
    };
    if let Some(s) = args.seed {
        if !manifest.seeds.contains(&s) {
            manifest.seeds.push(s);
        }
    }

    let (format, name) = match args.format {
        FormatArg::Raw => (TableFormat::Raw(args.dtype.into()), "table.bin"),
        FormatArg::Npy => (TableFormat::Npy(args.dtype.into()), "table.npy"),
    };
    manifest.emit(dir, name, encode_embeddings(&table, format)?)?;
    let doc = json!({ "fixture": args.fixture, "table": name, "details": description });
    manifest.emit(dir, "synth.json", json_document(SYNTH_SCHEMA, Some(MANIFEST_FILE), &doc)?)?;
    manifest.finish(dir)
}
