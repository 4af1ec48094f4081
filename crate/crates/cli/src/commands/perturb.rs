use anyhow::{Context, Result};

use twotier::embedding_io::{load_corpus, write_sequences};
use twotier::output::{self, json_document, CsvTable};
use twotier::perturb::{self, MarginalAudit, SwapOptions};

use super::prepare_out;
use crate::args::{PerturbArgs, PerturbConfig};
use crate::manifest::{RunManifest, MANIFEST_FILE};

fn audit_csv(audit: &MarginalAudit) -> CsvTable {
    let mut t = CsvTable::new(
        output::AUDIT_SCHEMA,
        vec!["token", "value", "count_before", "count_after", "freq_before", "freq_after", "delta"],
    );
    for d in &audit.per_token {
        t.push(vec![
            d.token.to_string(),
            d.value.to_string(),
            d.count_before.to_string(),
            d.count_after.to_string(),
            output::num(d.freq_before),
            output::num(d.freq_after),
            output::num(d.delta),
        ]);
    }
    t
}

pub fn perturb(args: &PerturbArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("perturb", args)?;
    manifest.input(&args.corpus.corpus)?;
    manifest.input(&args.corpus.number_vocab)?;
    let corpus = load_corpus(&args.corpus.corpus, &args.corpus.number_vocab, args.corpus.vocab_size)
        .context("loading corpus")?;
    let dir = &args.out.out;
    prepare_out(dir)?;

    let out = match args.config {
        PerturbConfig::Isolate => perturb::isolate_k(&corpus, args.k)?,
        PerturbConfig::Context => perturb::context_window(&corpus, args.window)?,
        PerturbConfig::Swap => {
            manifest.seeds.push(args.seed);
            perturb::swap_numbers(&corpus, args.seed, SwapOptions { wrap: args.wrap })?
        }
        PerturbConfig::Unigram => {
            manifest.seeds.push(args.seed);
            perturb::unigram_replace(&corpus, args.seed)?
        }
    };

    let mut buf = Vec::new();
    write_sequences(&mut buf, out.sequences())?;
    manifest.emit(dir, "corpus.jsonl", buf)?;
    if let Some(plan) = &out.plan {
        let mut buf = Vec::new();
        plan.write_ndjson(&mut buf)?;
        manifest.emit(dir, "plan.jsonl", buf)?;
    }
    let audit = perturb::marginal_audit(&corpus, &out)?;
    let doc = serde_json::json!({ "provenance": out.provenance, "audit": audit });
    manifest.emit(dir, "audit.json", json_document("twotier.perturb/1", Some(MANIFEST_FILE), &doc)?)?;
    manifest.emit(dir, "audit.csv", audit_csv(&audit).to_string_with(Some(MANIFEST_FILE)))?;
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{}: sequences {} -> {}, marginal_tv={:.6} bigram_tv={:.6} unigram_survival={} bigram_survival={}",
        out.provenance.perturbation,
        corpus.sequences().len(),
        out.sequences().len(),
        audit.marginal_tv,
        audit.bigram_tv,
        f(audit.unigram_survival),
        f(audit.bigram_survival)
    );
    manifest.finish(dir)
}
