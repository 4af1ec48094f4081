use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{require_numbers, PerturbedCorpus, Provenance};
use crate::embedding_io::TokenCorpus;
use crate::error::Result;
use crate::rng::{derive_seed, SplitMix64};

/// Replace every number token by an independent draw from the corpus-wide empirical
/// distribution of number tokens. Text tokens and number positions are kept.
pub fn unigram_replace(corpus: &TokenCorpus, seed: u64) -> Result<PerturbedCorpus> {
    require_numbers(corpus)?;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &t in corpus.sequences().iter().flatten() {
        if corpus.is_number(t) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let tokens: Vec<u32> = counts.keys().copied().collect();
    let cumulative: Vec<u64> = counts
        .values()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("at least one number token");

    let sequences = corpus
        .sequences()
        .par_iter()
        .enumerate()
        .map(|(idx, seq)| {
            let mut rng = SplitMix64::new(derive_seed(seed, &[idx as u64]));
            seq.iter()
                .map(|&t| {
                    if corpus.is_number(t) {
                        let u = rng.below(total);
                        tokens[cumulative.partition_point(|&c| c <= u)]
                    } else {
                        t
                    }
                })
                .collect()
        })
        .collect();

    Ok(PerturbedCorpus {
        corpus: corpus.replace_sequences(sequences),
        plan: None,
        provenance: Provenance {
            perturbation: "unigram".into(),
            parameters: serde_json::json!({}),
            seed: Some(seed),
        },
    })
}
