use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{require_numbers, PerturbedCorpus, Provenance};
use crate::embedding_io::TokenCorpus;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwapOptions {
    /// When a sequence holds more numbers than all other sequences combined, let its
    /// slice run past the end of the pool and continue from the start instead of failing.
    pub wrap: bool,
}

/// Overwrite each sequence's number tokens, in place and in order, with a contiguous
/// slice of the corpus-wide number stream with that sequence's own numbers removed.
///
/// The stream is built sequence-major in corpus order. Slice starts are uniform over
/// the valid range and drawn independently per sequence, so slices of different
/// sequences may overlap.
pub fn swap_numbers(corpus: &TokenCorpus, seed: u64, options: SwapOptions) -> Result<PerturbedCorpus> {
    require_numbers(corpus)?;
    let mut pool = Vec::new();
    let mut ranges = Vec::with_capacity(corpus.sequences().len());
    for seq in corpus.sequences() {
        let start = pool.len();
        pool.extend(seq.iter().copied().filter(|&t| corpus.is_number(t)));
        ranges.push(start..pool.len());
    }

    let sequences = corpus
        .sequences()
        .par_iter()
        .enumerate()
        .map(|(idx, seq)| {
            let own = ranges[idx].clone();
            let needed = own.len();
            if needed == 0 {
                return Ok(seq.clone());
            }
            let available = pool.len() - needed;
            if available == 0 || (available < needed && !options.wrap) {
                return Err(Error::PoolTooShort {
                    sequence: idx,
                    needed,
                    available,
                });
            }
            // index into the pool with the own range cut out
            let reduced = |i: usize| {
                if i < own.start {
                    pool[i]
                } else {
                    pool[i + needed]
                }
            };
            let mut rng = SplitMix64::new(derive_seed(seed, &[idx as u64]));
            // wrap only where the pool is too short for a straight slice
            let n_starts = if available < needed { available } else { available - needed + 1 };
            let start = rng.below(n_starts as u64) as usize;
            let mut out = seq.clone();
            let mut j = 0;
            for slot in out.iter_mut() {
                if corpus.is_number(*slot) {
                    *slot = reduced((start + j) % available);
                    j += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PerturbedCorpus {
        corpus: corpus.replace_sequences(sequences),
        plan: None,
        provenance: Provenance {
            perturbation: "swap".into(),
            parameters: serde_json::json!({ "wrap": options.wrap }),
            seed: Some(seed),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn corpus(seqs: Vec<Vec<u32>>) -> TokenCorpus {
        let vocab: BTreeMap<u32, u32> = (100..200).map(|t| (t, t - 100)).collect();
        TokenCorpus::new(seqs, 200, vocab).unwrap()
    }

    #[test]
    fn two_sequence_exchange() {
        // A holds numbers 1,2,3 and B holds 4,5
        let c = corpus(vec![vec![101, 7, 102, 103], vec![8, 104, 105, 9]]);
        assert!(matches!(
            swap_numbers(&c, 0, SwapOptions::default()),
            Err(Error::PoolTooShort { sequence: 0, needed: 3, available: 2 })
        ));
        let valid_a = [vec![104, 7, 105, 104], vec![105, 7, 104, 105]];
        let valid_b = [vec![8, 101, 102, 9], vec![8, 102, 103, 9]];
        let mut seen_a = [false; 2];
        let mut seen_b = [false; 2];
        for seed in 0..64 {
            let out = swap_numbers(&c, seed, SwapOptions { wrap: true }).unwrap();
            let a = valid_a.iter().position(|v| *v == out.sequences()[0]).expect("A slice");
            let b = valid_b.iter().position(|v| *v == out.sequences()[1]).expect("B slice");
            seen_a[a] = true;
            seen_b[b] = true;
        }
        assert_eq!((seen_a, seen_b), ([true; 2], [true; 2]));
    }

    #[test]
    fn sequences_without_numbers_are_untouched() {
        let c = corpus(vec![vec![1, 2], vec![101, 3], vec![102, 4]]);
        let out = swap_numbers(&c, 5, SwapOptions::default()).unwrap();
        assert_eq!(out.sequences()[0], vec![1, 2]);
        assert_eq!(out.sequences()[1], vec![102, 3]);
        assert_eq!(out.sequences()[2], vec![101, 4]);
    }

    #[test]
    fn single_sequence_cannot_exclude_itself() {
        let c = corpus(vec![vec![101, 1, 102]]);
        assert!(swap_numbers(&c, 0, SwapOptions::default()).is_err());
        assert!(swap_numbers(&c, 0, SwapOptions { wrap: true }).is_err());
        assert!(matches!(
            swap_numbers(&corpus(vec![vec![1]]), 0, SwapOptions::default()),
            Err(Error::NoNumberTokens)
        ));
    }
}
