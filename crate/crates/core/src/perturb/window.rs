use super::{PerturbedCorpus, Provenance};
use crate::embedding_io::TokenCorpus;
use crate::error::{Error, Result};

/// Cut every sequence of length `L` into `⌊L/ℓ⌋` consecutive windows of length `ℓ`,
/// dropping the remainder. Windows become independent sequences, in corpus order.
pub fn context_window(corpus: &TokenCorpus, window: usize) -> Result<PerturbedCorpus> {
    if window < 2 {
        return Err(Error::InvalidArgument(format!("window length must be ≥ 2, got {window}")));
    }
    let sequences: Vec<Vec<u32>> = corpus
        .sequences()
        .iter()
        .flat_map(|seq| seq.chunks_exact(window).map(<[u32]>::to_vec))
        .collect();
    if sequences.is_empty() {
        return Err(Error::Corpus(format!(
            "window length {window} exceeds every sequence; output would be empty"
        )));
    }
    Ok(PerturbedCorpus {
        corpus: corpus.replace_sequences(sequences),
        plan: None,
        provenance: Provenance {
            perturbation: "context".into(),
            parameters: serde_json::json!({ "window": window }),
            seed: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn corpus(lens: &[usize]) -> TokenCorpus {
        let seqs = lens
            .iter()
            .map(|&l| (0..l as u32).map(|i| i % 50).collect())
            .collect();
        TokenCorpus::new(seqs, 50, BTreeMap::new()).unwrap()
    }

    #[test]
    fn window_counts_follow_floor_rule() {
        for (l, w, n) in [(1024, 2, 512), (1024, 64, 16), (7, 4, 1)] {
            let out = context_window(&corpus(&[l]), w).unwrap();
            assert_eq!(out.sequences().len(), n);
            assert!(out.sequences().iter().all(|s| s.len() == w));
        }
    }

    #[test]
    fn windows_preserve_order() {
        let out = context_window(&corpus(&[7]), 4).unwrap();
        assert_eq!(out.sequences()[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_long_window_is_an_error() {
        assert!(context_window(&corpus(&[3, 2]), 4).is_err());
        assert!(context_window(&corpus(&[3]), 1).is_err());
    }
}
