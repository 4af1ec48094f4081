use rayon::prelude::*;

use super::{PerturbedCorpus, Provenance, SegmentPlan, SequencePlan};
use crate::embedding_io::TokenCorpus;
use crate::error::{Error, Result};

/// Segment starts for one sequence. Number tokens are grouped greedily from the left in
/// runs of `k`; between two groups the text gap `g0..=g1` is split at
/// `g0 + ⌈(g1 − g0 + 1)/2⌉`, so an odd gap gives its extra token to the left segment.
pub(crate) fn isolate_boundaries(number_positions: &[usize], len: usize, k: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let mut boundaries = vec![0];
    let mut g = k;
    while g < number_positions.len() {
        let g0 = number_positions[g - 1] + 1;
        let gap = number_positions[g] - g0; // g1 − g0 + 1
        boundaries.push(g0 + gap.div_ceil(2));
        g += k;
    }
    boundaries
}

/// Cap each attention segment at `k` number tokens. Tokens are returned unchanged; only
/// the plan differs from the input.
pub fn isolate_k(corpus: &TokenCorpus, k: usize) -> Result<PerturbedCorpus> {
    if k == 0 {
        return Err(Error::InvalidArgument("isolate-k needs k ≥ 1".into()));
    }
    let sequences: Vec<SequencePlan> = corpus
        .sequences()
        .par_iter()
        .map(|seq| {
            let positions = corpus.number_positions(seq);
            SequencePlan::from_boundaries(seq.len(), isolate_boundaries(&positions, seq.len(), k))
        })
        .collect();
    Ok(PerturbedCorpus {
        corpus: corpus.clone(),
        plan: Some(SegmentPlan { sequences }),
        provenance: Provenance {
            perturbation: "isolate".into(),
            parameters: serde_json::json!({ "k": k }),
            seed: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn corpus(seqs: Vec<Vec<u32>>) -> TokenCorpus {
        // ids ≥ 100 are numbers with value id − 100
        let vocab: BTreeMap<u32, u32> = (100..200).map(|t| (t, t - 100)).collect();
        TokenCorpus::new(seqs, 200, vocab).unwrap()
    }

    #[test]
    fn single_number_groups_split_at_gap_midpoint() {
        // [t, 7, t, t, 9, t]
        let c = corpus(vec![vec![1, 107, 2, 3, 109, 4]]);
        let out = isolate_k(&c, 1).unwrap();
        let plan = &out.plan.unwrap().sequences[0];
        assert_eq!(plan.boundaries, vec![0, 3]);
        assert_eq!(plan.position_ids, vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(plan.loss_mask, vec![0, 1, 1, 0, 1, 1]);
        assert_eq!(out.corpus, c);
    }

    #[test]
    fn odd_gap_favours_left_segment() {
        // numbers at 0 and 4, gap 1..=3
        assert_eq!(isolate_boundaries(&[0, 4], 5, 1), vec![0, 3]);
        // adjacent numbers: empty gap, boundary at the second number
        assert_eq!(isolate_boundaries(&[2, 3], 5, 1), vec![0, 3]);
    }

    #[test]
    fn groups_are_greedy_from_the_left() {
        // five numbers with k = 2: groups {0,2} {4,6} {8}
        assert_eq!(isolate_boundaries(&[0, 2, 4, 6, 8], 9, 2), vec![0, 4, 8]);
    }

    #[test]
    fn no_numbers_means_one_segment() {
        let c = corpus(vec![vec![1, 2, 3], vec![]]);
        let plan = isolate_k(&c, 2).unwrap().plan.unwrap();
        assert_eq!(plan.sequences[0].boundaries, vec![0]);
        assert!(plan.sequences[1].boundaries.is_empty());
        assert!(isolate_k(&c, 0).is_err());
    }
}
