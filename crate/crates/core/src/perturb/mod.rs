//! Corpus perturbations that each remove one kind of number co-occurrence signal while
//! leaving text tokens alone, plus an audit of what a perturbation changed.
//!
//! Randomized transforms derive one generator per sequence from `(seed, sequence index)`,
//! so results do not depend on the order sequences are processed in.

mod audit;
mod isolate;
mod swap;
mod unigram;
mod window;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::embedding_io::TokenCorpus;
use crate::error::{Error, Result};

pub use audit::{marginal_audit, MarginalAudit, TokenDelta};
pub use isolate::isolate_k;
pub use swap::{swap_numbers, SwapOptions};
pub use unigram::unigram_replace;
pub use window::context_window;

/// Segmentation of one sequence for block-diagonal attention.
///
/// `loss_mask[i]` refers to predicting token `i` from the prefix before it, so it is 0
/// at every segment start (including position 0), where the prefix lies in another segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequencePlan {
    /// Segment start indices; always begins with 0 for a non-empty sequence.
    pub boundaries: Vec<usize>,
    pub segment_ids: Vec<u32>,
    pub position_ids: Vec<u32>,
    pub loss_mask: Vec<u8>,
}

impl SequencePlan {
    /// Build the per-token arrays from segment starts. `boundaries` must be strictly
    /// increasing, start at 0 and stay below `len` (empty when `len == 0`).
    pub fn from_boundaries(len: usize, boundaries: Vec<usize>) -> Self {
        debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(len == 0 || boundaries.first() == Some(&0));
        let mut segment_ids = Vec::with_capacity(len);
        let mut position_ids = Vec::with_capacity(len);
        let mut loss_mask = Vec::with_capacity(len);
        let mut seg = 0usize;
        let mut start = 0usize;
        for i in 0..len {
            if seg + 1 < boundaries.len() && boundaries[seg + 1] == i {
                seg += 1;
            }
            if boundaries.get(seg) == Some(&i) {
                start = i;
            }
            segment_ids.push(seg as u32);
            position_ids.push((i - start) as u32);
            loss_mask.push(u8::from(i != start));
        }
        SequencePlan {
            boundaries,
            segment_ids,
            position_ids,
            loss_mask,
        }
    }

    /// One segment covering the whole sequence.
    pub fn single(len: usize) -> Self {
        Self::from_boundaries(len, if len == 0 { vec![] } else { vec![0] })
    }

    pub fn len(&self) -> usize {
        self.segment_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment_ids.is_empty()
    }

    /// Half-open index ranges of the segments.
    pub fn segments(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        let len = self.len();
        self.boundaries
            .iter()
            .enumerate()
            .map(move |(i, &s)| s..self.boundaries.get(i + 1).copied().unwrap_or(len))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub sequences: Vec<SequencePlan>,
}

impl SegmentPlan {
    /// Newline-delimited JSON, one [`SequencePlan`] per line, parallel to the corpus file.
    pub fn write_ndjson(&self, mut writer: impl Write) -> Result<()> {
        for plan in &self.sequences {
            serde_json::to_writer(&mut writer, plan)?;
            writer
                .write_all(b"\n")
                .map_err(|e| Error::io("<plan output>", e))?;
        }
        Ok(())
    }
}

/// Which transform produced a corpus and with what settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub perturbation: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedCorpus {
    pub corpus: TokenCorpus,
    pub plan: Option<SegmentPlan>,
    pub provenance: Provenance,
}

impl PerturbedCorpus {
    /// The unchanged corpus, useful as an audit baseline.
    pub fn identity(corpus: &TokenCorpus) -> Self {
        PerturbedCorpus {
            corpus: corpus.clone(),
            plan: None,
            provenance: Provenance {
                perturbation: "identity".into(),
                parameters: serde_json::json!({}),
                seed: None,
            },
        }
    }

    pub fn sequences(&self) -> &[Vec<u32>] {
        self.corpus.sequences()
    }
}

fn require_numbers(corpus: &TokenCorpus) -> Result<()> {
    let any = corpus
        .sequences()
        .iter()
        .flatten()
        .any(|&t| corpus.is_number(t));
    if any {
        Ok(())
    } else {
        Err(Error::NoNumberTokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_from_boundaries() {
        let p = SequencePlan::from_boundaries(6, vec![0, 3]);
        assert_eq!(p.segment_ids, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(p.position_ids, vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(p.loss_mask, vec![0, 1, 1, 0, 1, 1]);
        assert_eq!(p.segments().collect::<Vec<_>>(), vec![0..3, 3..6]);
    }

    #[test]
    fn single_and_empty_plans() {
        let p = SequencePlan::single(3);
        assert_eq!(p.position_ids, vec![0, 1, 2]);
        assert_eq!(p.loss_mask, vec![0, 1, 1]);
        let e = SequencePlan::single(0);
        assert!(e.is_empty() && e.boundaries.is_empty());
    }

    #[test]
    fn plan_ndjson_has_one_line_per_sequence() {
        let plan = SegmentPlan {
            sequences: vec![SequencePlan::single(2), SequencePlan::from_boundaries(4, vec![0, 2])],
        };
        let mut buf = Vec::new();
        plan.write_ndjson(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: SequencePlan = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(back.boundaries, vec![0, 2]);
    }
}
