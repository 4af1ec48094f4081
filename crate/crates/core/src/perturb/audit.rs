use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PerturbedCorpus;
use crate::embedding_io::TokenCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDelta {
    pub token: u32,
    pub value: u32,
    pub count_before: u64,
    pub count_after: u64,
    pub freq_before: f64,
    pub freq_after: f64,
    /// `freq_after − freq_before`.
    pub delta: f64,
}

/// What a perturbation did to the number tokens of a corpus.
///
/// "Adjacent number pairs" are consecutive number tokens of one sequence, ignoring the
/// text between them. Positional statistics compare slot by slot and are only defined
/// when both corpora have the same number positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalAudit {
    pub numbers_before: u64,
    pub numbers_after: u64,
    /// One row per number token seen in either corpus, sorted by token id.
    pub per_token: Vec<TokenDelta>,
    /// Total-variation distance between the two number-token marginals.
    pub marginal_tv: f64,
    /// Total-variation distance between the distributions of adjacent number pairs.
    pub bigram_tv: f64,
    /// Fraction of number slots whose token is unchanged.
    pub unigram_survival: Option<f64>,
    /// `Σ p²` under the before marginal: expected unigram survival after i.i.d. resampling.
    pub unigram_survival_baseline: f64,
    /// Fraction of adjacent number pairs kept identical at the same slots.
    pub bigram_survival: Option<f64>,
    /// Mean of `p(a)·p(b)` over the before pairs `(a, b)`: expected bigram survival after
    /// i.i.d. resampling.
    pub bigram_survival_baseline: Option<f64>,
}

fn number_stream<'a>(corpus: &'a TokenCorpus, seq: &'a [u32]) -> impl Iterator<Item = u32> + 'a {
    seq.iter().copied().filter(|&t| corpus.is_number(t))
}

fn marginal(corpus: &TokenCorpus) -> BTreeMap<u32, u64> {
    let mut counts = BTreeMap::new();
    for seq in corpus.sequences() {
        for t in number_stream(corpus, seq) {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts
}

fn bigrams(corpus: &TokenCorpus) -> BTreeMap<(u32, u32), u64> {
    let mut counts = BTreeMap::new();
    for seq in corpus.sequences() {
        let nums: Vec<u32> = number_stream(corpus, seq).collect();
        for w in nums.windows(2) {
            *counts.entry((w[0], w[1])).or_default() += 1;
        }
    }
    counts
}

fn total_variation<K: Ord + Copy>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let freq = |m: &BTreeMap<K, u64>, n: u64, k: &K| {
        if n == 0 {
            0.0
        } else {
            m.get(k).copied().unwrap_or(0) as f64 / n as f64
        }
    };
    let keys: std::collections::BTreeSet<K> = a.keys().chain(b.keys()).copied().collect();
    0.5 * keys
        .iter()
        .map(|k| (freq(a, na, k) - freq(b, nb, k)).abs())
        .sum::<f64>()
}

fn same_positions(before: &TokenCorpus, after: &TokenCorpus) -> bool {
    before.sequences().len() == after.sequences().len()
        && before
            .sequences()
            .iter()
            .zip(after.sequences())
            .all(|(a, b)| a.len() == b.len() && before.number_positions(a) == after.number_positions(b))
}

pub fn marginal_audit(before: &TokenCorpus, after: &PerturbedCorpus) -> Result<MarginalAudit> {
    let after_corpus = &after.corpus;
    if before.number_vocab() != after_corpus.number_vocab() {
        return Err(Error::VocabMismatch);
    }
    let m_before = marginal(before);
    let m_after = marginal(after_corpus);
    let n_before: u64 = m_before.values().sum();
    let n_after: u64 = m_after.values().sum();
    let freq = |c: u64, n: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };

    let tokens: std::collections::BTreeSet<u32> = m_before.keys().chain(m_after.keys()).copied().collect();
    let per_token: Vec<TokenDelta> = tokens
        .into_iter()
        .map(|t| {
            let cb = m_before.get(&t).copied().unwrap_or(0);
            let ca = m_after.get(&t).copied().unwrap_or(0);
            let (fb, fa) = (freq(cb, n_before), freq(ca, n_after));
            TokenDelta {
                token: t,
                value: before.number_vocab()[&t],
                count_before: cb,
                count_after: ca,
                freq_before: fb,
                freq_after: fa,
                delta: fa - fb,
            }
        })
        .collect();

    let p = |t: u32| freq(m_before.get(&t).copied().unwrap_or(0), n_before);
    let unigram_survival_baseline = m_before.keys().map(|&t| p(t) * p(t)).sum();

    let (mut unigram_survival, mut bigram_survival, mut bigram_survival_baseline) = (None, None, None);
    if same_positions(before, after_corpus) {
        let (mut slots, mut kept, mut pairs, mut pairs_kept) = (0u64, 0u64, 0u64, 0u64);
        let mut baseline_sum = 0.0;
        for (sb, sa) in before.sequences().iter().zip(after_corpus.sequences()) {
            let nb: Vec<u32> = number_stream(before, sb).collect();
            let na: Vec<u32> = number_stream(after_corpus, sa).collect();
            slots += nb.len() as u64;
            kept += nb.iter().zip(&na).filter(|(a, b)| a == b).count() as u64;
            for i in 1..nb.len() {
                pairs += 1;
                if nb[i - 1] == na[i - 1] && nb[i] == na[i] {
                    pairs_kept += 1;
                }
                baseline_sum += p(nb[i - 1]) * p(nb[i]);
            }
        }
        if slots > 0 {
            unigram_survival = Some(kept as f64 / slots as f64);
        }
        if pairs > 0 {
            bigram_survival = Some(pairs_kept as f64 / pairs as f64);
            bigram_survival_baseline = Some(baseline_sum / pairs as f64);
        }
    }

    Ok(MarginalAudit {
        numbers_before: n_before,
        numbers_after: n_after,
        per_token,
        marginal_tv: total_variation(&m_before, &m_after),
        bigram_tv: total_variation(&bigrams(before), &bigrams(after_corpus)),
        unigram_survival,
        unigram_survival_baseline,
        bigram_survival,
        bigram_survival_baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{context_window, unigram_replace};

    fn corpus() -> TokenCorpus {
        let vocab: BTreeMap<u32, u32> = (100..110).map(|t| (t, t - 100)).collect();
        TokenCorpus::new(
            vec![vec![1, 101, 102, 2, 103], vec![104, 3, 101, 102]],
            200,
            vocab,
        )
        .unwrap()
    }

    #[test]
    fn identity_has_zero_deltas() {
        let c = corpus();
        let a = marginal_audit(&c, &PerturbedCorpus::identity(&c)).unwrap();
        assert!(a.per_token.iter().all(|d| d.delta == 0.0));
        assert_eq!(a.marginal_tv, 0.0);
        assert_eq!(a.bigram_tv, 0.0);
        assert_eq!(a.unigram_survival, Some(1.0));
        assert_eq!(a.bigram_survival, Some(1.0));
    }

    #[test]
    fn baselines_match_hand_computation() {
        let c = corpus();
        let a = marginal_audit(&c, &PerturbedCorpus::identity(&c)).unwrap();
        // marginal: 101×2, 102×2, 103×1, 104×1 over 6
        let expect = (4.0 + 4.0 + 1.0 + 1.0) / 36.0;
        assert!((a.unigram_survival_baseline - expect).abs() < 1e-15);
        // pairs: (101,102) (102,103) (104,101) (101,102)
        let p = |c: f64| c / 6.0;
        let pairs = [p(2.0) * p(2.0), p(2.0) * p(1.0), p(1.0) * p(2.0), p(2.0) * p(2.0)];
        let expect = pairs.iter().sum::<f64>() / 4.0;
        assert!((a.bigram_survival_baseline.unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn reshaped_corpus_has_no_positional_survival() {
        let c = corpus();
        let a = marginal_audit(&c, &context_window(&c, 2).unwrap()).unwrap();
        assert!(a.unigram_survival.is_none());
        assert!(a.bigram_survival.is_none());
        assert!(a.marginal_tv >= 0.0);
    }

    #[test]
    fn vocab_mismatch_is_rejected() {
        let c = corpus();
        let other = TokenCorpus::new(c.sequences().to_vec(), 200, (100..111).map(|t| (t, t - 100)).collect()).unwrap();
        let after = unigram_replace(&other, 1).unwrap();
        assert!(matches!(marginal_audit(&c, &after), Err(Error::VocabMismatch)));
    }
}
