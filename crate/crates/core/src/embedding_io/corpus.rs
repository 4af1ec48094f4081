use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::table::TokenFrequencyTable;
use crate::error::{Error, Result};

pub type TokenId = u32;

/// Token-id sequences plus the external map saying which ids are number tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCorpus {
    sequences: Vec<Vec<TokenId>>,
    vocab_size: usize,
    number_vocab: BTreeMap<TokenId, u32>,
}

impl TokenCorpus {
    pub fn new(
        sequences: Vec<Vec<TokenId>>,
        vocab_size: usize,
        number_vocab: BTreeMap<TokenId, u32>,
    ) -> Result<Self> {
        for (i, seq) in sequences.iter().enumerate() {
            if let Some(&t) = seq.iter().find(|&&t| t as usize >= vocab_size) {
                return Err(Error::Corpus(format!(
                    "sequence {i} holds token {t} outside vocab of size {vocab_size}"
                )));
            }
        }
        if let Some(&k) = number_vocab.keys().find(|&&k| k as usize >= vocab_size) {
            return Err(Error::Corpus(format!(
                "number vocab key {k} outside vocab of size {vocab_size}"
            )));
        }
        Ok(TokenCorpus {
            sequences,
            vocab_size,
            number_vocab,
        })
    }

    /// Vocabulary size taken as one past the largest id seen in sequences or the number map.
    pub fn with_inferred_vocab(
        sequences: Vec<Vec<TokenId>>,
        number_vocab: BTreeMap<TokenId, u32>,
    ) -> Result<Self> {
        let max_seq = sequences.iter().flatten().copied().max();
        let max_num = number_vocab.keys().copied().max();
        let vocab_size = max_seq.max(max_num).map_or(0, |m| m as usize + 1);
        Self::new(sequences, vocab_size, number_vocab)
    }

    pub fn sequences(&self) -> &[Vec<TokenId>] {
        &self.sequences
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn number_vocab(&self) -> &BTreeMap<TokenId, u32> {
        &self.number_vocab
    }

    pub fn is_number(&self, token: TokenId) -> bool {
        self.number_vocab.contains_key(&token)
    }

    /// Positions of number tokens within one sequence.
    pub fn number_positions(&self, seq: &[TokenId]) -> Vec<usize> {
        seq.iter()
            .enumerate()
            .filter(|(_, t)| self.is_number(**t))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub(crate) fn replace_sequences(&self, sequences: Vec<Vec<TokenId>>) -> TokenCorpus {
        TokenCorpus {
            sequences,
            vocab_size: self.vocab_size,
            number_vocab: self.number_vocab.clone(),
        }
    }
}

/// Read newline-delimited JSON: one array of token ids per line. Blank lines are skipped.
pub fn read_sequences(reader: impl BufRead) -> Result<Vec<Vec<TokenId>>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Corpus(format!("line {}: {e}", lineno + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let seq: Vec<TokenId> = serde_json::from_str(&line)
            .map_err(|e| Error::Corpus(format!("line {}: {e}", lineno + 1)))?;
        out.push(seq);
    }
    Ok(out)
}

pub fn write_sequences(mut writer: impl Write, sequences: &[Vec<TokenId>]) -> Result<()> {
    for seq in sequences {
        serde_json::to_writer(&mut writer, seq)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::Corpus(e.to_string()))?;
    }
    Ok(())
}

/// Parse a number-vocab JSON object mapping token-id strings to integer values.
pub fn parse_number_vocab(json: &str) -> Result<BTreeMap<TokenId, u32>> {
    let raw: BTreeMap<String, u32> = serde_json::from_str(json)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<TokenId>()
                .map(|id| (id, v))
                .map_err(|e| Error::Corpus(format!("vocab key {k:?}: {e}")))
        })
        .collect()
}

pub fn number_vocab_to_json(vocab: &BTreeMap<TokenId, u32>) -> Result<String> {
    let raw: BTreeMap<String, u32> = vocab.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(serde_json::to_string(&raw)?)
}

/// Count occurrences of every number value `0..n_values` across the corpus.
pub fn count_number_tokens(corpus: &TokenCorpus, n_values: usize) -> Result<TokenFrequencyTable> {
    if let Some(&value) = corpus.number_vocab().values().find(|&&v| v as usize >= n_values) {
        return Err(Error::NumberOutOfRange { value, n_values });
    }
    let mut counts = vec![0u64; n_values];
    for &t in corpus.sequences().iter().flatten() {
        if let Some(&v) = corpus.number_vocab().get(&t) {
            counts[v as usize] += 1;
        }
    }
    TokenFrequencyTable::from_counts(counts)
}

/// Number of distinct number values implied by a vocab: one past the largest value.
pub fn implied_number_range(vocab: &BTreeMap<TokenId, u32>) -> usize {
    vocab.values().max().map_or(0, |&m| m as usize + 1)
}
