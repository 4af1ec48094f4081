use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n_tokens × dim` real matrix; row `n` is the embedding of token (number) `n`.
///
/// Values are held in double precision row-major order regardless of the
/// precision they were stored with on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    n_tokens: usize,
    dim: usize,
    values: Vec<f64>,
    label: String,
}

impl EmbeddingTable {
    pub fn new(n_tokens: usize, dim: usize, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if n_tokens < 2 {
            return Err(Error::InvalidShape(format!("n_tokens must be at least 2, got {n_tokens}")));
        }
        if dim < 1 {
            return Err(Error::InvalidShape("dim must be at least 1".into()));
        }
        if values.len() != n_tokens * dim {
            return Err(Error::PayloadMismatch {
                expected: n_tokens * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(EmbeddingTable {
            n_tokens,
            dim,
            values,
            label: label.into(),
        })
    }

    /// Build a table from a row generator.
    pub fn from_fn(
        n_tokens: usize,
        dim: usize,
        label: impl Into<String>,
        mut row: impl FnMut(usize, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; n_tokens * dim];
        for (n, chunk) in values.chunks_mut(dim.max(1)).enumerate().take(n_tokens) {
            row(n, chunk);
        }
        Self::new(n_tokens, dim, values, label)
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Sum of squared entries, `Σ_n ‖e(n)‖²`.
    pub fn total_energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Apply `x ↦ M x` to every row, where `map` is `out_dim × dim` row-major.
    pub fn map_rows(&self, map: &[f64], out_dim: usize) -> Result<Self> {
        if map.len() != out_dim * self.dim {
            return Err(Error::InvalidShape(format!(
                "map has {} entries, expected {}×{}",
                map.len(),
                out_dim,
                self.dim
            )));
        }
        Self::from_fn(self.n_tokens, out_dim, self.label.clone(), |n, out| {
            let x = self.row(n);
            for (i, o) in out.iter_mut().enumerate() {
                *o = map[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        })
    }
}

/// Raw number-token counts and their normalized probabilities `p_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenFrequencyTable {
    counts: Vec<u64>,
    probs: Vec<f64>,
}

impl TokenFrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::NoNumberTokens);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(TokenFrequencyTable { counts, probs })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Represent each number by its scalar corpus frequency: an `N × 1` table with `values[n] = p_n`.
pub fn frequency_embedding(freq: &TokenFrequencyTable) -> Result<EmbeddingTable> {
    EmbeddingTable::new(freq.len(), 1, freq.probs().to_vec(), "token-frequency")
}
