//! Raw container: one JSON header line followed by a little-endian float payload.
//!
//! ```text
//! {"n_tokens":N,"dim":d,"label":"..."}\n<N·d little-endian f32>
//! ```
//!
//! An optional `"dtype":"f64"` header field switches the payload to f64.

use serde::{Deserialize, Serialize};

use super::table::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n_tokens: usize,
    dim: usize,
    #[serde(default)]
    label: String,
    #[serde(default, skip_serializing_if = "is_f32")]
    dtype: Dtype,
}

fn is_f32(d: &Dtype) -> bool {
    *d == Dtype::F32
}

pub(crate) fn decode(bytes: &[u8]) -> Result<EmbeddingTable> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.n_tokens < 2 || header.dim < 1 {
        return Err(Error::MalformedHeader(format!(
            "invalid shape {}×{}",
            header.n_tokens, header.dim
        )));
    }
    let payload = &bytes[newline + 1..];
    let width = header.dtype.width();
    let expected = header.n_tokens * header.dim;
    if payload.len() != expected * width {
        return Err(Error::PayloadMismatch {
            expected,
            found: payload.len() / width,
        });
    }
    let values = decode_le(payload, header.dtype);
    EmbeddingTable::new(header.n_tokens, header.dim, values, header.label)
}

pub(crate) fn encode(table: &EmbeddingTable, dtype: Dtype) -> Result<Vec<u8>> {
    let header = Header {
        n_tokens: table.n_tokens(),
        dim: table.dim(),
        label: table.label().to_string(),
        dtype,
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(table.values().len() * dtype.width());
    encode_le(table.values(), dtype, &mut out);
    Ok(out)
}

pub(crate) fn decode_le(payload: &[u8], dtype: Dtype) -> Vec<f64> {
    match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    }
}

pub(crate) fn encode_le(values: &[f64], dtype: Dtype, out: &mut Vec<u8>) {
    for &v in values {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}
