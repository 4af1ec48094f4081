//! Minimal reader/writer for version-1 `.npy` files holding 2-D float arrays.

use super::raw::{decode_le, encode_le, Dtype};
use super::table::EmbeddingTable;
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

pub(crate) fn decode(bytes: &[u8], label: &str) -> Result<EmbeddingTable> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::MalformedHeader("missing npy magic".into()));
    }
    let (header_len, start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (
            u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
            12,
        ),
        v => return Err(Error::MalformedHeader(format!("unsupported npy version {v}"))),
    };
    let header = bytes
        .get(start..start + header_len)
        .ok_or_else(|| Error::MalformedHeader("truncated npy header".into()))?;
    let header = std::str::from_utf8(header).map_err(|e| Error::MalformedHeader(e.to_string()))?;

    let descr = dict_value(header, "descr")?;
    let dtype = match descr.trim_matches(|c| c == '\'' || c == '"') {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => return Err(Error::MalformedHeader(format!("unsupported dtype {other}"))),
    };
    if dict_value(header, "fortran_order")? != "False" {
        return Err(Error::MalformedHeader("fortran-ordered arrays are not supported".into()));
    }
    let shape = dict_value(header, "shape")?;
    let dims: Vec<usize> = shape
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::MalformedHeader(format!("bad shape {shape}: {e}")))?;
    let (n, d) = match dims.as_slice() {
        [n, d] => (*n, *d),
        _ => return Err(Error::MalformedHeader(format!("expected a 2-D array, got shape {shape}"))),
    };
    let payload = &bytes[start + header_len..];
    let width = if dtype == Dtype::F32 { 4 } else { 8 };
    if payload.len() != n * d * width {
        return Err(Error::PayloadMismatch {
            expected: n * d,
            found: payload.len() / width,
        });
    }
    EmbeddingTable::new(n, d, decode_le(payload, dtype), label)
}

pub(crate) fn encode(table: &EmbeddingTable, dtype: Dtype) -> Vec<u8> {
    let descr = if dtype == Dtype::F32 { "<f4" } else { "<f8" };
    let mut header = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': ({}, {}), }}",
        table.n_tokens(),
        table.dim()
    );
    // Pad so that the payload starts on a 64-byte boundary.
    let unpadded = MAGIC.len() + 4 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + table.values().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    encode_le(table.values(), dtype, &mut out);
    out
}

/// Pull the raw text of `key`'s value out of a python dict literal.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let needle = format!("'{key}':");
    let at = header
        .find(&needle)
        .ok_or_else(|| Error::MalformedHeader(format!("npy header lacks '{key}'")))?;
    let rest = header[at + needle.len()..].trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find(',')
    }
    .ok_or_else(|| Error::MalformedHeader(format!("unterminated value for '{key}'")))?;
    Ok(rest[..end].trim())
}
