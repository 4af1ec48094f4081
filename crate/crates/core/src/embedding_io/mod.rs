//! Loading, validating and persisting embedding tables, token corpora and
//! token-frequency baselines.

mod corpus;
mod npy;
mod raw;
mod table;

use std::path::Path;

pub use corpus::{
    count_number_tokens, implied_number_range, number_vocab_to_json, parse_number_vocab,
    read_sequences, write_sequences, TokenCorpus, TokenId,
};
pub use raw::Dtype;
pub use table::{frequency_embedding, EmbeddingTable, TokenFrequencyTable};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// JSON header line followed by a little-endian payload.
    Raw(Dtype),
    /// Version-1 `.npy` 2-D array.
    Npy(Dtype),
}

impl TableFormat {
    /// Pick a format from the file extension: `.npy` reads as npy, everything else as raw f32.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("npy") => TableFormat::Npy(Dtype::F32),
            _ => TableFormat::Raw(Dtype::F32),
        }
    }
}

pub fn decode_embeddings(bytes: &[u8], format: TableFormat, label: &str) -> Result<EmbeddingTable> {
    match format {
        TableFormat::Raw(_) => raw::decode(bytes),
        TableFormat::Npy(_) => npy::decode(bytes, label),
    }
}

pub fn encode_embeddings(table: &EmbeddingTable, format: TableFormat) -> Result<Vec<u8>> {
    match format {
        TableFormat::Raw(dtype) => raw::encode(table, dtype),
        TableFormat::Npy(dtype) => Ok(npy::encode(table, dtype)),
    }
}

/// Load a table. The payload dtype of raw files comes from the header; for npy from `descr`.
pub fn load_embeddings(path: impl AsRef<Path>, format: TableFormat) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    decode_embeddings(&bytes, format, label)
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(table, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a newline-JSON corpus and a JSON number-vocab file.
pub fn load_corpus(
    corpus_path: impl AsRef<Path>,
    vocab_path: impl AsRef<Path>,
    vocab_size: Option<usize>,
) -> Result<TokenCorpus> {
    let corpus_path = corpus_path.as_ref();
    let vocab_path = vocab_path.as_ref();
    let file = std::fs::File::open(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    let sequences = read_sequences(std::io::BufReader::new(file))?;
    let vocab_text = std::fs::read_to_string(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
    let number_vocab = parse_number_vocab(&vocab_text)?;
    match vocab_size {
        Some(v) => TokenCorpus::new(sequences, v, number_vocab),
        None => TokenCorpus::with_inferred_vocab(sequences, number_vocab),
    }
}

pub fn save_sequences(path: impl AsRef<Path>, sequences: &[Vec<TokenId>]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_sequences(&mut w, sequences)?;
    use std::io::Write;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_4x2() -> EmbeddingTable {
        EmbeddingTable::new(4, 2, vec![0.5, -1.0, 2.0, 3.25, 1e-3, 7.0, -8.5, 0.0], "t").unwrap()
    }

    #[test]
    fn raw_round_trip_4x2() {
        let t = table_4x2();
        let bytes = encode_embeddings(&t, TableFormat::Raw(Dtype::F32)).unwrap();
        let back = decode_embeddings(&bytes, TableFormat::Raw(Dtype::F32), "").unwrap();
        assert_eq!(back.n_tokens(), 4);
        assert_eq!(back.dim(), 2);
        assert_eq!(back.label(), "t");
        // 1e-3 is not representable in f32; everything else is.
        assert_eq!(back.values()[4], 1e-3f32 as f64);
        assert_eq!(back.values()[0], 0.5);
    }

    #[test]
    fn header_is_single_json_line() {
        let bytes = encode_embeddings(&table_4x2(), TableFormat::Raw(Dtype::F32)).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes[..nl]).unwrap(),
            r#"{"n_tokens":4,"dim":2,"label":"t"}"#
        );
        assert_eq!(bytes.len(), nl + 1 + 8 * 4);
    }

    #[test]
    fn payload_mismatch_seven_floats() {
        let mut bytes = br#"{"n_tokens":4,"dim":2,"label":""}"#.to_vec();
        bytes.push(b'\n');
        for i in 0..7 {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        match decode_embeddings(&bytes, TableFormat::Raw(Dtype::F32), "") {
            Err(Error::PayloadMismatch { expected, found }) => assert_eq!((expected, found), (8, 7)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_in_row_three() {
        let mut bytes = br#"{"n_tokens":4,"dim":2}"#.to_vec();
        bytes.push(b'\n');
        for i in 0..8 {
            let v = if i == 6 { f32::NAN } else { i as f32 };
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        match decode_embeddings(&bytes, TableFormat::Raw(Dtype::F32), "") {
            Err(Error::NonFinite { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            decode_embeddings(b"not json\n", TableFormat::Raw(Dtype::F32), ""),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_embeddings(b"no newline", TableFormat::Raw(Dtype::F32), ""),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn npy_round_trip_both_dtypes() {
        let t = table_4x2();
        let b64 = encode_embeddings(&t, TableFormat::Npy(Dtype::F64)).unwrap();
        assert_eq!((10 + u16::from_le_bytes([b64[8], b64[9]]) as usize) % 64, 0);
        let back = decode_embeddings(&b64, TableFormat::Npy(Dtype::F64), "t").unwrap();
        assert_eq!(back, t);
        let b32 = encode_embeddings(&t, TableFormat::Npy(Dtype::F32)).unwrap();
        let back = decode_embeddings(&b32, TableFormat::Npy(Dtype::F32), "t").unwrap();
        for (a, b) in back.values().iter().zip(t.values()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn npy_rejects_3d() {
        let mut header = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2, 2), }".to_string();
        header.push('\n');
        let mut bytes = b"\x93NUMPY\x01\x00".to_vec();
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&[0u8; 32]);
        assert!(matches!(
            decode_embeddings(&bytes, TableFormat::Npy(Dtype::F32), ""),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn save_to_missing_directory_is_io_error() {
        let err = save_embeddings(
            &table_4x2(),
            "/nonexistent-dir/definitely/not/here.bin",
            TableFormat::Raw(Dtype::F32),
        );
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
