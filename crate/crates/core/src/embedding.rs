//! Dense embedding matrices and the `EMB1` binary format.
//!
//! Layout (all integers little-endian):
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..4   | magic `EMB1`                              |
//! | 4      | dtype code: 0 = f32, 1 = f64              |
//! | 5..8   | zero padding                              |
//! | 8..16  | `n` (u64)                                 |
//! | 16..24 | `d` (u64)                                 |
//! | 24..   | `n * d` values, row-major                 |
//!
//! Values are held as `f64` in memory whatever the file precision; an `f32`
//! file round-trips bit-exactly because every `f32` is representable as `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::write_atomic;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// An `n x d` matrix of layer activations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
    dtype: Dtype,
    pub layer_name: String,
    pub run_id: String,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_dtype(n, d, data, Dtype::F64)
    }

    pub fn with_dtype(n: usize, d: usize, data: Vec<f64>, dtype: Dtype) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidShape {
                n,
                d,
                reason: "feature dimension must be at least 1".into(),
            });
        }
        match n.checked_mul(d) {
            Some(len) if len == data.len() => {}
            _ => {
                return Err(Error::InvalidShape {
                    n,
                    d,
                    reason: format!("data has {} values", data.len()),
                })
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                offset: (HEADER_LEN + pos * dtype.width()) as u64,
            });
        }
        Ok(Self {
            n,
            d,
            data,
            dtype,
            layer_name: String::new(),
            run_id: String::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::InvalidShape {
                n: rows.len(),
                d,
                reason: format!("ragged row of length {}", bad.len()),
            });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn named(mut self, layer_name: impl Into<String>, run_id: impl Into<String>) -> Self {
        self.layer_name = layer_name.into();
        self.run_id = run_id.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn set_dtype(&mut self, dtype: Dtype) {
        self.dtype = dtype;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Copies the given rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            n: indices.len(),
            d: self.d,
            data,
            dtype: self.dtype,
            layer_name: self.layer_name.clone(),
            run_id: self.run_id.clone(),
        }
    }
}

/// Serializes a matrix to the `EMB1` byte layout.
pub fn encode_embeddings(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.data.len() * matrix.dtype.width());
    out.extend_from_slice(MAGIC);
    out.push(matrix.dtype.code());
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&(matrix.n as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.d as u64).to_le_bytes());
    match matrix.dtype {
        Dtype::F32 => {
            for &v in &matrix.data {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for &v in &matrix.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn need(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    bytes.get(offset..offset + len).ok_or(Error::TruncatedFile {
        offset: offset as u64,
        needed: len as u64,
    })
}

/// Parses an `EMB1` byte stream.
pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let magic = need(bytes, 0, 4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic { offset: 0 });
    }
    let code = need(bytes, 4, 1)?[0];
    let dtype = Dtype::from_code(code).ok_or(Error::BadDtype { offset: 4, code })?;
    let read_u64 = |offset: usize| -> Result<u64> {
        let raw = need(bytes, offset, 8)?;
        Ok(u64::from_le_bytes(raw.try_into().expect("8-byte slice")))
    };
    let n = read_u64(8)?;
    let d = read_u64(16)?;
    let shape_err = |reason: &str| Error::InvalidShape {
        n: n as usize,
        d: d as usize,
        reason: reason.into(),
    };
    if d == 0 {
        return Err(shape_err("feature dimension must be at least 1"));
    }
    let count = n
        .checked_mul(d)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| shape_err("n * d overflows"))?;
    let width = dtype.width();
    let body_len = count
        .checked_mul(width)
        .ok_or_else(|| shape_err("n * d overflows"))?;
    let available = bytes.len() - HEADER_LEN.min(bytes.len());
    if available < body_len {
        // Offset of the first value that is not fully present.
        let first_missing = HEADER_LEN + (available / width) * width;
        return Err(Error::TruncatedFile {
            offset: first_missing as u64,
            needed: (HEADER_LEN + body_len - first_missing) as u64,
        });
    }
    if available > body_len {
        return Err(shape_err("trailing bytes after the last value"));
    }

    let body = &bytes[HEADER_LEN..];
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in body.chunks_exact(width).enumerate() {
        let v = match dtype {
            Dtype::F32 => f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64,
            Dtype::F64 => f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")),
        };
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                offset: (HEADER_LEN + i * width) as u64,
            });
        }
        data.push(v);
    }
    Ok(EmbeddingMatrix {
        n: n as usize,
        d: d as usize,
        data,
        dtype,
        layer_name: String::new(),
        run_id: String::new(),
    })
}

/// Reads an `EMB1` file. The layer name defaults to the file stem.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut m = decode_embeddings(&bytes)?;
    if let Some(stem) = path.file_stem() {
        m.layer_name = stem.to_string_lossy().into_owned();
    }
    Ok(m)
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_embeddings(matrix))
}

/// Rows that could not be normalized because their norm was zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizeSummary {
    pub zero_rows: Vec<usize>,
}

/// Scales every nonzero row to unit Euclidean norm. Zero rows are left as-is
/// and reported, so row indices stay aligned with the label table.
pub fn l2_normalize(matrix: &EmbeddingMatrix) -> (EmbeddingMatrix, NormalizeSummary) {
    let mut out = matrix.clone();
    let mut summary = NormalizeSummary::default();
    let d = out.d;
    for (i, row) in out.data.chunks_exact_mut(d).enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            summary.zero_rows.push(i);
            continue;
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_f32_byte_stream() {
        let mut m = EmbeddingMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        m.set_dtype(Dtype::F32);
        let mut expected = b"EMB1".to_vec();
        expected.extend_from_slice(&[0, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        // 1.0f32 = 0x3F800000, 2.0 = 0x40000000, 3.0 = 0x40400000, 4.0 = 0x40800000
        expected.extend_from_slice(&[0x00, 0x00, 0x80, 0x3F]);
        expected.extend_from_slice(&[0x00, 0x00, 0x00, 0x40]);
        expected.extend_from_slice(&[0x00, 0x00, 0x40, 0x40]);
        expected.extend_from_slice(&[0x00, 0x00, 0x80, 0x40]);
        assert_eq!(encode_embeddings(&m), expected);
        assert_eq!(decode_embeddings(&expected).unwrap(), m);
    }

    #[test]
    fn roundtrip_two_by_three() {
        let m = EmbeddingMatrix::new(2, 3, vec![0.1, -2.5, 3.0, 1e-300, 7.25, -0.0]).unwrap();
        let back = decode_embeddings(&encode_embeddings(&m)).unwrap();
        let bits = |m: &EmbeddingMatrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn degenerate_shapes_roundtrip() {
        let empty = EmbeddingMatrix::new(0, 5, vec![]).unwrap();
        assert_eq!(decode_embeddings(&encode_embeddings(&empty)).unwrap(), empty);
        let one = EmbeddingMatrix::new(1, 1, vec![-0.5]).unwrap();
        assert_eq!(decode_embeddings(&encode_embeddings(&one)).unwrap(), one);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_embeddings(&EmbeddingMatrix::new(1, 1, vec![1.0]).unwrap());
        bytes[..4].copy_from_slice(b"XYZ1");
        assert!(matches!(decode_embeddings(&bytes), Err(Error::BadMagic { offset: 0 })));
    }

    #[test]
    fn truncated_body_names_offset() {
        let bytes = encode_embeddings(&EmbeddingMatrix::new(2, 2, vec![1.0; 4]).unwrap());
        let cut = &bytes[..HEADER_LEN + 8 * 2 + 3];
        match decode_embeddings(cut) {
            Err(Error::TruncatedFile { offset, needed }) => {
                assert_eq!(offset, (HEADER_LEN + 16) as u64);
                assert_eq!(needed, 16);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode_embeddings(&bytes[..10]),
            Err(Error::TruncatedFile { offset: 8, .. })
        ));
    }

    #[test]
    fn non_finite_names_offset() {
        let mut bytes = encode_embeddings(&EmbeddingMatrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
        bytes[HEADER_LEN + 8..HEADER_LEN + 16].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            decode_embeddings(&bytes),
            Err(Error::NonFiniteValue { offset: 32 })
        ));
    }

    #[test]
    fn bad_dtype_and_zero_dim() {
        let mut bytes = encode_embeddings(&EmbeddingMatrix::new(1, 1, vec![1.0]).unwrap());
        bytes[4] = 7;
        assert!(matches!(decode_embeddings(&bytes), Err(Error::BadDtype { code: 7, .. })));
        assert!(EmbeddingMatrix::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let m = EmbeddingMatrix::from_rows(&[
            vec![3.0, 4.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let (out, summary) = l2_normalize(&m);
        assert!((out.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((out.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(out.row(1), &[1.0, 0.0, 0.0]);
        assert_eq!(out.row(2), &[0.0, 0.0, 0.0]);
        assert_eq!(summary.zero_rows, vec![2]);
    }
}
