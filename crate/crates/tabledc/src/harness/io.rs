//! Matrix, label, and model-state files.
//!
//! CSV matrices are UTF-8, comma-separated, decimal point, one instance
//! per row; an optional header line can be skipped. The binary matrix
//! format is bit-exact: magic `TDC1`, then unsigned 32-bit little-endian
//! row and column counts, then row-major 32-bit little-endian IEEE-754
//! values. Values are widened to 64-bit on load.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::autoencoder::{AeConfig, AutoencoderState, HiddenActivation, LayerParams};
use crate::linalg::Matrix;

/// On-disk matrix encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Bin,
}

const MATRIX_MAGIC: &[u8; 4] = b"TDC1";
const STATE_MAGIC: &[u8; 4] = b"TDCA";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads an embedding matrix. Row and column coordinates in errors are
/// 1-based file positions.
pub fn load_matrix(
    path: impl AsRef<Path>,
    format: MatrixFormat,
    header: bool,
) -> Result<Matrix, HarnessError> {
    let path = path.as_ref();
    match format {
        MatrixFormat::Csv => load_matrix_csv(path, header),
        MatrixFormat::Bin => load_matrix_binary(path),
    }
}

fn load_matrix_csv(path: &Path, header: bool) -> Result<Matrix, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut data: Vec<f64> = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        if header && line_no == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = rows + 1;
        let mut found = 0usize;
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| HarnessError::NonNumericCell {
                row,
                col: c + 1,
                content: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(HarnessError::NonFiniteValue { row, col: c + 1 });
            }
            data.push(value);
            found += 1;
        }
        match cols {
            None => cols = Some(found),
            Some(expected) if expected != found => {
                return Err(HarnessError::RaggedRows {
                    row,
                    expected,
                    found,
                });
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| HarnessError::EmptyFile {
        path: path.display().to_string(),
    })?;
    Ok(Matrix::new(rows, cols, data).expect("validated during parse"))
}

fn load_matrix_binary(path: &Path) -> Result<Matrix, HarnessError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = || HarnessError::BadBinary {
        path: path.display().to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != MATRIX_MAGIC {
        return Err(bad());
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|cells| cells.checked_mul(4))
        .and_then(|payload| payload.checked_add(12));
    if expected != Some(bytes.len()) {
        return Err(bad());
    }
    if n == 0 || d == 0 {
        return Err(HarnessError::EmptyFile {
            path: path.display().to_string(),
        });
    }
    let mut data = Vec::with_capacity(n * d);
    for (idx, chunk) in bytes[12..].chunks_exact(4).enumerate() {
        let value = f32::from_le_bytes(chunk.try_into().unwrap());
        if !value.is_finite() {
            return Err(HarnessError::NonFiniteValue {
                row: idx / d + 1,
                col: idx % d + 1,
            });
        }
        data.push(value as f64);
    }
    Ok(Matrix::new(n, d, data).expect("validated during parse"))
}

/// Writes the binary matrix format. Values are narrowed to 32-bit.
pub fn save_matrix_binary(path: impl AsRef<Path>, m: &Matrix) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(12 + m.data().len() * 4);
    bytes.extend_from_slice(MATRIX_MAGIC);
    bytes.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &v in m.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes a matrix as plain CSV without a header.
pub fn save_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Loads a label vector: one non-negative integer per line. Line numbers
/// in errors are 1-based.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut labels = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('-') {
            return Err(HarnessError::NegativeLabel { line: line_no + 1 });
        }
        let value: usize = line.parse().map_err(|_| HarnessError::NonIntegerLine {
            line: line_no + 1,
            content: line.to_string(),
        })?;
        labels.push(value);
    }
    if labels.is_empty() {
        return Err(HarnessError::EmptyFile {
            path: path.display().to_string(),
        });
    }
    Ok(labels)
}

/// Writes labels, one integer per line.
pub fn save_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 4);
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

fn push_f64s(bytes: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a trained autoencoder (configuration, weights, biases) so a
/// pretraining run can be reused across invocations. Parameters are stored
/// as 64-bit values; the round trip is bit-exact. Optimizer moments are
/// not kept, matching the fresh optimizer each training phase starts with.
pub fn save_ae_state(path: impl AsRef<Path>, state: &AutoencoderState) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(STATE_MAGIC);
    let dims = &state.config.layer_dims;
    bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        bytes.extend_from_slice(&(d as u32).to_le_bytes());
    }
    bytes.push(match state.config.activation {
        HiddenActivation::Relu => 0,
        HiddenActivation::Sigmoid => 1,
    });
    for layer in state.encoder.iter().chain(&state.decoder) {
        push_f64s(&mut bytes, layer.weights.data());
        push_f64s(&mut bytes, &layer.bias);
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&bytes).map_err(io_err(path))
}

/// Loads an autoencoder snapshot written by [`save_ae_state`].
pub fn load_ae_state(path: impl AsRef<Path>) -> Result<AutoencoderState, HarnessError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = || HarnessError::BadBinary {
        path: path.display().to_string(),
    };

    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8], HarnessError> {
        let end = cursor.checked_add(n).filter(|&e| e <= bytes.len());
        let Some(end) = end else {
            return Err(bad());
        };
        let slice = &bytes[cursor..end];
        cursor = end;
        Ok(slice)
    };

    if take(4)? != STATE_MAGIC {
        return Err(bad());
    }
    let n_dims = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if !(2..=64).contains(&n_dims) {
        return Err(bad());
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
    }
    let activation = match take(1)?[0] {
        0 => HiddenActivation::Relu,
        1 => HiddenActivation::Sigmoid,
        _ => return Err(bad()),
    };
    let config = AeConfig::new(dims.clone(), activation).map_err(|_| bad())?;

    let mut read_f64s = |count: usize| -> Result<Vec<f64>, HarnessError> {
        let byte_count = count.checked_mul(8).ok_or_else(bad)?;
        let slice = take(byte_count)?;
        Ok(slice
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };

    let mut read_stack = |pairs: Vec<(usize, usize)>| -> Result<Vec<LayerParams>, HarnessError> {
        let mut layers = Vec::with_capacity(pairs.len());
        for (in_dim, out_dim) in pairs {
            let cells = out_dim.checked_mul(in_dim).ok_or_else(bad)?;
            let weights = Matrix::new(out_dim, in_dim, read_f64s(cells)?).map_err(|_| bad())?;
            let bias = read_f64s(out_dim)?;
            layers.push(LayerParams { weights, bias });
        }
        Ok(layers)
    };

    let enc_pairs: Vec<(usize, usize)> = dims.windows(2).map(|w| (w[0], w[1])).collect();
    let dec_pairs: Vec<(usize, usize)> = enc_pairs.iter().rev().map(|&(a, b)| (b, a)).collect();
    let encoder = read_stack(enc_pairs)?;
    let decoder = read_stack(dec_pairs)?;
    if cursor != bytes.len() {
        return Err(bad());
    }

    let mut state = AutoencoderState::init(config, &mut crate::rng::RngState::new(0));
    state.encoder = encoder;
    state.decoder = decoder;
    state.reset_optimizer();
    Ok(state)
}
