//! Dataset loaders: fvecs, idx image files, and whitespace text embeddings.
//!
//! Every loader returns a dense `Points<f64>` matrix; empty inputs yield a
//! matrix whose `is_empty()` flag is set. Errors carry the byte offset (or
//! line number, for text) where parsing failed.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, LittleEndian, ReadBytesExt, WriteBytesExt};
use fairsample::Points;
use thiserror::Error;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("truncated record at byte offset {offset}: {context}")]
    Truncated { offset: u64, context: String },
    #[error(
        "inconsistent vector dimension at byte offset {offset}: expected {expected}, got {got}"
    )]
    InconsistentDim {
        offset: u64,
        expected: usize,
        got: usize,
    },
    #[error("invalid vector dimension {dim} at byte offset {offset}")]
    InvalidDim { offset: u64, dim: i32 },
    #[error("bad magic 0x{got:08X} at byte offset 0: expected 0x{IDX_IMAGES_MAGIC:08X} (images) or 0x{IDX_LABELS_MAGIC:08X} (labels)")]
    BadMagic { got: u32 },
    #[error("line {line}: expected {expected} values, got {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: non-numeric field {field:?}")]
    NonNumeric { line: usize, field: String },
    #[error("line {line}: zero vector cannot be normalized")]
    ZeroVector { line: usize },
    #[error("line {line}: missing coordinates after the token")]
    EmptyRecord { line: usize },
}

/// fvecs: per vector, a little-endian i32 dimension then that many
/// little-endian f32 values. All vectors must share one dimension.
pub fn load_fvecs(path: &Path) -> Result<Points<f64>, DataError> {
    read_fvecs(&mut BufReader::new(File::open(path)?))
}

pub fn read_fvecs<R: Read>(reader: &mut R) -> Result<Points<f64>, DataError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut offset = 0u64;
    loop {
        // Read the dimension field byte-wise to tell clean end-of-file
        // apart from a truncated record.
        let mut dim_buf = [0u8; 4];
        let mut filled = 0;
        while filled < 4 {
            match reader.read(&mut dim_buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 {
            break;
        }
        if filled < 4 {
            return Err(DataError::Truncated {
                offset,
                context: "partial dimension field".to_string(),
            });
        }
        let d = i32::from_le_bytes(dim_buf);
        if d <= 0 {
            return Err(DataError::InvalidDim { offset, dim: d });
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(DataError::InconsistentDim {
                    offset,
                    expected,
                    got: d,
                })
            }
            Some(_) => {}
        }
        offset += 4;
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            let v = reader.read_f32::<LittleEndian>().map_err(|e| {
                if e.kind() == std::io::ErrorKind::UnexpectedEof {
                    DataError::Truncated {
                        offset,
                        context: format!("vector needs {d} f32 values"),
                    }
                } else {
                    DataError::Io(e)
                }
            })?;
            offset += 4;
            row.push(v as f64);
        }
        rows.push(row);
    }
    Ok(Points::from_rows(rows))
}

/// Writes a matrix in fvecs format (values narrowed to f32).
pub fn write_fvecs<W: Write>(writer: &mut W, points: &Points<f64>) -> Result<(), DataError> {
    for row in points.rows() {
        writer.write_i32::<LittleEndian>(row.len() as i32)?;
        for &v in row {
            writer.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    Ok(())
}

/// idx images: big-endian magic 0x00000803, then n, rows, cols, then
/// n*rows*cols raw bytes widened to reals (one matrix row per image). A
/// labels file (magic 0x00000801) is accepted and yields an empty matrix.
pub fn load_idx_images(path: &Path) -> Result<Points<f64>, DataError> {
    read_idx_images(&mut BufReader::new(File::open(path)?))
}

pub fn read_idx_images<R: Read>(reader: &mut R) -> Result<Points<f64>, DataError> {
    let magic = reader
        .read_u32::<BigEndian>()
        .map_err(|e| truncated(e, 0, "magic"))?;
    match magic {
        IDX_IMAGES_MAGIC => {}
        IDX_LABELS_MAGIC => {
            // label payload carries no coordinates; consume and ignore it
            let n = reader
                .read_u32::<BigEndian>()
                .map_err(|e| truncated(e, 4, "count"))? as u64;
            let mut payload = vec![0u8; n as usize];
            reader
                .read_exact(&mut payload)
                .map_err(|e| truncated(e, 8, "labels"))?;
            return Ok(Points::from_rows(Vec::new()));
        }
        got => return Err(DataError::BadMagic { got }),
    }
    let n = reader
        .read_u32::<BigEndian>()
        .map_err(|e| truncated(e, 4, "count"))? as usize;
    let r = reader
        .read_u32::<BigEndian>()
        .map_err(|e| truncated(e, 8, "rows"))? as usize;
    let c = reader
        .read_u32::<BigEndian>()
        .map_err(|e| truncated(e, 12, "cols"))? as usize;
    let dim = r * c;
    let mut rows = Vec::with_capacity(n);
    let mut buf = vec![0u8; dim];
    for i in 0..n {
        reader
            .read_exact(&mut buf)
            .map_err(|e| truncated(e, 16 + (i * dim) as u64, "image payload"))?;
        rows.push(buf.iter().map(|&b| b as f64).collect());
    }
    Ok(Points::from_rows(rows))
}

fn truncated(e: std::io::Error, offset: u64, context: &str) -> DataError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        DataError::Truncated {
            offset,
            context: context.to_string(),
        }
    } else {
        DataError::Io(e)
    }
}

/// Text embeddings: one record per line, a token then d reals, whitespace
/// separated. With `normalize`, rows are scaled to unit L2 norm and zero
/// vectors are rejected.
pub fn load_text_embeddings(path: &Path, normalize: bool) -> Result<Points<f64>, DataError> {
    read_text_embeddings(&mut BufReader::new(File::open(path)?), normalize)
}

pub fn read_text_embeddings<R: BufRead>(
    reader: &mut R,
    normalize: bool,
) -> Result<Points<f64>, DataError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let _token = fields.next().expect("non-blank line has a first field");
        let mut row = Vec::new();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                line: lineno,
                field: field.to_string(),
            })?;
            row.push(v);
        }
        if row.is_empty() {
            return Err(DataError::EmptyRecord { line: lineno });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(expected) if expected != row.len() => {
                return Err(DataError::RaggedRow {
                    line: lineno,
                    expected,
                    got: row.len(),
                })
            }
            Some(_) => {}
        }
        if normalize {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(DataError::ZeroVector { line: lineno });
            }
            for v in &mut row {
                *v /= norm;
            }
        }
        rows.push(row);
    }
    Ok(Points::from_rows(rows))
}
