//! Grid snapshot encodings.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "WBFG"
//! 4       4     u32 width
//! 8       4     u32 height
//! 12      4     u32 dtype, 0 = float32
//! 16      4*w*h f32 values, row-major (y outer, x inner)
//! ```
//!
//! CSV layout: one line per row `y = 0..height`, `width` comma-separated
//! values per line, each printed with the shortest representation that
//! parses back to the same `f32`. Lines end with `\n`.

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"WBFG";
pub const DTYPE_F32: u32 = 0;
pub const HEADER_LEN: usize = 16;

pub fn encode_binary(grid: &Grid<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for v in grid.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<Grid<f32>> {
    let bad = |message: String| Error::Format {
        what: "binary grid",
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing WBFG magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (width, height, dtype) = (word(4) as usize, word(8) as usize, word(12));
    if dtype != DTYPE_F32 {
        return Err(bad(format!("unsupported dtype {dtype}")));
    }
    let expected = HEADER_LEN + 4 * width * height;
    if bytes.len() != expected {
        return Err(bad(format!(
            "{width}x{height} grid needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Grid::from_vec(width, height, data)
}

pub fn encode_csv(grid: &Grid<f32>) -> String {
    let mut out = String::with_capacity(grid.len() * 4);
    for row in grid.rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<Grid<f32>> {
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v = field.trim().parse::<f32>().map_err(|_| Error::Format {
                what: "csv grid",
                message: format!("line {}: bad value `{field}`", lineno + 1),
            })?;
            data.push(v);
        }
        let w = data.len() - before;
        if *width.get_or_insert(w) != w {
            return Err(Error::Format {
                what: "csv grid",
                message: format!("line {} has {w} values, expected {}", lineno + 1, width.unwrap()),
            });
        }
        height += 1;
    }
    Grid::from_vec(width.unwrap_or(0), height, data)
}
