//! NPY version 1.0 reader and writer.
//!
//! Only what volumes need: little-endian `u1`, `u2`, `f4`, `f8`, C order.
//! Format reference: <https://numpy.org/doc/stable/reference/generated/numpy.lib.format.html>

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl NpyData {
    fn descr(&self) -> &'static str {
        match self {
            NpyData::U8(_) => "|u1",
            NpyData::U16(_) => "<u2",
            NpyData::F32(_) => "<f4",
            NpyData::F64(_) => "<f8",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NpyData::U8(v) => v.len(),
            NpyData::U16(v) => v.len(),
            NpyData::F32(v) => v.len(),
            NpyData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, NpyData::U8(_) | NpyData::U16(_))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            NpyData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
            NpyData::U16(v) => v.iter().map(|&x| f64::from(x)).collect(),
            NpyData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            NpyData::F64(v) => v.clone(),
        }
    }

    pub fn to_u32(&self) -> Option<Vec<u32>> {
        match self {
            NpyData::U8(v) => Some(v.iter().map(|&x| u32::from(x)).collect()),
            NpyData::U16(v) => Some(v.iter().map(|&x| u32::from(x)).collect()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

fn unsupported(path: &Path, detail: impl Into<String>) -> Error {
    Error::UnsupportedDtype {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Value of `'key': <value>` in the header dict, up to the next top-level comma.
fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let needle = format!("'{key}'");
    let start = header.find(&needle)? + needle.len();
    let rest = header[start..].trim_start().strip_prefix(':')?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

fn parse_header(path: &Path, header: &str) -> Result<(String, Vec<usize>)> {
    let descr = dict_value(header, "descr")
        .ok_or_else(|| unsupported(path, "header lacks 'descr'"))?
        .trim_matches(|c| c == '\'' || c == '"')
        .to_string();
    let fortran = dict_value(header, "fortran_order")
        .ok_or_else(|| unsupported(path, "header lacks 'fortran_order'"))?;
    match fortran {
        "False" => {}
        "True" => {
            return Err(Error::FortranOrderUnsupported {
                path: path.to_path_buf(),
            })
        }
        other => return Err(unsupported(path, format!("fortran_order = {other}"))),
    }
    let shape_str = dict_value(header, "shape")
        .ok_or_else(|| unsupported(path, "header lacks 'shape'"))?;
    let inner = shape_str
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| unsupported(path, format!("bad shape {shape_str}")))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| unsupported(path, format!("bad shape {shape_str}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((descr, shape))
}

pub fn parse_npy(path: &Path, bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    if (bytes[6], bytes[7]) != (1, 0) {
        return Err(unsupported(
            path,
            format!("format version {}.{}", bytes[6], bytes[7]),
        ));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(unsupported(path, "truncated header"));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| unsupported(path, "header is not ASCII"))?;
    let (descr, shape) = parse_header(path, header)?;
    let count: usize = shape.iter().product();
    let body = &bytes[data_start..];

    let item = match descr.as_str() {
        "|u1" | "<u1" | "u1" => 1,
        "<u2" => 2,
        "<f4" => 4,
        "<f8" => 8,
        other => return Err(unsupported(path, format!("dtype {other}"))),
    };
    if body.len() != count * item {
        return Err(unsupported(
            path,
            format!("expected {} data bytes, found {}", count * item, body.len()),
        ));
    }
    let data = match item {
        1 => NpyData::U8(body.to_vec()),
        2 => NpyData::U16(
            body.chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        4 => NpyData::F32(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => NpyData::F64(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(NpyArray { shape, data })
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_npy(path, &bytes)
}

pub fn encode_npy(array: &NpyArray) -> Vec<u8> {
    let shape = match array.shape.as_slice() {
        [one] => format!("({one},)"),
        dims => format!(
            "({})",
            dims.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {shape}, }}",
        array.data.descr()
    );
    // pad so the data starts on a 64-byte boundary, header ends in '\n'
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + array.data.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    match &array.data {
        NpyData::U8(v) => out.extend_from_slice(v),
        NpyData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn write_npy(path: &Path, array: &NpyArray) -> Result<()> {
    if array.shape.iter().product::<usize>() != array.data.len() {
        return Err(Error::invalid("shape", "does not match the data length"));
    }
    fs::write(path, encode_npy(array)).map_err(|e| Error::io(path, e))
}
