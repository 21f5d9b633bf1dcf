//! IDX files (the MNIST container), optionally gzip-compressed.
//!
//! Layout: two zero bytes, a type byte (0x08 = unsigned byte), a dimension
//! count, one big-endian `u32` per dimension, then the payload. Only
//! unsigned-byte payloads are supported.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use hwforest_core::Dataset;

use crate::error::{Error, Result};

const UBYTE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn items(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut raw)).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn parse_idx(bytes: &[u8], path: &Path) -> Result<IdxArray> {
    let truncated = |expected: usize| Error::TruncatedFile { path: path.to_path_buf(), expected, found: bytes.len() };
    if bytes.len() < 4 {
        return Err(truncated(4));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let n_dims = bytes[3] as usize;
    if bytes[0] != 0 || bytes[1] != 0 || bytes[2] != UBYTE || n_dims == 0 {
        return Err(Error::BadMagic { path: path.to_path_buf(), magic });
    }
    let header = 4 + 4 * n_dims;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> =
        bytes[4..header].chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize).collect();
    let payload: usize = dims.iter().product();
    let found = bytes.len() - header;
    if found < payload {
        return Err(Error::TruncatedFile { path: path.to_path_buf(), expected: payload, found });
    }
    Ok(IdxArray { dims, data: bytes[header..header + payload].to_vec() })
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxArray> {
    let path = path.as_ref();
    parse_idx(&read_all(path)?, path)
}

pub fn encode_idx(a: &IdxArray) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, a.dims.len() as u8];
    for &d in &a.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&a.data);
    out
}

/// Writes `a`; a `.gz` extension selects gzip compression.
pub fn write_idx(path: impl AsRef<Path>, a: &IdxArray) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_idx(a);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let result = if path.extension().is_some_and(|e| e == "gz") {
        let mut gz = GzEncoder::new(BufWriter::new(file), Compression::default());
        gz.write_all(&bytes).and_then(|_| gz.finish()).and_then(|mut w| w.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(&bytes).and_then(|_| w.flush())
    };
    result.map_err(|e| Error::io(path, e))
}

/// Image/label pair as a dataset with pixel values 0..=255 and the image
/// shape taken from the last two dimensions.
pub fn load_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let img = read_idx(images.as_ref())?;
    let lab = read_idx(labels.as_ref())?;
    idx_to_dataset(&img, &lab, None)
}

/// As [`load_idx_pair`] with a fixed class count (for test sets that may
/// miss a class).
pub fn load_idx_pair_with_classes(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    n_classes: usize,
) -> Result<Dataset> {
    let img = read_idx(images.as_ref())?;
    let lab = read_idx(labels.as_ref())?;
    idx_to_dataset(&img, &lab, Some(n_classes))
}

pub fn idx_to_dataset(img: &IdxArray, lab: &IdxArray, n_classes: Option<usize>) -> Result<Dataset> {
    if img.items() != lab.items() {
        return Err(Error::CountMismatch { images: img.items(), labels: lab.items() });
    }
    let features: Vec<f64> = img.data.iter().map(|&b| f64::from(b)).collect();
    let labels: Vec<usize> = lab.data.iter().map(|&b| usize::from(b)).collect();
    let k = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    let d = Dataset::with_classes(features, img.item_len(), labels, k)?;
    Ok(match img.dims[..] {
        [_, h, w] => d.with_image_shape(h, w)?,
        _ => d,
    })
}

/// Inverse of [`idx_to_dataset`] for byte-valued features.
pub fn dataset_to_idx(d: &Dataset) -> (IdxArray, IdxArray) {
    let mut dims = vec![d.n_instances()];
    match d.image_shape() {
        Some((h, w)) => dims.extend([h, w]),
        None => dims.push(d.n_features()),
    }
    let data = d.features().iter().map(|&v| v.clamp(0.0, 255.0).round() as u8).collect();
    let labels = d.labels().iter().map(|&l| l as u8).collect();
    (IdxArray { dims, data }, IdxArray { dims: vec![d.n_instances()], data: labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip() {
        let a = IdxArray { dims: vec![2, 2, 3], data: (0..12).collect() };
        let bytes = encode_idx(&a);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        assert_eq!(parse_idx(&bytes, Path::new("x")).unwrap(), a);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("x");
        assert!(matches!(parse_idx(&[0, 0, 0x0d, 1, 0, 0, 0, 1, 0, 0, 0, 0], p), Err(Error::BadMagic { .. })));
        assert!(matches!(parse_idx(&[0, 0, 8, 1, 0, 0, 0, 5, 1, 2], p), Err(Error::TruncatedFile { .. })));
        assert!(matches!(parse_idx(&[0, 0, 8], p), Err(Error::TruncatedFile { .. })));
    }

    #[test]
    fn count_mismatch() {
        let img = IdxArray { dims: vec![2, 1, 1], data: vec![1, 2] };
        let lab = IdxArray { dims: vec![3], data: vec![0, 1, 0] };
        assert!(matches!(idx_to_dataset(&img, &lab, None), Err(Error::CountMismatch { images: 2, labels: 3 })));
    }
}
