//! IDX container (the MNIST distribution format): a big-endian magic
//! `0x0000 TT NN` (TT = element type, 0x08 for unsigned bytes; NN = number
//! of dimensions), NN big-endian `u32` sizes, then raw elements.
//!
//! Parsing is strict: trailing bytes are an error.

use alloc::format;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Data(format!("truncated IDX header: {} bytes", bytes.len())))
}

fn parse(bytes: &[u8], expected_magic: u32) -> Result<(Vec<usize>, &[u8])> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected_magic {
        return Err(Error::Data(format!("unsupported IDX type 0x{magic:08x}, expected 0x{expected_magic:08x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|i| read_u32(bytes, 4 + 4 * i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let body = &bytes[4 + 4 * ndim..];
    let expected: usize = dims.iter().product();
    if body.len() < expected {
        return Err(Error::Data(format!(
            "truncated IDX payload: {} of {expected} bytes",
            body.len()
        )));
    }
    if body.len() > expected {
        return Err(Error::Data(format!(
            "{} trailing bytes after IDX payload",
            body.len() - expected
        )));
    }
    Ok((dims, body))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let (dims, body) = parse(bytes, IDX_IMAGES_MAGIC)?;
    Ok(IdxImages {
        count: dims[0],
        rows: dims[1],
        cols: dims[2],
        pixels: body.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, body) = parse(bytes, IDX_LABELS_MAGIC)?;
    Ok(body.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [images.count, images.rows, images.cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Decodes an image file (and optionally its label file) into a dataset of
/// flattened images with pixels mapped to `[0, 1]` (byte / 255).
pub fn dataset_from_idx(images: &[u8], labels: Option<&[u8]>) -> Result<Dataset> {
    let img = parse_idx_images(images)?;
    let dim = img.rows * img.cols;
    if dim == 0 {
        return Err(Error::Data("IDX images have zero size".into()));
    }
    let values: Vec<f64> = img.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let (labels, k) = match labels {
        Some(bytes) => {
            let l = parse_idx_labels(bytes)?;
            if l.len() != img.count {
                return Err(Error::Data(format!(
                    "{} images but {} labels",
                    img.count,
                    l.len()
                )));
            }
            let k = l.iter().map(|&y| usize::from(y) + 1).max().unwrap_or(0).max(10);
            (Some(l.into_iter().map(usize::from).collect()), Some(k))
        }
        None => (None, None),
    };
    Dataset::new(dim, values, labels, k, (0.0, 1.0))
}

/// Encodes a `[0, 1]` dataset of `rows * cols` images back to IDX bytes.
pub fn dataset_to_idx(ds: &Dataset, rows: usize, cols: usize) -> Result<(Vec<u8>, Option<Vec<u8>>)> {
    if rows * cols != ds.dim() {
        return Err(Error::Data(format!("{rows}x{cols} images do not match width {}", ds.dim())));
    }
    let pixels = ds
        .values()
        .iter()
        .map(|&v| {
            if (0.0..=1.0).contains(&v) {
                Ok(libm::round(v * 255.0) as u8)
            } else {
                Err(Error::Data(format!("pixel value {v} outside [0, 1]")))
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    let images = encode_idx_images(&IdxImages {
        count: ds.len(),
        rows,
        cols,
        pixels,
    });
    let labels = match ds.labels() {
        Some(l) => Some(encode_idx_labels(
            &l.iter()
                .map(|&y| u8::try_from(y).map_err(|_| Error::Data(format!("label {y} does not fit a byte"))))
                .collect::<Result<Vec<u8>>>()?,
        )),
        None => None,
    };
    Ok((images, labels))
}
