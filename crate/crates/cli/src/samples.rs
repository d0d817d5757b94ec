//! Raw sample dumps: magic `CTGANSMP`, u64 count, u64 dim, then
//! `count * dim` little-endian f64 values in row-major order. A `.txt`
//! sidecar describes the file in plain text.

use std::path::Path;

use ctgan_core::Tensor;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"CTGANSMP";

pub fn encode(samples: &Tensor) -> Vec<u8> {
    let (count, dim) = (samples.rows(), samples.row_len());
    let mut out = Vec::with_capacity(24 + 8 * samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(count as u64).to_le_bytes());
    out.extend_from_slice(&(dim as u64).to_le_bytes());
    for v in samples.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> CliResult<Tensor> {
    let bad = |m: &str| CliError::Runtime(format!("malformed sample dump: {m}"));
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(bad("bad header"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let dim = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let body = &bytes[24..];
    if count.checked_mul(dim).and_then(|n| n.checked_mul(8)) != Some(body.len()) {
        return Err(bad("length does not match header"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Tensor::matrix(count, dim, data).map_err(|e| bad(&e.to_string()))
}

/// Writes `path` and its sidecar `path.txt`.
pub fn save(path: &Path, samples: &Tensor, description: &str) -> CliResult<()> {
    std::fs::write(path, encode(samples)).map_err(|e| CliError::io(path, e))?;
    let mut side = path.as_os_str().to_owned();
    side.push(".txt");
    let text = format!(
        "format: {} header (8-byte magic, u64 count, u64 dim), then f64 little-endian row-major\ncount: {}\ndim: {}\n{description}\n",
        String::from_utf8_lossy(MAGIC),
        samples.rows(),
        samples.row_len()
    );
    std::fs::write(&side, text).map_err(|e| CliError::io(Path::new(&side), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let t = Tensor::matrix(3, 2, vec![0.1, -2.0, f64::MIN_POSITIVE, 1e300, -0.0, 7.0]).unwrap();
        let back = decode(&encode(&t)).unwrap();
        assert_eq!(
            back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(back.shape(), t.shape());
        let mut b = encode(&t);
        b.pop();
        assert!(decode(&b).is_err());
    }
}
