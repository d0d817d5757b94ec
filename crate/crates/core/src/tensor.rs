//! Dense row-major `f64` tensors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Numpy-style broadcast of two shapes (trailing dimensions aligned).
pub fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let n = a.len().max(b.len());
    let mut out = vec![0; n];
    for i in 0..n {
        let da = if i < n - a.len() { 1 } else { a[i - (n - a.len())] };
        let db = if i < n - b.len() { 1 } else { b[i - (n - b.len())] };
        out[i] = if da == db || db == 1 {
            da
        } else if da == 1 {
            db
        } else {
            return Err(Error::ShapeMismatch {
                op,
                lhs: a.to_vec(),
                rhs: b.to_vec(),
            });
        };
    }
    Ok(out)
}

/// Flat offsets into a tensor of `src` shape for every element of the
/// broadcast `dst` shape. `src` must be broadcastable to `dst`.
fn broadcast_offsets(src: &[usize], dst: &[usize]) -> Vec<usize> {
    let n = dst.len();
    let lead = n - src.len();
    let mut strides = vec![0usize; n];
    let mut acc = 1;
    for i in (0..src.len()).rev() {
        if src[i] != 1 {
            strides[lead + i] = acc;
        }
        acc *= src[i];
    }
    let total = numel(dst);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    let mut off = 0usize;
    for _ in 0..total {
        out.push(off);
        for d in (0..n).rev() {
            idx[d] += 1;
            off += strides[d];
            if idx[d] < dst[d] {
                break;
            }
            off -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }
    out
}

fn is_suffix(src: &[usize], dst: &[usize]) -> bool {
    src.len() <= dst.len() && dst[dst.len() - src.len()..] == *src
}

/// `[rows, 1]` against `[rows, cols]`.
fn is_column(src: &[usize], dst: &[usize]) -> bool {
    src.len() == 2 && dst.len() == 2 && src[0] == dst[0] && src[1] == 1
}

fn check_broadcastable(op: &'static str, src: &[usize], dst: &[usize]) -> Result<()> {
    let ok = src.len() <= dst.len()
        && src
            .iter()
            .rev()
            .zip(dst.iter().rev())
            .all(|(s, d)| s == d || *s == 1);
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            op,
            lhs: src.to_vec(),
            rhs: dst.to_vec(),
        })
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if numel(&shape) != data.len() || shape.contains(&0) {
            return Err(Error::InvalidShape {
                len: data.len(),
                shape,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![v],
        }
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![v; numel(shape)],
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// Builds a `[rows, cols]` matrix from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// First element; meaningful for single-element tensors.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Elements per leading index.
    pub fn row_len(&self) -> usize {
        if self.shape.is_empty() {
            1
        } else {
            self.data.len() / self.shape[0]
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    /// Gathers rows along the leading axis.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Domain {
                op: "select_rows",
                detail: "empty selection".into(),
            });
        }
        let w = self.row_len();
        let mut data = Vec::with_capacity(idx.len() * w);
        for &i in idx {
            if i >= self.rows() {
                return Err(Error::Domain {
                    op: "select_rows",
                    detail: format!("row {i} out of range for {} rows", self.rows()),
                });
            }
            data.extend_from_slice(&self.data[i * w..(i + 1) * w]);
        }
        let mut shape = self.shape.clone();
        if shape.is_empty() {
            shape.push(idx.len());
        } else {
            shape[0] = idx.len();
        }
        Self::new(shape, data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise binary op with broadcasting.
    pub fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape == other.shape {
            let data = self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect();
            return Ok(Self {
                shape: self.shape.clone(),
                data,
            });
        }
        let shape = broadcast_shape(op, &self.shape, &other.shape)?;
        let total = numel(&shape);
        let a = self.expand_indexer(&shape);
        let b = other.expand_indexer(&shape);
        let data = (0..total)
            .map(|i| f(self.data[a.at(i)], other.data[b.at(i)]))
            .collect();
        Ok(Self { shape, data })
    }

    fn expand_indexer(&self, dst: &[usize]) -> Indexer {
        if self.shape == dst {
            Indexer::Same
        } else if self.data.len() == 1 {
            Indexer::Scalar
        } else if is_suffix(&self.shape, dst) {
            Indexer::Modulo(self.data.len())
        } else if is_column(&self.shape, dst) {
            Indexer::Divide(dst[1])
        } else {
            Indexer::Table(broadcast_offsets(&self.shape, dst))
        }
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Self> {
        check_broadcastable("broadcast_to", &self.shape, shape)?;
        let ix = self.expand_indexer(shape);
        let data = (0..numel(shape)).map(|i| self.data[ix.at(i)]).collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Sums over broadcast dimensions so the result has `shape`; the adjoint
    /// of [`Tensor::broadcast_to`].
    pub fn sum_to(&self, shape: &[usize]) -> Result<Self> {
        if self.shape == shape {
            return Ok(self.clone());
        }
        check_broadcastable("sum_to", shape, &self.shape)?;
        let n = numel(shape);
        let mut out = vec![0.0; n];
        if n == 1 {
            out[0] = self.data.iter().sum();
        } else if is_suffix(shape, &self.shape) {
            for chunk in self.data.chunks(n) {
                for (o, v) in out.iter_mut().zip(chunk) {
                    *o += v;
                }
            }
        } else if is_column(shape, &self.shape) {
            let cols = self.shape[1];
            for (o, row) in out.iter_mut().zip(self.data.chunks(cols)) {
                *o = row.iter().sum();
            }
        } else {
            let offs = broadcast_offsets(shape, &self.shape);
            for (v, &o) in self.data.iter().zip(&offs) {
                out[o] += v;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: out,
        })
    }

    pub fn sum_all(&self) -> f64 {
        self.data.iter().sum()
    }

    fn axis_layout(&self, op: &'static str, axis: usize) -> Result<(usize, usize, usize)> {
        if axis >= self.shape.len() {
            return Err(Error::InvalidAxis {
                op,
                axis,
                shape: self.shape.clone(),
            });
        }
        let outer = numel(&self.shape[..axis]);
        let inner = numel(&self.shape[axis + 1..]);
        Ok((outer, self.shape[axis], inner))
    }

    fn reduced_shape(&self, axis: usize, keepdim: bool) -> Vec<usize> {
        let mut s = self.shape.clone();
        if keepdim {
            s[axis] = 1;
        } else {
            s.remove(axis);
        }
        s
    }

    pub fn sum_axis(&self, axis: usize, keepdim: bool) -> Result<Self> {
        let (outer, len, inner) = self.axis_layout("sum_axis", axis)?;
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for k in 0..len {
                let base = (o * len + k) * inner;
                for i in 0..inner {
                    out[o * inner + i] += self.data[base + i];
                }
            }
        }
        Ok(Self {
            shape: self.reduced_shape(axis, keepdim),
            data: out,
        })
    }

    /// Maximum along `axis` together with the index of the first maximum.
    pub fn max_axis(&self, axis: usize, keepdim: bool) -> Result<(Self, Vec<usize>)> {
        let (outer, len, inner) = self.axis_layout("max_axis", axis)?;
        let mut out = vec![f64::NEG_INFINITY; outer * inner];
        let mut arg = vec![0usize; outer * inner];
        for o in 0..outer {
            for k in 0..len {
                let base = (o * len + k) * inner;
                for i in 0..inner {
                    let v = self.data[base + i];
                    if v > out[o * inner + i] || k == 0 {
                        out[o * inner + i] = v;
                        arg[o * inner + i] = k;
                    }
                }
            }
        }
        Ok((
            Self {
                shape: self.reduced_shape(axis, keepdim),
                data: out,
            },
            arg,
        ))
    }

    /// One-hot mask (same shape as `self`) of the first maximum along `axis`.
    pub fn argmax_mask(&self, axis: usize) -> Result<Self> {
        let (outer, len, inner) = self.axis_layout("argmax_mask", axis)?;
        let (_, arg) = self.max_axis(axis, true)?;
        let mut mask = vec![0.0; self.data.len()];
        for o in 0..outer {
            for i in 0..inner {
                let k = arg[o * inner + i];
                mask[(o * len + k) * inner + i] = 1.0;
            }
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: mask,
        })
    }

    fn matrix_dims(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Domain {
                op,
                detail: format!("expected a matrix, got shape {:?}", self.shape),
            }),
        }
    }

    /// `op(self) · op(rhs)` where `op` optionally transposes.
    pub fn matmul_t(&self, rhs: &Self, trans_a: bool, trans_b: bool) -> Result<Self> {
        let (ar, ac) = self.matrix_dims("matmul")?;
        let (br, bc) = rhs.matrix_dims("matmul")?;
        let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
        let (k2, n) = if trans_b { (bc, br) } else { (br, bc) };
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.shape.clone(),
                rhs: rhs.shape.clone(),
            });
        }
        let (rsa, csa) = if trans_a { (1, ac) } else { (ac, 1) };
        let (rsb, csb) = if trans_b { (1, bc) } else { (bc, 1) };
        let mut out = vec![0.0; m * n];
        // SAFETY: the pointers cover `self.data` ([ar, ac]), `rhs.data`
        // ([br, bc]) and `out` ([m, n]); every stride pair addresses only
        // elements inside those row-major buffers.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.data.as_ptr(),
                rsa as isize,
                csa as isize,
                rhs.data.as_ptr(),
                rsb as isize,
                csb as isize,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Ok(Self {
            shape: vec![m, n],
            data: out,
        })
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.matmul_t(rhs, false, false)
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.matrix_dims("transpose")?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self {
            shape: vec![c, r],
            data: out,
        })
    }

    pub fn concat(parts: &[&Self], axis: usize) -> Result<Self> {
        let first = parts.first().ok_or(Error::Domain {
            op: "concat",
            detail: "no inputs".into(),
        })?;
        let (outer, _, inner) = first.axis_layout("concat", axis)?;
        let mut total = 0;
        for p in parts {
            let same_rank = p.shape.len() == first.shape.len();
            let same_other = same_rank
                && p
                    .shape
                    .iter()
                    .zip(&first.shape)
                    .enumerate()
                    .all(|(d, (a, b))| d == axis || a == b);
            if !same_other {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape.clone(),
                    rhs: p.shape.clone(),
                });
            }
            total += p.shape[axis];
        }
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let w = p.shape[axis] * inner;
                data.extend_from_slice(&p.data[o * w..(o + 1) * w]);
            }
        }
        let mut shape = first.shape.clone();
        shape[axis] = total;
        Ok(Self { shape, data })
    }

    pub fn slice(&self, axis: usize, start: usize, end: usize) -> Result<Self> {
        let (outer, len, inner) = self.axis_layout("slice", axis)?;
        if start >= end || end > len {
            return Err(Error::Domain {
                op: "slice",
                detail: format!("range {start}..{end} invalid for axis length {len}"),
            });
        }
        let mut data = Vec::with_capacity(outer * (end - start) * inner);
        for o in 0..outer {
            let base = o * len * inner;
            data.extend_from_slice(&self.data[base + start * inner..base + end * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = end - start;
        Ok(Self { shape, data })
    }

    /// Embeds `self` at `start` along `axis` inside zeros of length `total`;
    /// the adjoint of [`Tensor::slice`].
    pub fn pad_slice(&self, axis: usize, start: usize, total: usize) -> Result<Self> {
        let (outer, len, inner) = self.axis_layout("pad_slice", axis)?;
        if start + len > total {
            return Err(Error::Domain {
                op: "pad_slice",
                detail: format!("{start}+{len} exceeds {total}"),
            });
        }
        let mut shape = self.shape.clone();
        shape[axis] = total;
        let mut data = vec![0.0; outer * total * inner];
        for o in 0..outer {
            let dst = (o * total + start) * inner;
            data[dst..dst + len * inner].copy_from_slice(&self.data[o * len * inner..(o + 1) * len * inner]);
        }
        Ok(Self { shape, data })
    }

    /// Softmax over the last axis, max-shifted.
    pub fn softmax_last(&self) -> Self {
        let w = self.shape.last().copied().unwrap_or(1);
        let mut data = self.data.clone();
        for row in data.chunks_mut(w) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - m);
                s += *v;
            }
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        Self {
            shape: self.shape.clone(),
            data,
        }
    }
}

enum Indexer {
    Same,
    Scalar,
    Modulo(usize),
    Divide(usize),
    Table(Vec<usize>),
}

impl Indexer {
    #[inline]
    fn at(&self, i: usize) -> usize {
        match self {
            Indexer::Same => i,
            Indexer::Scalar => 0,
            Indexer::Modulo(n) => i % n,
            Indexer::Divide(n) => i / n,
            Indexer::Table(t) => t[i],
        }
    }
}
