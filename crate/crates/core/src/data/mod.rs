//! Datasets: IDX decoding, toy 2-D distributions, label splits, sampling.

mod idx;
mod sampler;
mod split;
mod toy;

use alloc::format;
use alloc::vec::Vec;

pub use idx::{
    dataset_from_idx, dataset_to_idx, encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels,
    IdxImages, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use sampler::BatchSampler;
pub use split::{label_split, subset, LabelSplit};
pub use toy::{toy_sampler, ToyDistribution};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Immutable collection of `len` examples of width `dim`, optionally
/// labelled with classes `0..num_classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
    num_classes: Option<usize>,
    range: (f64, f64),
}

impl Dataset {
    pub fn new(
        dim: usize,
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
        num_classes: Option<usize>,
        range: (f64, f64),
    ) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::Data(format!("{} values do not form rows of width {dim}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(range.0..=range.1).contains(*v)) {
            return Err(Error::Data(format!("value {v} outside declared range {range:?}")));
        }
        let n = values.len() / dim;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Data(format!("{} labels for {n} examples", l.len())));
            }
            let k = num_classes.ok_or_else(|| Error::Data("labels given without a class count".into()))?;
            if let Some(bad) = l.iter().find(|y| **y >= k) {
                return Err(Error::Data(format!("label {bad} outside 0..{k}")));
            }
        }
        Ok(Self {
            dim,
            values,
            labels,
            num_classes,
            range,
        })
    }

    /// Dataset whose declared range is the observed min/max.
    pub fn unbounded(dim: usize, values: Vec<f64>) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = if values.is_empty() { (0.0, 0.0) } else { (lo, hi) };
        Self::new(dim, values, None, None, range)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn example(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.num_classes
    }

    /// All examples as a `[len, dim]` tensor.
    pub fn examples(&self) -> Result<Tensor> {
        Tensor::matrix(self.len(), self.dim, self.values.clone())
    }

    /// Rows `idx` as a `[idx.len(), dim]` tensor.
    pub fn batch(&self, idx: &[usize]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.len() {
                return Err(Error::Data(format!("index {i} out of range for {} examples", self.len())));
            }
            data.extend_from_slice(self.example(i));
        }
        Tensor::matrix(idx.len(), self.dim, data)
    }

    pub fn batch_labels(&self, idx: &[usize]) -> Result<Vec<usize>> {
        let labels = self.labels.as_ref().ok_or_else(|| Error::Data("dataset has no labels".into()))?;
        idx.iter()
            .map(|&i| labels.get(i).copied().ok_or_else(|| Error::Data(format!("index {i} out of range"))))
            .collect()
    }

    /// New dataset made of rows `idx` (labels carried along).
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.len() {
                return Err(Error::Data(format!("index {i} out of range for {} examples", self.len())));
            }
            values.extend_from_slice(self.example(i));
        }
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        Ok(Self {
            dim: self.dim,
            values,
            labels,
            num_classes: self.num_classes,
            range: self.range,
        })
    }

    pub fn without_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    /// Splits into the first `n` examples and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self)> {
        if n > self.len() {
            return Err(Error::Data(format!("cannot split {} examples at {n}", self.len())));
        }
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        Ok((self.select(&head)?, self.select(&tail)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_values_outside_range_and_bad_labels() {
        assert!(Dataset::new(2, alloc::vec![0.0, 2.0], None, None, (0.0, 1.0)).is_err());
        assert!(Dataset::new(1, alloc::vec![0.0, 0.5], Some(alloc::vec![0, 3]), Some(3), (0.0, 1.0)).is_err());
        assert!(Dataset::new(1, alloc::vec![0.0, 0.5], Some(alloc::vec![0]), Some(3), (0.0, 1.0)).is_err());
        assert!(Dataset::new(3, alloc::vec![0.0; 4], None, None, (0.0, 1.0)).is_err());
    }

    #[test]
    fn batch_and_select() {
        let ds = Dataset::new(2, alloc::vec![1., 2., 3., 4., 5., 6.], Some(alloc::vec![0, 1, 0]), Some(2), (0., 6.))
            .unwrap();
        let b = ds.batch(&[2, 0]).unwrap();
        assert_eq!(b.data(), &[5., 6., 1., 2.]);
        let s = ds.select(&[1]).unwrap();
        assert_eq!(s.labels(), Some(&[1][..]));
        assert!(ds.batch(&[3]).is_err());
    }
}
