use alloc::format;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{streams, RngStream};

/// Stratified labelled / unlabelled partition with the source indices of
/// both parts (each sorted ascending).
#[derive(Clone, Debug)]
pub struct LabelSplit {
    pub labeled: Dataset,
    pub unlabeled: Dataset,
    pub labeled_idx: Vec<usize>,
    pub unlabeled_idx: Vec<usize>,
}

/// Draws exactly `per_class` examples of every class without replacement.
/// The remainder becomes the unlabelled set (labels hidden).
pub fn label_split(ds: &Dataset, per_class: usize, seed: u64) -> Result<LabelSplit> {
    let labels = ds.labels().ok_or_else(|| Error::Data("label split needs a labelled dataset".into()))?;
    let k = ds.num_classes().expect("labelled datasets record K");
    let mut rng = RngStream::new(seed, streams::SPLIT);
    let mut labeled_idx = Vec::with_capacity(per_class * k);
    for class in 0..k {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < per_class {
            return Err(Error::Data(format!(
                "class {class} has {} examples, {per_class} requested",
                members.len()
            )));
        }
        rng.shuffle(&mut members);
        labeled_idx.extend_from_slice(&members[..per_class]);
    }
    labeled_idx.sort_unstable();
    let mut is_labeled = alloc::vec![false; ds.len()];
    for &i in &labeled_idx {
        is_labeled[i] = true;
    }
    let unlabeled_idx: Vec<usize> = (0..ds.len()).filter(|&i| !is_labeled[i]).collect();
    Ok(LabelSplit {
        labeled: ds.select(&labeled_idx)?,
        unlabeled: ds.select(&unlabeled_idx)?.without_labels(),
        labeled_idx,
        unlabeled_idx,
    })
}

/// Uniform draw of `n` examples without replacement, in draw order.
pub fn subset(ds: &Dataset, n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if n > ds.len() {
        return Err(Error::Data(format!("subset of {n} requested from {} examples", ds.len())));
    }
    let mut rng = RngStream::new(seed, streams::SPLIT);
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    for i in 0..n {
        let j = i + rng.below(ds.len() - i);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok((ds.select(&idx)?, idx))
}
