use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Labeled feature vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    feature_dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, feature_dim: usize, classes: usize) -> Result<Self> {
        if feature_dim == 0 || classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need features and at least two classes, got {feature_dim} features, {classes} classes"
            )));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * feature_dim,
                got: features.len(),
            });
        }
        if let Some(bad) = labels.iter().position(|&y| y >= classes) {
            return Err(Error::InvalidParameter(format!(
                "label {} of sample {bad} outside 0..{classes}",
                labels[bad]
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { sample: pos / feature_dim });
        }
        Ok(Self { features, labels, feature_dim, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn sample(&self, n: usize) -> &[f64] {
        &self.features[n * self.feature_dim..(n + 1) * self.feature_dim]
    }

    pub fn label(&self, n: usize) -> usize {
        self.labels[n]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Samples of each class, in order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.classes];
        for (n, &y) in self.labels.iter().enumerate() {
            out[y].push(n);
        }
        out
    }

    /// Copy of the listed samples.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        for &n in indices {
            features.extend_from_slice(self.sample(n));
        }
        Self {
            features,
            labels: indices.iter().map(|&n| self.labels[n]).collect(),
            feature_dim: self.feature_dim,
            classes: self.classes,
        }
    }

    /// Concatenation of several datasets with the same shape.
    pub fn concat(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::DatasetTooSmall("nothing to concatenate".into()))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.feature_dim != first.feature_dim || p.classes != first.classes {
                return Err(Error::DimensionMismatch { expected: first.feature_dim, got: p.feature_dim });
            }
            features.extend_from_slice(&p.features);
            labels.extend_from_slice(&p.labels);
        }
        Ok(Self { features, labels, feature_dim: first.feature_dim, classes: first.classes })
    }
}

/// Balanced Gaussian blobs.
///
/// Class centers are drawn once from `N(0, I)` and scaled to norm
/// `separation`; samples add `N(0, I)` noise to their center. Every feature
/// is finally multiplied by `scale`, which sets the curvature of the loss.
pub fn synthetic_blobs(
    classes: usize,
    feature_dim: usize,
    per_class: usize,
    separation: f64,
    scale: f64,
    seed: u64,
    split: u64,
) -> Result<Dataset> {
    let mut centers_rng = rng::stream(seed, Purpose::Dataset, 0, 0);
    let mut centers = Vec::with_capacity(classes * feature_dim);
    for _ in 0..classes {
        let c: Vec<f64> = (0..feature_dim).map(|_| StandardNormal.sample(&mut centers_rng)).collect();
        let norm = libm::sqrt(c.iter().map(|v| v * v).sum::<f64>()).max(f64::MIN_POSITIVE);
        centers.extend(c.iter().map(|v| v * separation / norm));
    }
    let mut rng = rng::stream(seed, Purpose::Dataset, 1, split);
    let mut features = Vec::with_capacity(classes * per_class * feature_dim);
    let mut labels = Vec::with_capacity(classes * per_class);
    for n in 0..classes * per_class {
        let y = n % classes;
        labels.push(y);
        for f in 0..feature_dim {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(scale * (centers[y * feature_dim + f] + noise));
        }
    }
    Dataset::new(features, labels, feature_dim, classes)
}

/// Indices of the mini-batch of `device` at iteration `t`.
///
/// Drawn uniformly without replacement; the whole set when `size` exceeds it.
pub fn minibatch(len: usize, size: usize, seed: u64, device: usize, t: u64) -> Vec<usize> {
    if size >= len {
        return (0..len).collect();
    }
    let mut rng = rng::stream(seed, Purpose::Minibatch, t, device as u64);
    index::sample(&mut rng, len, size).into_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_data() {
        assert!(matches!(
            Dataset::new(alloc::vec![1.0, f64::NAN], alloc::vec![0, 1], 1, 2),
            Err(Error::NonFiniteFeature { sample: 1 })
        ));
        assert!(Dataset::new(alloc::vec![1.0], alloc::vec![3], 1, 2).is_err());
        assert!(Dataset::new(alloc::vec![1.0, 2.0], alloc::vec![0], 1, 2).is_err());
    }

    #[test]
    fn blobs_are_balanced_and_reproducible() {
        let a = synthetic_blobs(10, 5, 30, 3.0, 1.0, 4, 0).unwrap();
        assert_eq!(a.len(), 300);
        assert!(a.class_indices().iter().all(|c| c.len() == 30));
        assert_eq!(a, synthetic_blobs(10, 5, 30, 3.0, 1.0, 4, 0).unwrap());
        assert_ne!(a, synthetic_blobs(10, 5, 30, 3.0, 1.0, 4, 1).unwrap());
    }

    #[test]
    fn minibatch_examples() {
        assert_eq!(minibatch(10, 64, 0, 0, 0), (0..10).collect::<Vec<_>>());
        let b = minibatch(1000, 64, 3, 2, 7);
        assert_eq!(b, minibatch(1000, 64, 3, 2, 7));
        let mut sorted = b.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 64);
    }
}
