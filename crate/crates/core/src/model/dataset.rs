use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Row-major feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Config("dataset must hold at least one sample".into()));
        }
        if features.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                got: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset features",
                sample: pos / dim.max(1),
            });
        }
        if let Some(bad) = labels.iter().position(|&l| l >= classes) {
            return Err(Error::Config(format!(
                "label {} of sample {bad} is outside [0, {classes})",
                labels[bad]
            )));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            dim,
            labels,
            classes,
        })
    }

    /// Single featureless sample, used as the data carrier for objectives that
    /// do not read samples (quadratics).
    pub fn unit() -> Self {
        Dataset {
            name: "unit".into(),
            features: Vec::new(),
            dim: 0,
            labels: vec![0],
            classes: 1,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(name, features, self.dim, labels, self.classes)
    }

    /// Random split into (train, test) with `test_fraction` of the samples held out.
    pub fn split<R: Rng>(&self, test_fraction: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
            return Err(Error::Config(format!(
                "test fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        let n_test = ((self.len() as f64) * test_fraction).round() as usize;
        let n_test = n_test.clamp(1, self.len() - 1);
        let (test_idx, train_idx) = order.split_at(n_test);
        let mut train_idx = train_idx.to_vec();
        let mut test_idx = test_idx.to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((
            self.subset(&train_idx, format!("{}-train", self.name))?,
            self.subset(&test_idx, format!("{}-test", self.name))?,
        ))
    }
}

/// Sample indices into a [`Dataset`]; unique and non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch(Vec<usize>);

impl Batch {
    pub fn new(indices: Vec<usize>, data: &Dataset) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config("batch must not be empty".into()));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if i >= data.len() {
                return Err(Error::Config(format!(
                    "batch index {i} out of range for dataset of {} samples",
                    data.len()
                )));
            }
            if !seen.insert(i) {
                return Err(Error::Config(format!("duplicate batch index {i}")));
            }
        }
        Ok(Batch(indices))
    }

    /// Every sample of `data`.
    pub fn full(data: &Dataset) -> Self {
        Batch((0..data.len()).collect())
    }

    /// Caller guarantees the indices are unique, in range and non-empty.
    pub(crate) fn trusted(indices: Vec<usize>) -> Self {
        debug_assert!(!indices.is_empty());
        Batch(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
