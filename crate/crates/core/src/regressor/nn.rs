//! Nearest-neighbor baselines over banks of labeled samples.

use crate::dataset::Dataset;
use crate::seeding::stream_rng;
use crate::{Error, Result};
use rand::Rng;

/// A bank of unit-norm feature rows with their targets, queried by
/// nearest-neighbor search.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBank {
    /// Bank label used in reports (for example "S" or "S0").
    pub label: String,
    features: Vec<Vec<f64>>,
    targets: Vec<[f64; 3]>,
}

impl SampleBank {
    /// Build a bank from a dataset.
    pub fn from_dataset(ds: &Dataset, label: impl Into<String>) -> Result<SampleBank> {
        if ds.is_empty() {
            return Err(Error::invalid("cannot build a bank from an empty dataset"));
        }
        let mut features = Vec::with_capacity(ds.len());
        let mut targets = Vec::with_capacity(ds.len());
        for (i, s) in ds.samples.iter().enumerate() {
            let norm: f64 = s.features.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "sample {i} has feature norm {norm}, expected 1"
                )));
            }
            features.push(s.features.clone());
            targets.push(s.target);
        }
        Ok(SampleBank {
            label: label.into(),
            features,
            targets,
        })
    }

    /// Number of bank rows.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    /// Whether the bank is empty (never true for constructed banks).
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Target of the row closest to `features` in Euclidean distance;
    /// ties go to the lowest row index.
    pub fn nn_search(&self, features: &[f64]) -> Result<[f64; 3]> {
        if features.len() != self.dim() {
            return Err(Error::dims(format!(
                "bank rows have {} features, query has {}",
                self.dim(),
                features.len()
            )));
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, row) in self.features.iter().enumerate() {
            let d: f64 = row
                .iter()
                .zip(features.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(self.targets[best])
    }

    /// A random sub-bank of `count` distinct rows (order follows the
    /// draw, deterministic in the seed).
    pub fn subsample(&self, count: usize, seed: u64) -> Result<SampleBank> {
        if count == 0 || count > self.len() {
            return Err(Error::invalid(format!(
                "subsample size {count} must be in 1..={}",
                self.len()
            )));
        }
        let mut rng = stream_rng(seed, 0);
        // Partial Fisher-Yates over the index vector.
        let mut idx: Vec<usize> = (0..self.len()).collect();
        for i in 0..count {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
        }
        let mut features = Vec::with_capacity(count);
        let mut targets = Vec::with_capacity(count);
        for &i in &idx[..count] {
            features.push(self.features[i].clone());
            targets.push(self.targets[i]);
        }
        Ok(SampleBank {
            label: format!("{}[{count}]", self.label),
            features,
            targets,
        })
    }
}
