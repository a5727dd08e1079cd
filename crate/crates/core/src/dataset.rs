//! Feature matrix with binary labels, and validated risk-estimate vectors.

use crate::error::{Error, Result};

/// A feature matrix (n rows, d columns, row-major) with one binary label
/// per row. The unit of splitting, training, and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<bool>,
    d: usize,
}

impl Dataset {
    /// Build a dataset from a row-major feature buffer and labels.
    ///
    /// Requires n >= 1, `features.len() == labels.len() * d`, and every
    /// feature finite.
    pub fn new(features: Vec<f64>, labels: Vec<bool>, d: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput { what: "dataset rows" });
        }
        if d == 0 {
            return Err(Error::InvalidConfig {
                what: "dataset must have at least one feature column".into(),
            });
        }
        if features.len() != labels.len() * d {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: labels.len() * d,
                what: "feature buffer vs n*d",
            });
        }
        if let Some((i, &v)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let _ = i;
            return Err(Error::NonFiniteValue {
                what: "feature",
                value: v,
            });
        }
        Ok(Self { features, labels, d })
    }

    /// Build from per-row feature vectors.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput { what: "dataset rows" });
        }
        let d = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: d,
                what: "row width",
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
                what: "rows vs labels",
            });
        }
        let mut features = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            features.extend_from_slice(row);
        }
        Self::new(features, labels, d)
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of feature columns.
    pub fn d(&self) -> usize {
        self.d
    }

    /// One feature row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// The full row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Count of positive labels.
    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// True when both label classes are present.
    pub fn has_both_classes(&self) -> bool {
        let pos = self.n_positive();
        pos > 0 && pos < self.n()
    }

    /// New dataset holding the given rows, in order. Indices may repeat
    /// (bootstrap resampling relies on this).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput { what: "subset indices" });
        }
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Self {
            features,
            labels,
            d: self.d,
        })
    }
}

/// Risk estimates for a set of patients, validated to be finite and
/// within [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        for (index, &value) in scores.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::NonFiniteScore { index, value });
            }
        }
        Ok(Self(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ScoreVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ScoreVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
