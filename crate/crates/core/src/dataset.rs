//! Labeled feature matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A class label, `1..=J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        ClassId(index as u32 + 1)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Row-major `n x p` feature matrix with labels in `1..=J`.
///
/// Immutable once built. Classes may have zero members (e.g. after
/// subsetting); the classifiers check for the counts they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<ClassId>,
    class_counts: Vec<usize>,
}

impl LabeledDataset {
    /// Builds a dataset from flattened rows.
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<ClassId>, n_classes: usize) -> Result<Self> {
        if dim == 0 {
            return domain("feature dimension must be at least 1");
        }
        if points.len() != dim * labels.len() {
            return domain(format!(
                "{} values do not form {} rows of dimension {dim}",
                points.len(),
                labels.len()
            ));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite feature value in row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        let mut class_counts = vec![0usize; n_classes];
        for (row, label) in labels.iter().enumerate() {
            if label.0 == 0 || label.0 as usize > n_classes {
                return domain(format!(
                    "label {label} in row {row} is outside 1..={n_classes}"
                ));
            }
            class_counts[label.index()] += 1;
        }
        Ok(Self {
            dim,
            points,
            labels,
            class_counts,
        })
    }

    /// Builds a dataset from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<ClassId>, n_classes: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::Data(format!(
                "row {i} has {} values, expected {dim}",
                r.len()
            )));
        }
        Self::new(dim, rows.concat(), labels, n_classes)
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

    pub fn n_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn count(&self, class: ClassId) -> usize {
        self.class_counts.get(class.index()).copied().unwrap_or(0)
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.n_classes()).map(ClassId::from_index)
    }

    /// Rows at `indices`, in that order, keeping the class count `J`.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        let mut class_counts = vec![0; self.n_classes()];
        for &i in indices {
            points.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            class_counts[self.labels[i].index()] += 1;
        }
        Self {
            dim: self.dim,
            points,
            labels,
            class_counts,
        }
    }

    /// Same labels, features replaced (used by standardization).
    pub(crate) fn with_points(&self, dim: usize, points: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), dim * self.len());
        Self {
            dim,
            points,
            labels: self.labels.clone(),
            class_counts: self.class_counts.clone(),
        }
    }

    /// Multiplies every feature by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_points(self.dim, self.points.iter().map(|v| v * factor).collect())
    }
}
