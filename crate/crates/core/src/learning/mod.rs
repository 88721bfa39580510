//! Consumers of a learned affinity graph.

mod hungarian;
pub mod kmeans;
pub mod lgc;
pub mod metrics;
pub mod spectral;

pub use kmeans::{kmeans, KMeansFit, DEFAULT_RESTARTS};
pub use lgc::{lgc_propagate, propagate_with_laplacian};
pub use metrics::{accuracy, nmi, purity, ClusterScores};
pub use spectral::spectral_cluster;

use crate::{Matrix, Result, RgcError};

/// Hard labels in `[0, c)` for every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<usize>,
    c: usize,
}

impl LabelAssignment {
    /// Class count inferred as `max label + 1`.
    pub fn new(labels: Vec<usize>) -> Self {
        let c = labels.iter().max().map_or(1, |&m| m + 1);
        LabelAssignment { labels, c }
    }

    pub fn with_classes(labels: Vec<usize>, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(RgcError::InvalidInput(
                "class count must be at least 1".into(),
            ));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= c) {
            return Err(RgcError::InvalidInput(format!(
                "label {l} of sample {i} outside [0, {c})"
            )));
        }
        Ok(LabelAssignment { labels, c })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labels known for a subset of samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialLabels {
    labels: Vec<Option<usize>>,
    c: usize,
}

impl PartialLabels {
    pub fn new(labels: Vec<Option<usize>>, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(RgcError::InvalidInput(
                "class count must be at least 1".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = *l {
                if l >= c {
                    return Err(RgcError::InvalidInput(format!(
                        "label {l} of sample {i} outside [0, {c})"
                    )));
                }
            }
        }
        Ok(PartialLabels { labels, c })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(Option::is_some).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    /// `n x c` indicator with `y_ij = 1` iff sample `i` is labeled `j`.
    pub fn indicator(&self) -> Matrix {
        let mut y = Matrix::zeros(self.labels.len(), self.c);
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = *l {
                y[(i, l)] = 1.0;
            }
        }
        y
    }
}

/// Class scores, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    pub scores: Matrix,
}

impl SoftLabels {
    /// Row-wise argmax; ties go to the lowest class index.
    pub fn hard(&self) -> LabelAssignment {
        let c = self.scores.ncols();
        let labels = self
            .scores
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for j in 1..c {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        LabelAssignment { labels, c }
    }
}
