//! Clustering quality: best-permutation accuracy, NMI, purity.
//!
//! All three are computed from a contingency table over the label values
//! that actually occur in either assignment.

use std::collections::BTreeMap;

use super::hungarian::max_weight_assignment;
use super::LabelAssignment;
use crate::{Result, RgcError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterScores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

impl ClusterScores {
    pub fn compute(pred: &LabelAssignment, truth: &LabelAssignment) -> Result<Self> {
        Ok(ClusterScores {
            acc: accuracy(pred, truth)?,
            nmi: nmi(pred, truth)?,
            purity: purity(pred, truth)?,
        })
    }
}

/// `table[p][t]` = samples with predicted value `p` and true value `t`,
/// both re-indexed densely in ascending label order.
struct Contingency {
    table: Vec<Vec<usize>>,
    n: usize,
}

impl Contingency {
    fn build(a: &LabelAssignment, b: &LabelAssignment) -> Result<Self> {
        if a.len() != b.len() {
            return Err(RgcError::InvalidInput(format!(
                "label vectors differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(RgcError::InvalidInput("empty label vectors".into()));
        }
        let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
            let mut m = BTreeMap::new();
            for &l in labels {
                m.entry(l).or_insert(0);
            }
            for (i, v) in m.values_mut().enumerate() {
                *v = i;
            }
            m
        };
        let ia = index(a.labels());
        let ib = index(b.labels());
        let mut table = vec![vec![0usize; ib.len()]; ia.len()];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            table[ia[&x]][ib[&y]] += 1;
        }
        Ok(Contingency { table, n: a.len() })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        let cols = self.table.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.table.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Fraction of samples that agree after the best one-to-one relabeling of
/// `pred` (Kuhn-Munkres on the contingency table, zero-padded to square).
pub fn accuracy(pred: &LabelAssignment, truth: &LabelAssignment) -> Result<f64> {
    let ct = Contingency::build(pred, truth)?;
    let size = ct.table.len().max(ct.table[0].len());
    let weight: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    ct.table
                        .get(i)
                        .and_then(|r| r.get(j))
                        .map_or(0.0, |&v| v as f64)
                })
                .collect()
        })
        .collect();
    let assign = max_weight_assignment(&weight);
    let matched: f64 = assign.iter().enumerate().map(|(i, &j)| weight[i][j]).sum();
    Ok(matched / ct.n as f64)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over `max(H(a), H(b))`; two single-cluster
/// assignments score 1.
pub fn nmi(a: &LabelAssignment, b: &LabelAssignment) -> Result<f64> {
    let ct = Contingency::build(a, b)?;
    let n = ct.n as f64;
    let ra = ct.row_sums();
    let cb = ct.col_sums();
    let denom = entropy(&ra, n).max(entropy(&cb, n));
    if denom == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in ct.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let pij = nij as f64 / n;
                mi += pij * (nij as f64 * n / (ra[i] as f64 * cb[j] as f64)).ln();
            }
        }
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Share of samples belonging to the majority true class of their cluster.
pub fn purity(pred: &LabelAssignment, truth: &LabelAssignment) -> Result<f64> {
    let ct = Contingency::build(pred, truth)?;
    let majority: usize = ct
        .table
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / ct.n as f64)
}
