use std::ops::Range;

use crate::error::{Error, Result};
use crate::lattice::{Mask, SourceSet};
use crate::prob::{ProbVector, SystemDistribution};

/// Probabilities at or below this value are treated as outside the support.
pub const SUPPORT_EPS: f64 = 1e-14;

/// Rows of the constraint matrix that marginalize onto one protected subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintBlock {
    pub subset: Mask,
    pub rows: Range<usize>,
}

/// Binary matrix mapping a pmf on the source support to the stacked
/// marginals of every protected subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    rows: Vec<Vec<f64>>,
    blocks: Vec<ConstraintBlock>,
    support: Vec<usize>,
}

impl ConstraintMatrix {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    /// Flat source-tuple indices of the columns.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.support.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// The matrix with an all-ones row prepended (the simplex constraint).
    pub fn with_simplex_row(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows.len() + 1);
        out.push(vec![1.0; self.n_cols()]);
        out.extend(self.rows.iter().cloned());
        out
    }
}

/// Support of `p_X` (entries above [`SUPPORT_EPS`]).
pub fn source_support(dist: &SystemDistribution) -> Vec<usize> {
    dist.source_marginal()
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > SUPPORT_EPS)
        .map(|(i, _)| i)
        .collect()
}

/// `p_X` restricted to its support and renormalized.
pub fn restricted_source_pmf(dist: &SystemDistribution, support: &[usize]) -> ProbVector {
    let px = dist.source_marginal();
    let vals: Vec<f64> = support.iter().map(|&x| px.values()[x]).collect();
    let total: f64 = vals.iter().sum();
    ProbVector::from_raw(vals.into_iter().map(|v| v / total).collect())
}

pub fn build_constraint_matrix(dist: &SystemDistribution, alpha: &SourceSet) -> Result<ConstraintMatrix> {
    if alpha.n() != dist.n_sources() {
        return Err(Error::input(format!(
            "source-set is over {} sources, distribution has {}",
            alpha.n(),
            dist.n_sources()
        )));
    }
    let support = source_support(dist);
    let tuples: Vec<Vec<usize>> = support.iter().map(|&x| dist.decode_source(x)).collect();
    let alphabets = dist.source_alphabets();
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for &subset in alpha.members() {
        let idx: Vec<usize> = (0..dist.n_sources()).filter(|i| subset & (1 << i) != 0).collect();
        let height: usize = idx.iter().map(|&i| alphabets[i]).product();
        let start = rows.len();
        rows.extend(std::iter::repeat_n(vec![0.0; support.len()], height));
        for (col, t) in tuples.iter().enumerate() {
            let r = idx.iter().fold(0, |acc, &i| acc * alphabets[i] + t[i]);
            rows[start + r][col] = 1.0;
        }
        blocks.push(ConstraintBlock {
            subset,
            rows: start..start + height,
        });
    }
    Ok(ConstraintMatrix { rows, blocks, support })
}
