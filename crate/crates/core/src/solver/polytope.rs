//! Vertex enumeration for the perfect-privacy polytope
//! `{x >= 0, 1'x = 1, P x = P p_X}` by basic-feasible-solution search.

use std::collections::HashMap;

use super::constraints::ConstraintMatrix;
use super::linalg::{rref, solve_square};
use crate::error::{Error, Result};
use crate::prob::ProbVector;

pub const PIVOT_TOL: f64 = 1e-10;
/// Absolute distance below which two candidate vertices are the same point.
pub const DEDUP_TOL: f64 = 1e-12;
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Upper bound on candidate bases examined before giving up.
pub const DEFAULT_MAX_CANDIDATES: u64 = 50_000_000;

const INDEPENDENCE_TOL: f64 = 1e-9;
const ZERO_PATTERN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DisclosurePolytope {
    vertices: Vec<Vec<f64>>,
    rank: usize,
    support: Vec<usize>,
    warning: Option<String>,
}

impl DisclosurePolytope {
    /// Extreme points as pmfs over the support columns.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Rank of the stacked system `[1'; P]`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Set when round-off made some candidate bases ambiguous.
    pub fn degeneracy_warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }
}

pub fn polytope_vertices(p: &ConstraintMatrix, p_x: &ProbVector) -> Result<DisclosurePolytope> {
    polytope_vertices_with_limit(p, p_x, DEFAULT_MAX_CANDIDATES)
}

pub fn polytope_vertices_with_limit(
    p: &ConstraintMatrix,
    p_x: &ProbVector,
    max_candidates: u64,
) -> Result<DisclosurePolytope> {
    let m = p.n_cols();
    if p_x.len() != m {
        return Err(Error::input(format!(
            "pmf has {} entries, constraint matrix has {m} columns",
            p_x.len()
        )));
    }
    let a = p.with_simplex_row();
    let b: Vec<f64> = a
        .iter()
        .map(|r| r.iter().zip(p_x.values()).map(|(u, v)| u * v).sum())
        .collect();
    let augmented: Vec<Vec<f64>> = a
        .iter()
        .zip(&b)
        .map(|(r, &bi)| r.iter().copied().chain(std::iter::once(bi)).collect())
        .collect();
    let (reduced, pivots) = rref(&augmented, PIVOT_TOL);
    let reduced: Vec<Vec<f64>> = reduced
        .into_iter()
        .zip(&pivots)
        .filter(|(_, &c)| c < m)
        .map(|(r, _)| r)
        .collect();
    let rank = reduced.len();
    if rank == 0 {
        return Err(Error::internal("constraint system has rank zero"));
    }
    let candidates = binomial(m as u64, rank as u64);
    if candidates > max_candidates {
        return Err(Error::Capacity(format!(
            "vertex enumeration needs {candidates} candidate bases (|support| = {m}, rank = {rank}), limit is {max_candidates}"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..m).map(|j| reduced.iter().map(|r| r[j]).collect()).collect();
    let rhs: Vec<f64> = reduced.iter().map(|r| r[m]).collect();

    let mut search = BasisSearch {
        columns: &columns,
        rhs: &rhs,
        rank,
        chosen: Vec::with_capacity(rank),
        ortho: Vec::with_capacity(rank),
        found: HashMap::new(),
        vertices: Vec::new(),
        ambiguous: 0,
    };
    search.descend(0);

    let mut warning = None;
    let mut vertices = Vec::with_capacity(search.vertices.len());
    for x in search.vertices {
        let residual = a
            .iter()
            .zip(&b)
            .map(|(r, bi)| (r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() - bi).abs())
            .fold(0.0, f64::max);
        if residual > FEASIBILITY_TOL {
            warning = Some(format!("dropped a candidate vertex with residual {residual:e}"));
            continue;
        }
        vertices.push(x);
    }
    if search.ambiguous > 0 && warning.is_none() {
        warning = Some(format!(
            "{} candidate bases were numerically near-singular",
            search.ambiguous
        ));
    }
    if vertices.is_empty() {
        return Err(Error::internal("no feasible vertex found; the pmf is not in its own polytope"));
    }
    Ok(DisclosurePolytope {
        vertices,
        rank,
        support: p.support().to_vec(),
        warning,
    })
}

struct BasisSearch<'a> {
    columns: &'a [Vec<f64>],
    rhs: &'a [f64],
    rank: usize,
    chosen: Vec<usize>,
    /// Orthonormal basis of the span of the chosen columns.
    ortho: Vec<Vec<f64>>,
    /// Indices into `vertices`, bucketed by support pattern.
    found: HashMap<Vec<u64>, Vec<usize>>,
    vertices: Vec<Vec<f64>>,
    ambiguous: usize,
}

impl BasisSearch<'_> {
    fn descend(&mut self, start: usize) {
        if self.chosen.len() == self.rank {
            self.evaluate();
            return;
        }
        let m = self.columns.len();
        let needed = self.rank - self.chosen.len();
        for j in start..=m - needed {
            let mut r = self.columns[j].clone();
            for q in &self.ortho {
                let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (x, y) in r.iter_mut().zip(q) {
                    *x -= d * y;
                }
            }
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= INDEPENDENCE_TOL {
                continue;
            }
            r.iter_mut().for_each(|v| *v /= norm);
            self.chosen.push(j);
            self.ortho.push(r);
            self.descend(j + 1);
            self.ortho.pop();
            self.chosen.pop();
        }
    }

    fn evaluate(&mut self) {
        let sub: Vec<Vec<f64>> = (0..self.rank)
            .map(|i| self.chosen.iter().map(|&j| self.columns[j][i]).collect())
            .collect();
        let Some(w) = solve_square(sub, self.rhs.to_vec(), PIVOT_TOL) else {
            self.ambiguous += 1;
            return;
        };
        if w.iter().any(|&v| v < -PIVOT_TOL) {
            return;
        }
        let m = self.columns.len();
        let mut x = vec![0.0; m];
        for (&j, &v) in self.chosen.iter().zip(&w) {
            x[j] = v.max(0.0);
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        let mut key = vec![0u64; m.div_ceil(64)];
        for (j, &v) in x.iter().enumerate() {
            if v > ZERO_PATTERN_TOL {
                key[j / 64] |= 1 << (j % 64);
            }
        }
        // Points sharing a numerical support pattern are merged only when they
        // coincide; tiny coordinates can hide a genuinely different vertex.
        let bucket = self.found.entry(key).or_default();
        let duplicate = bucket
            .iter()
            .any(|&k| self.vertices[k].iter().zip(&x).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
        if !duplicate {
            bucket.push(self.vertices.len());
            self.vertices.push(x);
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::super::constraints::{build_constraint_matrix, restricted_source_pmf};
    use super::*;
    use crate::lattice::SourceSet;
    use crate::prob::SystemDistribution;

    fn vertices_of(d: &SystemDistribution, alpha: &SourceSet) -> DisclosurePolytope {
        let p = build_constraint_matrix(d, alpha).unwrap();
        let px = restricted_source_pmf(d, p.support());
        polytope_vertices(&p, &px).unwrap()
    }

    fn contains(vs: &[Vec<f64>], v: &[f64]) -> bool {
        vs.iter()
            .any(|u| u.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12))
    }

    #[test]
    fn independent_coins_singletons() {
        let d = SystemDistribution::new(vec![2, 2], 1, vec![0.25; 4]).unwrap();
        let alpha = SourceSet::parse("{1}{2}", 2).unwrap();
        let poly = vertices_of(&d, &alpha);
        assert_eq!(poly.vertices().len(), 2);
        assert!(contains(poly.vertices(), &[0.5, 0.0, 0.0, 0.5]));
        assert!(contains(poly.vertices(), &[0.0, 0.5, 0.5, 0.0]));
        assert_eq!(poly.rank(), 3);
        assert!(poly.degeneracy_warning().is_none());
    }

    #[test]
    fn top_gives_single_vertex() {
        let p = vec![0.1, 0.2, 0.3, 0.4];
        let d = SystemDistribution::new(vec![2, 2], 1, p.clone()).unwrap();
        let poly = vertices_of(&d, &SourceSet::top(2));
        assert_eq!(poly.vertices().len(), 1);
        assert!(contains(poly.vertices(), &p));
    }

    #[test]
    fn bottom_gives_basis_vectors() {
        let d = SystemDistribution::new(vec![2, 2], 1, vec![0.1, 0.0, 0.5, 0.4]).unwrap();
        let poly = vertices_of(&d, &SourceSet::bottom(2));
        assert_eq!(poly.support(), &[0, 2, 3]);
        assert_eq!(poly.vertices().len(), 3);
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            assert!(contains(poly.vertices(), &e));
        }
    }

    #[test]
    fn vertices_are_feasible_and_distinct() {
        let p = vec![0.05, 0.1, 0.15, 0.2, 0.1, 0.1, 0.25, 0.05];
        let d = SystemDistribution::new(vec![2, 2, 2], 1, p).unwrap();
        let alpha = SourceSet::parse("{12}{3}", 3).unwrap();
        let cm = build_constraint_matrix(&d, &alpha).unwrap();
        let px = restricted_source_pmf(&d, cm.support());
        let poly = polytope_vertices(&cm, &px).unwrap();
        let target = cm.apply(px.values());
        for v in poly.vertices() {
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let got = cm.apply(v);
            assert!(got.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-9));
        }
        for (i, u) in poly.vertices().iter().enumerate() {
            for w in &poly.vertices()[i + 1..] {
                assert!(u.iter().zip(w).any(|(a, b)| (a - b).abs() > DEDUP_TOL));
            }
        }
    }

    #[test]
    fn candidate_limit_is_a_capacity_error() {
        let d = SystemDistribution::new(vec![2, 2], 1, vec![0.25; 4]).unwrap();
        let alpha = SourceSet::parse("{1}{2}", 2).unwrap();
        let p = build_constraint_matrix(&d, &alpha).unwrap();
        let px = restricted_source_pmf(&d, p.support());
        assert!(matches!(
            polytope_vertices_with_limit(&p, &px, 2),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(16, 11), 4368);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(4, 4), 1);
    }
}
