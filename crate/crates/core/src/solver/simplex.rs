//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c'x  s.t.  A x = b, x >= 0`. Only what the synergy program
//! needs: equality rows, non-negative variables, tiny dense problems.

use serde::Serialize;

use super::linalg::rref;
use crate::error::{Error, Result};

const REDUCED_COST_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const PHASE_ONE_TOL: f64 = 1e-9;
const RATIO_SLACK: f64 = 1e-12;
const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    /// Constraint rows; each has `costs.len()` entries.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic columns at the optimum (original variable indices).
    pub basis: Vec<usize>,
    pub iterations: usize,
    /// Final phase-two tableau `[B^-1 A | B^-1 b]`, kept for debugging dumps.
    pub tableau: Vec<Vec<f64>>,
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs simplex iterations with Bland's rule over columns `0..allowed`.
    fn optimize(&mut self, costs: &[f64], allowed: usize) -> Result<()> {
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::internal("simplex iteration limit reached"));
            }
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let d = costs[j]
                    - self
                        .t
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| costs[b] * row[j])
                        .sum::<f64>();
                if d < -REDUCED_COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            // Harris ratio test: find the longest step that keeps every basic
            // value above -RATIO_SLACK, then pivot on the largest entry whose
            // exact ratio fits inside it. Avoids pivoting on round-off sized
            // entries when the data is only consistent to a few ulps.
            let mut max_step = f64::INFINITY;
            for row in &self.t {
                let a = row[c];
                if a > PIVOT_TOL {
                    max_step = max_step.min((row[self.width].max(0.0) + RATIO_SLACK) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a <= PIVOT_TOL || self.rhs(i).max(0.0) / a > max_step {
                    continue;
                }
                leave = match leave {
                    None => Some((i, a)),
                    Some((k, best)) => {
                        if a > best || (a == best && self.basis[i] < self.basis[k]) {
                            Some((i, a))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(Error::internal("linear program is unbounded"));
            };
            self.pivot(r, c);
        }
    }
}

pub fn minimize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.costs.len();
    let m = lp.rows.len();
    if lp.rhs.len() != m || lp.rows.iter().any(|r| r.len() != n) {
        return Err(Error::input("linear program dimensions are inconsistent"));
    }
    if m == 0 {
        if lp.costs.iter().any(|&c| c < 0.0) {
            return Err(Error::internal("linear program is unbounded"));
        }
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective: 0.0,
            basis: Vec::new(),
            iterations: 0,
            tableau: Vec::new(),
        });
    }
    let width = n + m;
    let mut t = Vec::with_capacity(m);
    for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        r.push(sign * b);
        t.push(r);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        width,
        iterations: 0,
    };

    let phase_one: Vec<f64> = (0..width).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    tab.optimize(&phase_one, width)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n)
        .map(|(i, _)| tab.rhs(i))
        .sum();
    if infeasibility > PHASE_ONE_TOL {
        return Err(Error::internal(format!(
            "linear program is infeasible (phase-one residual {infeasibility:e})"
        )));
    }

    // Drive artificial variables out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            let col = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()))
                .filter(|&j| tab.t[i][j].abs() > 1e-9);
            match col {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase_two = lp.costs.clone();
    phase_two.extend(std::iter::repeat_n(0.0, m));
    tab.optimize(&phase_two, n)?;

    let x = refine_basic_solution(lp, &tab.basis).unwrap_or_else(|| {
        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            x[b] = tab.rhs(i).max(0.0);
        }
        x
    });
    let objective = x.iter().zip(&lp.costs).map(|(a, b)| a * b).sum();
    let tableau = tab
        .t
        .iter()
        .map(|r| r[..n].iter().copied().chain(std::iter::once(r[width])).collect())
        .collect();
    Ok(LpSolution {
        x,
        objective,
        basis: tab.basis,
        iterations: tab.iterations,
        tableau,
    })
}

/// Re-solves `A_B x_B = b` from the original data to shed accumulated
/// pivoting round-off. Returns `None` if the result is not clean.
fn refine_basic_solution(lp: &LinearProgram, basis: &[usize]) -> Option<Vec<f64>> {
    let k = basis.len();
    let augmented: Vec<Vec<f64>> = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(r, &b)| basis.iter().map(|&j| r[j]).chain(std::iter::once(b)).collect())
        .collect();
    let (reduced, pivots) = rref(&augmented, 1e-12);
    if pivots.len() != k || pivots.iter().enumerate().any(|(i, &c)| c != i) {
        return None;
    }
    let mut x = vec![0.0; lp.costs.len()];
    for (i, &j) in basis.iter().enumerate() {
        let v = reduced[i][k];
        if v < -1e-9 {
            return None;
        }
        x[j] = v.max(0.0);
    }
    let residual = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(r, b)| (r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() - b).abs())
        .fold(0.0, f64::max);
    (residual <= 1e-10).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram {
            costs: vec![-1.0, -1.0, 0.0, 0.0],
            rows: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            rhs: vec![4.0, 6.0],
        };
        let s = minimize(&lp).unwrap();
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = LinearProgram {
            costs: vec![1.0, 2.0, 3.0],
            rows: vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![0.0, 1.0, 1.0]],
            rhs: vec![1.0, 2.0, 0.5],
        };
        let s = minimize(&lp).unwrap();
        assert!((s.objective - 1.5).abs() < 1e-12);
        assert_eq!(s.tableau.len(), 2);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            costs: vec![1.0, 1.0],
            rows: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            rhs: vec![1.0, 2.0],
        };
        assert!(matches!(minimize(&lp), Err(Error::Internal(_))));
        let lp = LinearProgram {
            costs: vec![-1.0, 0.0],
            rows: vec![vec![1.0, -1.0]],
            rhs: vec![1.0],
        };
        assert!(matches!(minimize(&lp), Err(Error::Internal(_))));
    }

    #[test]
    fn negative_rhs_is_flipped() {
        let lp = LinearProgram {
            costs: vec![1.0, 0.0],
            rows: vec![vec![-1.0, -1.0]],
            rhs: vec![-2.0],
        };
        let s = minimize(&lp).unwrap();
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example (Beale) in equality form.
        let lp = LinearProgram {
            costs: vec![-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0],
            rows: vec![
                vec![0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
                vec![0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            rhs: vec![0.0, 0.0, 1.0],
        };
        let s = minimize(&lp).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
