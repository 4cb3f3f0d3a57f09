//! Closed-form optimal channel for two binary sources protected
//! individually (`α = {{1},{2}}`).
//!
//! With `P(X1=1) = a`, `P(X2=1) = b`, `P(X1=1, X2=1) = r` and `a >= b`,
//! output `V = 0` is emitted with probability `r / b` under every marginal
//! conditioning, so `V` is independent of each source on its own. The
//! channel depends only on `p_X`, never on the target.

use super::synergy::{solve_synergy, SolverOptions};
use crate::error::{Error, Result};
use crate::lattice::SourceSet;
use crate::prob::{Channel, SystemDistribution};

const PARAM_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-12;

/// Flat index of the source tuple `(x1, x2)`.
fn cell(x1: usize, x2: usize) -> usize {
    2 * x1 + x2
}

/// Joint pmf of `(X1, X2)` in flat order `00, 01, 10, 11`.
pub fn bivariate_binary_pmf(a: f64, b: f64, r: f64) -> Result<[f64; 4]> {
    let p = [1.0 - a - b + r, b - r, a - r, r];
    let params_ok = [a, b, r].iter().all(|v| v.is_finite() && (-PARAM_TOL..=1.0 + PARAM_TOL).contains(v));
    if !params_ok || p.iter().any(|&c| !(-PARAM_TOL..=1.0 + PARAM_TOL).contains(&c)) {
        return Err(Error::input(format!("(a, b, r) = ({a}, {b}, {r}) is not a valid joint pmf")));
    }
    Ok(p.map(|c| c.clamp(0.0, 1.0)))
}

/// Two-output channel `p(v | x1, x2)` on all four tuples.
///
/// Requires `a >= b`. On the degenerate boundary (`r = b`, `r = a`,
/// `1 - a - b + r = 0`, `b = 0` or `a` at an endpoint) the formula has
/// vanishing denominators; there the channel comes from the linear program
/// with the target `Y = (X1, X2)`, which may use more than two outputs.
pub fn bivariate_binary_optimal_channel(a: f64, b: f64, r: f64) -> Result<Channel> {
    let pmf = bivariate_binary_pmf(a, b, r)?;
    if a < b - PARAM_TOL {
        return Err(Error::input(format!("expected a >= b, got a = {a}, b = {b}")));
    }
    let mirrored = a + b > 1.0;
    // For a + b > 1 relabel X1' = 1 - X2, X2' = 1 - X1; this keeps a' >= b'
    // and brings a' + b' below one, where every cell lies in [0, 1].
    let (a2, b2, r2) = if mirrored { (1.0 - b, 1.0 - a, 1.0 - a - b + r) } else { (a, b, r) };
    let denominators = [b2, a2 - r2, b2 - r2, 1.0 - a2 - b2 + r2, 1.0 - a2];
    if denominators.iter().any(|d| d.abs() <= DEGENERATE_TOL) {
        return lp_channel(&pmf);
    }
    let first = closed_form_first_row(a2, b2, r2);
    let columns = (0..4)
        .map(|x| {
            let (x1, x2) = (x / 2, x % 2);
            let src = if mirrored { cell(1 - x2, 1 - x1) } else { x };
            let v0 = first[src].clamp(0.0, 1.0);
            vec![v0, 1.0 - v0]
        })
        .collect();
    Channel::new((0..4).collect(), columns, 2)
}

/// `p(V = 0 | x)` in flat order, for `a >= b`, `a + b <= 1`, non-degenerate.
fn closed_form_first_row(a: f64, b: f64, r: f64) -> [f64; 4] {
    let big_r = a.min(b);
    let c = 1.0 - a - b;
    let mut row = [0.0; 4];
    row[cell(1, 1)] = 1.0;
    row[cell(1, 0)] = r * (a - big_r) / (big_r * (a - r));
    row[cell(0, 1)] = r * (b - big_r) / (big_r * (b - r));
    row[cell(0, 0)] = r * (c + big_r) / (big_r * (c + r));
    row
}

fn lp_channel(pmf: &[f64; 4]) -> Result<Channel> {
    let mut probs = vec![0.0; 16];
    for (x, &p) in pmf.iter().enumerate() {
        probs[x * 4 + x] = p;
    }
    let dist = SystemDistribution::new(vec![2, 2], 4, probs)?;
    let alpha = SourceSet::canonicalize(&[[0], [1]], 2)?;
    let sol = solve_synergy(&dist, &alpha, SolverOptions::default())?;
    let ch = &sol.forward_channel;
    Channel::new((0..4).collect(), ch.full_columns(4), ch.output_alphabet())
}
