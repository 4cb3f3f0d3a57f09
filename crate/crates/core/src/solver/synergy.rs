//! The α-synergy `S^α(X → Y)`: the most information about `Y` that a
//! channel on `X` can disclose while staying independent of every protected
//! subsystem `X^{α_i}`.
//!
//! The optimal channel mixes vertices of the perfect-privacy polytope, so
//! the value is the linear program
//!
//! ```text
//! max  sum_j w_j D_f(q_j || p_Y)   s.t.  sum_j w_j x_j = p_X,  w >= 0
//! ```
//!
//! over the polytope vertices `x_j`, where `q_j = P_{Y|X} x_j`. For KL this
//! is `H(Y) - min sum_j w_j H(q_j)`.

use serde::Serialize;

use super::constraints::{build_constraint_matrix, restricted_source_pmf};
use super::divergence::{divergence_unchecked, FKind};
use super::linalg::rank;
use super::polytope::{polytope_vertices_with_limit, DEFAULT_MAX_CANDIDATES};
use super::simplex::{minimize, LinearProgram, LpSolution};
use crate::error::{Error, Result};
use crate::lattice::SourceSet;
use crate::prob::{entropy_bits, mutual_information_table, Channel, SystemDistribution, Var};

/// Leakage tolerance (bits) for a channel to count as α-synergistic.
pub const VERIFY_TOL: f64 = 1e-9;

const WEIGHT_EPS: f64 = 1e-12;
const CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub objective: FKind,
    /// Cap on candidate bases during vertex enumeration.
    pub max_candidates: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            objective: FKind::Kl,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

/// Optimal α-synergistic disclosure for one system and one source-set.
#[derive(Debug, Clone)]
pub struct SynergySolution {
    pub value: f64,
    pub objective: FKind,
    /// Flat source tuples carrying positive probability (columns of the vertices).
    pub support: Vec<usize>,
    /// Every polytope vertex, as a pmf over `support`.
    pub vertices: Vec<Vec<f64>>,
    /// LP weight of each vertex; the pmf of `V` over the vertex list.
    pub weights: Vec<f64>,
    /// Vertices with positive weight, in the order used for the channel outputs.
    pub used_vertices: Vec<usize>,
    /// `p(x | V = v)` for each output `v`.
    pub reverse_channel: Vec<Vec<f64>>,
    /// `p(v | x)` on the support.
    pub forward_channel: Channel,
    pub degeneracy_warning: Option<String>,
    lp: LinearProgram,
    lp_solution: LpSolution,
}

impl SynergySolution {
    /// Pmf of `V` over the used vertices.
    pub fn output_weights(&self) -> Vec<f64> {
        self.used_vertices.iter().map(|&j| self.weights[j]).collect()
    }

    /// Debug view of the linear program and its solution.
    pub fn lp_dump(&self) -> LpDump<'_> {
        LpDump {
            objective: self.objective.name(),
            value: self.value,
            support: &self.support,
            vertices: &self.vertices,
            program: &self.lp,
            solution: &self.lp_solution,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LpDump<'a> {
    pub objective: &'static str,
    pub value: f64,
    pub support: &'a [usize],
    pub vertices: &'a [Vec<f64>],
    pub program: &'a LinearProgram,
    pub solution: &'a LpSolution,
}

/// `S^α(X → Y)` under the KL objective.
pub fn synergy(dist: &SystemDistribution, alpha: &SourceSet) -> Result<f64> {
    Ok(solve_synergy(dist, alpha, SolverOptions::default())?.value)
}

pub fn solve_synergy(dist: &SystemDistribution, alpha: &SourceSet, options: SolverOptions) -> Result<SynergySolution> {
    let cm = build_constraint_matrix(dist, alpha)?;
    let support = cm.support().to_vec();
    let p_x = restricted_source_pmf(dist, &support);
    let polytope = polytope_vertices_with_limit(&cm, &p_x, options.max_candidates)?;

    let ny = dist.target_alphabet();
    let conditionals: Vec<Vec<f64>> = support
        .iter()
        .map(|&x| dist.target_given_source(x).expect("support has positive mass"))
        .collect();
    let push = |x: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; ny];
        for (px, row) in x.iter().zip(&conditionals) {
            for (qy, py) in q.iter_mut().zip(row) {
                *qy += px * py;
            }
        }
        q
    };
    let p_y = push(p_x.values());
    let vertices = polytope.vertices().to_vec();
    let images: Vec<Vec<f64>> = vertices.iter().map(|v| push(v)).collect();

    let costs: Vec<f64> = match options.objective {
        FKind::Kl => images.iter().map(|q| entropy_bits(q)).collect(),
        kind => {
            let positive: Vec<usize> = (0..ny).filter(|&y| p_y[y] > 0.0).collect();
            let ref_q: Vec<f64> = positive.iter().map(|&y| p_y[y]).collect();
            images
                .iter()
                .map(|q| {
                    let qq: Vec<f64> = positive.iter().map(|&y| q[y]).collect();
                    -divergence_unchecked(&qq, &ref_q, kind)
                })
                .collect()
        }
    };
    let m = support.len();
    let lp = LinearProgram {
        costs,
        rows: (0..m).map(|i| vertices.iter().map(|v| v[i]).collect()).collect(),
        rhs: p_x.values().to_vec(),
    };
    let sol = minimize(&lp)?;

    let mut value = match options.objective {
        FKind::Kl => entropy_bits(&p_y) - sol.objective,
        _ => -sol.objective,
    };
    if value < 0.0 && value > -CLAMP_EPS {
        value = 0.0;
    }

    let weights = sol.x.clone();
    let used: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > WEIGHT_EPS).collect();
    if used.is_empty() {
        return Err(Error::internal("linear program returned no active vertex"));
    }
    let reverse: Vec<Vec<f64>> = used.iter().map(|&j| vertices[j].clone()).collect();
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut col: Vec<f64> = used.iter().map(|&j| weights[j] * vertices[j][i]).collect();
            let s: f64 = col.iter().sum();
            if s > 0.0 {
                col.iter_mut().for_each(|v| *v /= s);
            } else {
                // mass below round-off: any column keeps the channel valid
                col.fill(1.0 / used.len() as f64);
            }
            col
        })
        .collect();
    let forward = Channel::new(support.clone(), columns, used.len())?;

    Ok(SynergySolution {
        value,
        objective: options.objective,
        support,
        vertices,
        weights,
        used_vertices: used,
        reverse_channel: reverse,
        forward_channel: forward,
        degeneracy_warning: polytope.degeneracy_warning().map(str::to_owned),
        lp,
        lp_solution: sol,
    })
}

/// `min_j I(Y; X^{-α_j} | X^{α_j})`, an upper bound on the KL synergy.
pub fn upper_bound(dist: &SystemDistribution, alpha: &SourceSet) -> Result<f64> {
    check_n(dist, alpha)?;
    let n = dist.n_sources();
    let full = crate::lattice::full_mask(n);
    let mut best = f64::INFINITY;
    for &member in alpha.members() {
        let inside = Var::sources_in(member);
        let outside = Var::sources_in(full & !member);
        let cmi = dist.conditional_mutual_information(&[Var::Target], &outside, &inside)?;
        best = best.min(cmi);
    }
    Ok(best)
}

/// Leakage of a channel about each protected subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    /// `(subset mask, I(X^{α_i}; V))` per member of α.
    pub leakages: Vec<(u32, f64)>,
    pub max_leakage: f64,
    pub passed: bool,
}

pub fn verify_channel(ch: &Channel, dist: &SystemDistribution, alpha: &SourceSet) -> Result<ChannelReport> {
    check_n(dist, alpha)?;
    let states = dist.source_states();
    if ch.input_support().iter().any(|&x| x >= states) {
        return Err(Error::input("channel input outside the source alphabet"));
    }
    let p_x = dist.source_marginal();
    let alphabets = dist.source_alphabets();
    let nv = ch.output_alphabet();
    let mut leakages = Vec::with_capacity(alpha.len());
    for &member in alpha.members() {
        let idx: Vec<usize> = (0..dist.n_sources()).filter(|i| member & (1 << i) != 0).collect();
        let width: usize = idx.iter().map(|&i| alphabets[i]).product();
        let mut joint = vec![vec![0.0; width]; nv];
        for (x, &px) in p_x.values().iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            let col = ch
                .column_for(x)
                .ok_or_else(|| Error::input(format!("channel undefined on supported input {x}")))?;
            let t = dist.decode_source(x);
            let a = idx.iter().fold(0, |acc, &i| acc * alphabets[i] + t[i]);
            for (v, &pv) in col.iter().enumerate() {
                joint[v][a] += pv * px;
            }
        }
        leakages.push((member, mutual_information_table(&joint)));
    }
    let max_leakage = leakages.iter().map(|l| l.1).fold(0.0, f64::max);
    Ok(ChannelReport {
        leakages,
        max_leakage,
        passed: max_leakage <= VERIFY_TOL,
    })
}

/// Whether `S^α(X → Y) = 0`, decided algebraically: synergy vanishes exactly
/// when every direction that preserves the protected marginals also
/// preserves `p_Y`, i.e. `Null([1'; P_α]) ⊆ Null(P_{Y|X})` on the support.
pub fn is_zero_synergy(dist: &SystemDistribution, alpha: &SourceSet) -> Result<bool> {
    let cm = build_constraint_matrix(dist, alpha)?;
    let a = cm.with_simplex_row();
    let mut stacked = a.clone();
    for y in 0..dist.target_alphabet() {
        stacked.push(
            cm.support()
                .iter()
                .map(|&x| dist.target_given_source(x).expect("supported")[y])
                .collect(),
        );
    }
    Ok(rank(&stacked, 1e-9) == rank(&a, 1e-9))
}

fn check_n(dist: &SystemDistribution, alpha: &SourceSet) -> Result<()> {
    if alpha.n() != dist.n_sources() {
        return Err(Error::input(format!(
            "source-set is over {} sources, distribution has {}",
            alpha.n(),
            dist.n_sources()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gate, Gate};

    fn alpha(text: &str, n: usize) -> SourceSet {
        SourceSet::parse(text, n).unwrap()
    }

    #[test]
    fn table_gates() {
        let xor = gate(Gate::Xor);
        assert!((synergy(&xor, &alpha("{1}{2}", 2)).unwrap() - 1.0).abs() < 1e-12);
        let and = gate(Gate::And);
        let expected = 0.811_278_124_459_132_8 - 0.5;
        assert!((synergy(&and, &alpha("{1}{2}", 2)).unwrap() - expected).abs() < 1e-12);
        let unq = gate(Gate::Unq1);
        assert!((synergy(&unq, &alpha("{2}", 2)).unwrap() - 1.0).abs() < 1e-12);
        for g in Gate::TABLE {
            assert_eq!(synergy(&gate(g), &SourceSet::top(2)).unwrap(), 0.0);
        }
    }

    #[test]
    fn solution_invariants() {
        let d = gate(Gate::And);
        let a = alpha("{1}{2}", 2);
        let s = solve_synergy(&d, &a, SolverOptions::default()).unwrap();
        let px = restricted_source_pmf(&d, &s.support);
        for (i, p) in px.values().iter().enumerate() {
            let mix: f64 = s.vertices.iter().zip(&s.weights).map(|(v, w)| w * v[i]).sum();
            assert!((mix - p).abs() < 1e-9);
        }
        assert!(verify_channel(&s.forward_channel, &d, &a).unwrap().passed);
        let direct = s.forward_channel.information_about_target(&d).unwrap();
        assert!((direct - s.value).abs() < 1e-9);
    }

    #[test]
    fn upper_bound_examples() {
        assert!((upper_bound(&gate(Gate::Xor), &alpha("{1}{2}", 2)).unwrap() - 1.0).abs() < 1e-12);
        assert!(upper_bound(&gate(Gate::Unq1), &alpha("{1}", 2)).unwrap().abs() < 1e-12);
        assert!((upper_bound(&gate(Gate::And), &alpha("{1}", 2)).unwrap() - 0.5).abs() < 1e-12);
        let and = gate(Gate::And);
        let ub = upper_bound(&and, &SourceSet::bottom(2)).unwrap();
        assert!((ub - and.total_information()).abs() < 1e-12);
    }

    #[test]
    fn verify_channel_examples() {
        let coins = gate(Gate::Xor);
        let xor = Channel::deterministic(vec![0, 1, 2, 3], &[0, 1, 1, 0], 2).unwrap();
        assert!(verify_channel(&xor, &coins, &alpha("{1}{2}", 2)).unwrap().passed);

        let identity = Channel::deterministic(vec![0, 1, 2, 3], &[0, 1, 2, 3], 4).unwrap();
        let r = verify_channel(&identity, &coins, &alpha("{1}", 2)).unwrap();
        assert!(!r.passed);
        assert!((r.max_leakage - 1.0).abs() < 1e-12);

        let constant = Channel::deterministic(vec![0, 1, 2, 3], &[0, 0, 0, 0], 1).unwrap();
        for node in crate::lattice::ConstraintLattice::enumerate(2).unwrap().nodes() {
            assert!(verify_channel(&constant, &coins, node).unwrap().passed);
        }

        let partial = Channel::deterministic(vec![0, 1], &[0, 0], 1).unwrap();
        assert!(matches!(
            verify_channel(&partial, &coins, &alpha("{1}", 2)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn zero_synergy_examples() {
        let unq = gate(Gate::Unq1);
        assert!(is_zero_synergy(&unq, &alpha("{1}", 2)).unwrap());
        assert!(synergy(&unq, &alpha("{1}", 2)).unwrap() < 1e-9);
        assert!(!is_zero_synergy(&gate(Gate::Xor), &alpha("{1}{2}", 2)).unwrap());

        let indep = SystemDistribution::new(vec![2, 2], 2, vec![0.125; 8]).unwrap();
        for node in crate::lattice::ConstraintLattice::enumerate(2).unwrap().nodes() {
            assert!(is_zero_synergy(&indep, node).unwrap());
        }
    }

    #[test]
    fn total_variation_objective() {
        let xor = gate(Gate::Xor);
        let opts = SolverOptions {
            objective: FKind::Tv,
            ..Default::default()
        };
        let s = solve_synergy(&xor, &alpha("{1}{2}", 2), opts).unwrap();
        // V = XOR determines Y; I_TV(V;Y) = sum_v p(v) TV(delta, uniform) = 0.5
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!(solve_synergy(&xor, &SourceSet::top(2), opts).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn mismatched_source_count() {
        assert!(synergy(&gate(Gate::Xor), &SourceSet::bottom(3)).is_err());
        assert!(upper_bound(&gate(Gate::Xor), &SourceSet::bottom(3)).is_err());
    }
}
