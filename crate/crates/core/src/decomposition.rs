//! Full-lattice and backbone decompositions of `I(X; Y)`, self-synergy and
//! the self-disclosure capacity bound.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lattice::{BackboneChain, ConstraintLattice, SourceSet, DEFAULT_LATTICE_LIMIT};
use crate::prob::{entropy, SystemDistribution, Var};
use crate::solver::{solve_synergy, source_support, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FullLattice,
    Backbone,
    /// The system was replaced by its self-disclosure version `Y := X`.
    SelfSynergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionOptions {
    pub solver: SolverOptions,
    pub lattice_limit: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            lattice_limit: DEFAULT_LATTICE_LIMIT,
        }
    }
}

/// Cumulative synergies and their Möbius atoms over the constraint lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub mode: Mode,
    pub nodes: Vec<SourceSet>,
    /// `S^α` per node, aligned with `nodes`.
    pub cumulative: Vec<f64>,
    /// `S_∂^α` per node; may be negative.
    pub atoms: Vec<f64>,
    /// `I(X; Y)`.
    pub total: f64,
}

impl DecompositionReport {
    fn position(&self, node: &SourceSet) -> Option<usize> {
        self.nodes.iter().position(|s| s == node)
    }

    pub fn cumulative_of(&self, node: &SourceSet) -> Option<f64> {
        self.position(node).map(|i| self.cumulative[i])
    }

    pub fn atom_of(&self, node: &SourceSet) -> Option<f64> {
        self.position(node).map(|i| self.atoms[i])
    }

    /// Atom of the node written in lattice notation, e.g. `{1}{2}`.
    pub fn atom(&self, name: &str) -> Option<f64> {
        let n = self.nodes.first()?.n();
        self.atom_of(&SourceSet::parse(name, n).ok()?)
    }

    pub fn cumulative_named(&self, name: &str) -> Option<f64> {
        let n = self.nodes.first()?.n();
        self.cumulative_of(&SourceSet::parse(name, n).ok()?)
    }

    pub fn atom_sum(&self) -> f64 {
        self.atoms.iter().sum()
    }

    pub fn to_json(&self) -> Value {
        let mut nodes = Map::new();
        for ((s, c), a) in self.nodes.iter().zip(&self.cumulative).zip(&self.atoms) {
            nodes.insert(s.to_string(), json!({ "cumulative_bits": c, "atom_bits": a }));
        }
        json!({ "mode": self.mode, "total_bits": self.total, "nodes": nodes })
    }
}

/// `B^m` for `m = 0..=n` and the backbone atoms `B_∂^m = B^{m-1} - B^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneReport {
    pub mode: Mode,
    pub levels: Vec<SourceSet>,
    /// `cumulative[m] = B^m`.
    pub cumulative: Vec<f64>,
    /// `atoms[m - 1] = B_∂^m` for `m = 1..=n`.
    pub atoms: Vec<f64>,
    pub total: f64,
}

impl BackboneReport {
    pub fn n(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn b(&self, m: usize) -> f64 {
        self.cumulative[m]
    }

    /// `B_∂^m` for `m >= 1`.
    pub fn atom(&self, m: usize) -> f64 {
        self.atoms[m - 1]
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = (0..self.levels.len())
            .map(|m| {
                json!({
                    "level": m,
                    "node": self.levels[m].to_string(),
                    "cumulative_bits": self.cumulative[m],
                    "atom_bits": if m == 0 { 0.0 } else { self.atoms[m - 1] },
                })
            })
            .collect();
        json!({ "mode": self.mode, "total_bits": self.total, "levels": levels })
    }
}

fn solve_all(dist: &SystemDistribution, nodes: &[SourceSet], options: SolverOptions) -> Result<Vec<f64>> {
    nodes
        .par_iter()
        .map(|alpha| solve_synergy(dist, alpha, options).map(|s| s.value))
        .collect()
}

pub fn full_decomposition(dist: &SystemDistribution) -> Result<DecompositionReport> {
    full_decomposition_with(dist, DecompositionOptions::default())
}

pub fn full_decomposition_with(dist: &SystemDistribution, options: DecompositionOptions) -> Result<DecompositionReport> {
    let lattice = ConstraintLattice::enumerate_with_limit(dist.n_sources(), options.lattice_limit)?;
    decompose_on(dist, &lattice, options.solver, Mode::FullLattice)
}

fn decompose_on(
    dist: &SystemDistribution,
    lattice: &ConstraintLattice,
    solver: SolverOptions,
    mode: Mode,
) -> Result<DecompositionReport> {
    let cumulative = solve_all(dist, lattice.nodes(), solver)?;
    let atoms = lattice.mobius_atoms(&cumulative)?;
    Ok(DecompositionReport {
        mode,
        nodes: lattice.nodes().to_vec(),
        cumulative,
        atoms,
        total: dist.total_information(),
    })
}

pub fn backbone_decomposition(dist: &SystemDistribution) -> Result<BackboneReport> {
    backbone_decomposition_with(dist, SolverOptions::default())
}

pub fn backbone_decomposition_with(dist: &SystemDistribution, solver: SolverOptions) -> Result<BackboneReport> {
    backbone_on(dist, solver, Mode::Backbone)
}

fn backbone_on(dist: &SystemDistribution, solver: SolverOptions, mode: Mode) -> Result<BackboneReport> {
    let chain = BackboneChain::new(dist.n_sources())?;
    let cumulative = solve_all(dist, chain.levels(), solver)?;
    let atoms = cumulative.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(BackboneReport {
        mode,
        levels: chain.levels().to_vec(),
        cumulative,
        atoms,
        total: dist.total_information(),
    })
}

/// The self-disclosure system: same sources, target `Y` = index of the
/// source tuple within the support of `p_X`. Any existing target is dropped.
pub fn self_target(dist: &SystemDistribution) -> Result<SystemDistribution> {
    let support = source_support(dist);
    let px = dist.source_marginal();
    let ny = support.len();
    let mut probs = vec![0.0; dist.source_states() * ny];
    for (k, &x) in support.iter().enumerate() {
        probs[x * ny + k] = px.values()[x];
    }
    SystemDistribution::renormalized(dist.source_alphabets().to_vec(), ny, probs)
}

/// `S^α(X)`, the α-synergy of the sources about themselves.
pub fn self_synergy(dist: &SystemDistribution, alpha: &SourceSet) -> Result<f64> {
    Ok(solve_synergy(&self_target(dist)?, alpha, SolverOptions::default())?.value)
}

pub fn self_decomposition(dist: &SystemDistribution) -> Result<DecompositionReport> {
    self_decomposition_with(dist, DecompositionOptions::default())
}

pub fn self_decomposition_with(dist: &SystemDistribution, options: DecompositionOptions) -> Result<DecompositionReport> {
    let lattice = ConstraintLattice::enumerate_with_limit(dist.n_sources(), options.lattice_limit)?;
    decompose_on(&self_target(dist)?, &lattice, options.solver, Mode::SelfSynergy)
}

pub fn self_backbone(dist: &SystemDistribution) -> Result<BackboneReport> {
    backbone_on(&self_target(dist)?, SolverOptions::default(), Mode::SelfSynergy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityBounds {
    /// `S^α(X → Y)` for the target carried by the input system.
    pub target_synergy: f64,
    /// `S^α(X)`.
    pub self_synergy: f64,
    /// `H(X) - max_j H(X^{α_j})`.
    pub upper: f64,
}

/// The chain `S^α(X → Y) <= S^α(X) <= H(X) - max_j H(X^{α_j})`, checked to 1e-9.
pub fn capacity_bounds(dist: &SystemDistribution, alpha: &SourceSet) -> Result<CapacityBounds> {
    let upper = capacity_upper_bound(dist, alpha)?;
    let target_synergy = solve_synergy(dist, alpha, SolverOptions::default())?.value;
    let self_value = self_synergy(dist, alpha)?;
    if target_synergy > self_value + 1e-9 || self_value > upper + 1e-9 {
        return Err(Error::internal(format!(
            "capacity chain violated: target {target_synergy}, self {self_value}, bound {upper}"
        )));
    }
    Ok(CapacityBounds {
        target_synergy,
        self_synergy: self_value,
        upper,
    })
}

/// `H(X) - max_j H(X^{α_j})`.
pub fn capacity_upper_bound(dist: &SystemDistribution, alpha: &SourceSet) -> Result<f64> {
    if alpha.n() != dist.n_sources() {
        return Err(Error::input("source-set and distribution disagree on n"));
    }
    let h = entropy(&dist.source_marginal());
    let mut largest: f64 = 0.0;
    for &m in alpha.members() {
        largest = largest.max(dist.entropy_of(&Var::sources_in(m))?);
    }
    Ok(h - largest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{correlated_bits, gate, Gate};

    fn coins(n: usize) -> SystemDistribution {
        let k = 1 << n;
        SystemDistribution::sources_only(vec![2; n], vec![1.0 / k as f64; k]).unwrap()
    }

    #[test]
    fn copy_and_tbc() {
        let r = full_decomposition(&gate(Gate::Copy)).unwrap();
        assert!((r.atom("{}").unwrap() - 1.0).abs() < 1e-9);
        assert!(r.atoms.iter().map(|a| a.abs()).sum::<f64>() - 1.0 < 1e-9);

        let r = full_decomposition(&gate(Gate::Tbc)).unwrap();
        assert!((r.atom("{1}{2}").unwrap() - 1.0).abs() < 1e-9);
        assert!((r.atom("{}").unwrap() - 1.0).abs() < 1e-9);
        assert!(r.atom("{1}").unwrap().abs() < 1e-9);
        assert!(r.atom("{2}").unwrap().abs() < 1e-9);
        assert!((r.atom_sum() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn backbone_gates() {
        let r = backbone_decomposition(&gate(Gate::Xor)).unwrap();
        assert!((r.atom(2) - 1.0).abs() < 1e-9 && r.atom(1).abs() < 1e-9);
        let r = backbone_decomposition(&gate(Gate::And)).unwrap();
        assert!((r.atom(1) - 0.5).abs() < 1e-9);
        assert!((r.atom(2) - (0.811_278_124_459_132_8 - 0.5)).abs() < 1e-9);
        let indep = SystemDistribution::new(vec![2, 2], 2, vec![0.125; 8]).unwrap();
        assert!(backbone_decomposition(&indep).unwrap().cumulative.iter().all(|b| b.abs() < 1e-9));
    }

    #[test]
    fn self_synergy_examples() {
        let a = SourceSet::parse("{1}{2}", 2).unwrap();
        assert!((self_synergy(&coins(2), &a).unwrap() - 1.0).abs() < 1e-9);
        assert!(self_synergy(&correlated_bits(0.5, 0.5).unwrap(), &a).unwrap().abs() < 1e-12);
        let b = self_backbone(&coins(3)).unwrap();
        assert!((b.b(0) - 3.0).abs() < 1e-9);
        assert!((b.b(1) - 2.0).abs() < 1e-9);
        assert!(b.b(3).abs() < 1e-12);
    }

    #[test]
    fn capacity_examples() {
        let a = SourceSet::parse("{1}{2}", 2).unwrap();
        let xor = gate(Gate::Xor);
        let c = capacity_bounds(&xor, &a).unwrap();
        assert!((c.upper - 1.0).abs() < 1e-12);
        assert!((c.self_synergy - 1.0).abs() < 1e-9);
        assert!((capacity_upper_bound(&xor, &SourceSet::bottom(2)).unwrap() - 2.0).abs() < 1e-12);
        let g1 = SourceSet::uniform_level(3, 1).unwrap();
        assert!((capacity_upper_bound(&coins(3), &g1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_json_lists_every_node() {
        let r = full_decomposition(&gate(Gate::Xor)).unwrap();
        let v = r.to_json();
        assert_eq!(v["nodes"].as_object().unwrap().len(), 5);
        assert!((v["nodes"]["{1}{2}"]["atom_bits"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}
