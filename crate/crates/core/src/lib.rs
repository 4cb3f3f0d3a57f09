//! Synergistic-disclosure decomposition of the information that a set of
//! discrete source variables carries about a target.
//!
//! The α-synergy `S^α(X → Y)` is the most information about `Y` that any
//! channel `V` of the sources can reveal while remaining independent of each
//! protected subsystem `X^{α_i}`. Evaluating it over the lattice of
//! constraint families and Möbius-inverting gives a decomposition of
//! `I(X; Y)`; evaluating it over the chain of uniform constraint levels gives
//! the backbone decomposition.

pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod io;
pub mod lattice;
pub mod prob;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{BackboneChain, ConstraintLattice, SourceSet};
pub use prob::{Channel, ProbVector, SystemDistribution, Var};
pub use solver::{solve_synergy, synergy, FKind, SolverOptions, SynergySolution};
