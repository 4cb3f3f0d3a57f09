//! Perfect-privacy polytope, vertex enumeration and the synergy linear program.

mod bivariate;
mod constraints;
mod divergence;
pub(crate) mod linalg;
mod polytope;
mod simplex;
mod synergy;

pub use bivariate::{bivariate_binary_optimal_channel, bivariate_binary_pmf};
pub use constraints::{
    build_constraint_matrix, restricted_source_pmf, source_support, ConstraintBlock, ConstraintMatrix, SUPPORT_EPS,
};
pub use divergence::{f_divergence, FKind};
pub use polytope::{polytope_vertices, polytope_vertices_with_limit, DisclosurePolytope, DEFAULT_MAX_CANDIDATES};
pub use simplex::{minimize, LinearProgram, LpSolution};
pub use synergy::{
    is_zero_synergy, solve_synergy, synergy, upper_bound, verify_channel, ChannelReport, LpDump, SolverOptions,
    SynergySolution, VERIFY_TOL,
};
