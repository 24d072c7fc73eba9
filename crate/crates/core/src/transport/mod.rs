//! Discrete optimal transport: distributions, couplings and exact solvers.

mod barycentric;
mod brute;
mod cost;
mod coupling;
mod distribution;
mod kantorovich;
mod monotonicity;
mod quantile;
mod simplex;

pub use barycentric::{barycentric_map, BarycentricMap};
pub use brute::brute_force_coupling;
pub use cost::{sq_euclidean_cost, sq_euclidean_points};
pub use coupling::{Coupling, Entry, MARGINAL_TOL, PRUNE_TOL};
pub use distribution::{DiscreteDistribution, MASS_TOL};
pub use kantorovich::{solve_kantorovich, solve_quadratic};
pub use monotonicity::{check_cyclical_monotonicity, MonotonicityReport, MONOTONICITY_TOL};
pub use quantile::quantile_coupling_1d;
pub use simplex::{solve_transport, TransportSolution};
