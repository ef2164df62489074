//! Geodesic distance fields on triangulated surfaces via the surface
//! p-Laplacian.
//!
//! The distance to a feature set (points, curves, or the surface boundary)
//! is approximated by the solution of `-div(|grad u|^(p-2) grad u) = 1`
//! with `u = 0` on the feature set and a homogeneous Neumann condition on
//! the remaining boundary. For large `p` the solution approaches the
//! intrinsic geodesic distance. The nonlinear problem is split with ADMM:
//! a per-face scalar root find, a linear Poisson solve on a piecewise
//! linear surface finite element space, and a dual ascent step.
//!
//! Modules:
//! - [`mesh`]: triangle mesh loading, validation, feature selection,
//!   vertex-noise perturbation.
//! - [`sfem`]: P1 surface finite element assembly and the cached SPD solve.
//! - [`ppoisson`]: the ADMM iteration, p-continuation, and energy tracking.
//! - [`oracles`]: closed-form and graph-based reference distances.
//! - [`metrics`]: SMAPE / L2 errors, convergence rates, distance-property
//!   audits.
//! - [`fixtures`]: built-in hemisphere / torus / strip / disc test meshes.

pub mod fixtures;
pub mod mesh;
pub mod metrics;
pub mod oracles;
pub mod ppoisson;
pub mod sfem;

#[cfg(test)]
pub(crate) mod test_meshes;
