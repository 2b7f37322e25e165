//! Discrete optimal transport for the quadratic cost and the diagnostics
//! built on top of it.

pub mod diagnostics;
pub mod map;
pub mod measure;
pub mod network_simplex;
pub mod plan;

pub use diagnostics::{
    boundary_transport_integral, displacement_opnorm_integral, e_region, eigen_deficit, regularity_ratio,
    BoundaryIntegral, Estimate, RegularityReport,
};
pub use map::{affine_conjugate_transport, jacobian_estimate, min_neighbors, JacobianFit, TransportMap};
pub use measure::{discretize_uniform, DiscreteMeasure};
pub use plan::{cyclical_monotonicity_check, solve_ot, EntropicReport, OtMode, PotentialField, TransportPlan};
