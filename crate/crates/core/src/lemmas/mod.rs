//! Numeric verifiers for the individual inequalities behind the stability
//! estimate. Each verifier reports a pass flag together with the slack, so
//! that violations can be told apart from borderline rounding.

use serde::{Deserialize, Serialize};

pub mod filling;
pub mod lambdabound;
pub mod mainprop;
pub mod prob;
pub mod ray;
pub mod simplex;

pub use filling::{check_filling, filling_mu_bound, FillingReport};
pub use lambdabound::{check_lambdabound, scan_lambdabound, LambdaBoundConstants, LambdaCheck};
pub use mainprop::{mainprop_diagnostics, DiagnosticRow, MainPropOptions, MainPropReport};
pub use prob::{
    ks_critical_1pct, ks_uniform, mc_probabilistic_bound, min_ratio_ci, sample_random_scaling, scan_prob, MapProvider,
    ProbEstimate, ProbLemParams, RandomScaling,
};
pub use ray::{
    check_pointwise_ray, check_sd_vs_distance, random_sandwiched_polytope, sample_boundary, scan_ray, RayCheck, SdReport,
};
pub use simplex::{
    check_simplex_normals, construct_conelike_ball, facet_touch_point, sigma_exact, ConelikeBall, FacetTouch,
    PropertyCheck, SimplexNormals,
};

/// Summary of a randomized scan over one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub params: serde_json::Value,
    pub samples: usize,
    pub violations: usize,
    /// Smallest relative slack seen; negative values are violations.
    pub worst_slack: f64,
}
