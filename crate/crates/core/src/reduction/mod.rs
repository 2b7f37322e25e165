//! Reduction machinery: the simplex frame, cone splitting and positioning.

pub mod balance;
pub mod cone_split;
pub mod conelike;
pub mod containment;
pub mod sandwich;
pub mod simplex;

pub use balance::{balancing_translation, cone_masses, Balance};
pub use cone_split::{cone_split_deficits, w_n, ConeRow, ConeSplit};
pub use conelike::{
    conelike_check, condition_three, conelike_from_cone_slice, ConditionReport, ConelikeCertificate, ConelikeReport,
};
pub use sandwich::{bounded_position, sandwich_check, BoundedReport, SandwichReport};
pub use simplex::{cone_membership, regular_simplex, ConeFamily, SimplexFrame};
