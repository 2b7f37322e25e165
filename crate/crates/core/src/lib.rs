//! Numerical laboratory for sharp Brunn-Minkowski stability.
//!
//! The crate is organised in layers:
//!
//! * [`geometry`]: voxel sets, Minkowski combinations, hulls, polytopes,
//!   deficits and symmetric-difference minimisation.
//! * [`reduction`]: the regular simplex and its cone family, balancing
//!   translations, sandwich and bounded-position checks, conelike certificates.
//! * [`transport`]: discrete optimal transport with Jacobian diagnostics.
//! * [`lemmas`]: numeric verifiers for individual inequalities.
//! * [`experiments`]: scenario generation, stability runs and exponent fits.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod optim;
pub mod reduction;
pub mod seeds;
pub mod lemmas;
pub mod transport;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/voxels.md")]
    mod voxels {}
    #[doc = include_str!("../../../book/src/deficits.md")]
    mod deficits {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/lemmas.md")]
    mod lemmas {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
