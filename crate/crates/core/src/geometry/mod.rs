//! Set arithmetic and convex-body primitives.

pub mod affine;
pub mod convex2d;
pub mod deficit;
pub mod hull;
pub mod linalg;
pub mod mesh;
pub mod minkowski;
pub mod polytope;
pub mod symdiff;
pub mod voxel;

pub use affine::AffineMap;
pub use deficit::{bm_deficit, convex_hull, hull_gap, Measured};
pub use mesh::{boundary_quadrature, BoundaryMesh, MeshFacet};
pub use minkowski::{minkowski_combine, Combination};
pub use polytope::{ball_sandwich_check, dist_to_convex, Halfspace, Polytope};
pub use symdiff::{sym_diff_min_translation, BestTranslation};
pub use voxel::VoxelSet;
