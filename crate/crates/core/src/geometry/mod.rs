//! Exact geometry: NURBS patches, element meshes with quadtree/octree
//! refinement, and the initial crack description.

mod crack;
mod knots;
mod mesh;
mod nurbs;
pub mod patchfile;
pub mod presets;

pub use crack::{crack_distance, Crack, CrackFace, CrackSegment};
pub use knots::{bspline_basis, KnotVector};
pub use mesh::{refine_region, Cell, ElementMesh};
pub use nurbs::NurbsPatch;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("basis index {index} out of range (have {count} functions)")]
    BasisIndex { index: usize, count: usize },
    #[error("parametric coordinate {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("degenerate geometry: Jacobian determinant {0} is not positive")]
    Degenerate(f64),
    #[error("bad patch shape: {0}")]
    Shape(String),
    #[error("crack segment has zero length")]
    DegenerateCrack,
    #[error("patch file: {0}")]
    PatchFile(String),
    #[error("unknown geometry preset `{0}`")]
    UnknownPreset(String),
}
