//! Variational-energy physics-informed networks for phase-field brittle
//! fracture on exact NURBS geometries.

pub mod autodiff;
pub mod check;
pub mod config;
pub mod fracture;
pub mod geometry;
pub mod network;
pub mod optimize;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use scalar::Scalar;

pub type Real = f64;
pub type NurbsPatch = geometry::NurbsPatch<Real>;
pub type KnotVector = geometry::KnotVector<Real>;
pub type ElementMesh = geometry::ElementMesh<Real>;
pub use quadrature::{BoundaryCloud, GaussCloud};
pub use fracture::{HistoryField, MaterialParams, SplitMode};
