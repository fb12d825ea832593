//! Finite volume element discretization of the 2D Landau–Lifshitz equation
//! on barycentric-dual triangular meshes, advanced in time by the
//! Gauss–Seidel projection method.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which is what the experiment
//! harness and the acceptance suite use.

pub mod error;
pub mod fvem;
pub mod harness;
pub mod mesh;
pub mod physics;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod stepper;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rect = mesh::Rect<f64>;
pub type Mesh = mesh::TriMesh<f64>;
pub type Dual = mesh::DualGeometry<f64>;
pub type Field = fvem::VectorField3<f64>;
pub type Matrix = sparse::CsrMatrix<f64>;
pub type Params = physics::DimensionlessParams<f64>;
pub type Discretization = stepper::Discretization<f64>;
pub type Gspm = stepper::GspmStepper<f64>;
