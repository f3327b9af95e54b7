//! Preparing implicit and meshed mathematical surfaces for FDM printing:
//! field evaluation, marching-cubes meshing, splitting, support bases, STL
//! and X3D files, and filament cost.
//!
//! The numeric core is generic over `f32`/`f64` through [`scalar::Real`];
//! the aliases below fix it to `f64`, which the pipeline uses.

pub mod catalog;
pub mod cost;
pub mod field;
pub mod io;
pub mod mesh;
pub mod mesher;
pub mod ops;
pub mod pipeline;
pub mod scalar;
pub mod vec3;

pub type Vec3d = vec3::Vec3<f64>;
pub type Field = field::ScalarField<f64>;
pub type Mesh = mesh::TriMesh<f64>;
pub type Grid = mesher::GridSpec<f64>;
pub type Reel = cost::ReelSpec<f64>;
pub type Plane = ops::SplitPlane<f64>;
