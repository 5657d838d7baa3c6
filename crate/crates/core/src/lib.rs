//! Curl-conforming finite elements on tetrahedral meshes and mixed solvers
//! for the quad-curl source and eigenvalue problems.

pub mod assembly;
pub mod fespace;
pub mod harness;
pub mod mesh;
pub mod solvers;
pub mod systems;
