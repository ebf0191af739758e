//! Numerical construction of equivariant minimal surfaces in real hyperbolic
//! 3- and 4-space from holomorphic data on a triangulated hyperbolic surface.

pub mod bundles;
pub mod disk;
pub mod error;
pub mod germ;
pub mod higgs;
pub mod invariants;

pub mod linalg;
pub mod mesh;
pub mod moduli;

pub use error::{Error, Result};
