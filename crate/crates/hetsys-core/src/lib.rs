//! Invariant-form engine for heterotic Hermitian geometry on Lie groups.
//!
//! Everything is computed on left-invariant forms of a Lie algebra presented
//! by its structure equations, so every operator is a finite matrix.



pub mod algebroid;
pub mod cohomology;
pub mod error;
pub mod gauge;
pub mod hermitian;
pub mod lie_exterior;
pub mod linearization;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod systems;
pub mod variation;

pub use error::{Error, Result};
pub use lie_exterior::{Form, LieModel};
pub use linalg::C64;
