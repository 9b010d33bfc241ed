//! Equivariant Pyragas control of eight Van der Pol oscillators coupled along
//! the edges of a cube.

pub mod acceptance;
pub mod ddesolve;
pub mod domains;
pub mod error;
pub mod model;
pub mod par;
pub mod spectral;
pub mod symgroup;

pub use error::{Error, Result};
