pub mod bspline;
pub mod domain;
pub mod error;
pub mod field;
pub mod lattice;
pub mod moduli;
pub mod operators;
pub mod polyproj;
pub mod pwpoly;
pub mod quadrature;
pub mod registry;

pub use error::{Error, Result};
