//! High-precision Hankel determinants, orthogonal-polynomial recurrence data,
//! equilibrium measures and Painlevé I/III transcendents for the weight
//! z^n e^{-n(z + t/z)} on a complex contour around the origin.

pub mod error;
pub mod numkernel;
pub mod weight;
pub mod equilibrium;
pub mod orthopoly;
pub mod painleve3;
pub mod painleve1;
pub mod cli;

pub use error::{Error, Result};
