//! Moments, convolutions and partition counts for operator-valued
//! Jacobi–Szegő distributions over finite-dimensional matrix algebras.

pub mod algebra;
pub mod config;
pub mod error;
pub mod jacobi;
pub mod joint;
pub mod partitions;
pub mod scalar;
pub mod suites;

pub use error::{NcError, Result};
