//! Symbolic calculus on jet spaces and differential equations.

#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cdiff;
pub mod covering;
pub mod equation;
pub mod hamiltonian;
pub mod error;
pub mod jetalg;
pub mod linalg;

pub use error::{Error, Result};
