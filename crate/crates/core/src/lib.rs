//! Numerical study of linear and semilinear damped Klein-Gordon type wave
//! equations `u_tt - u_xx + V(x) u + a(x) u_t = f(u)` on the line, with a
//! decaying potential and damping localized near the origin.

pub mod analysis;
pub mod cli;
pub mod coefficients;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod output;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::Grid;
