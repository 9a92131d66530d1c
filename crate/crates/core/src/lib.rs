pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod linsolve;
pub mod manifold;
pub mod nonlin;
pub mod propagator;
pub mod quadrature;
pub mod spaces;
pub mod spectrum;
pub mod wave1d;

pub use error::{Error, Result};
