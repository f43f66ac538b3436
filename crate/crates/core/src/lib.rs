//! Stein-method perturbation toolkit.
//!
//! Signed lattice measures and compound Poisson construction ([`lattice`]),
//! probability metrics ([`distances`]), the Poisson-based perturbation engine
//! ([`stein`]), exact Bernoulli-sum and jump-process models ([`models`]) and
//! the normal-family Stein ODE ([`continuous`]).

pub mod continuous;
pub mod distances;
pub mod error;
pub mod lattice;
pub mod models;
pub mod quadrature;
pub mod stein;

pub use error::{Error, Result};
