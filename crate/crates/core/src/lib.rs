//! Monitored free fermions: quantum-jump trajectories, an exact Fock-space
//! oracle, steady-state observables, closed-form predictions and the
//! statistical analysis connecting them.

pub mod analysis;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod linalg;
pub mod observables;
pub mod special;
pub mod temporal;
pub mod theory;

pub use error::{Error, Result};
