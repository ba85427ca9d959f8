//! Linear stability of a phototactic algal suspension heated or cooled from below.
//!
//! The crate computes the equilibrium state of the suspension, assembles the
//! generalized eigenproblem for the perturbation growth rate, traces neutral
//! curves in the (k, Ra_b) plane and locates stationary or oscillatory onset.

pub mod basic_state;
pub mod error;
pub mod io;
pub mod model;
pub mod neutral;
pub mod patterns;
pub mod registry;
pub mod roots;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
