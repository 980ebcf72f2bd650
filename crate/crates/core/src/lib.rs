//! Goursat-Volterra state equations in two independent variables: forward
//! solves, resolvent kernels, co-states, exact discrete gradients,
//! projected-gradient optimization and two-dimensional Gronwall bounds.

pub mod error;
pub mod forward;
pub mod grid;
pub mod gvlinalg;
pub mod problem;
pub mod costate;
pub mod gradient;
pub mod optimize;
pub mod demos;
pub mod gronwall;
pub mod cli;

pub use error::{GvError, Result};
