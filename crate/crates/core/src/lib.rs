//! Numerical laboratory for a classical colored particle moving under Wong's
//! equations in an external Yang-Mills field on a manifold with boundary.
//!
//! The crate integrates the flow on `SM × 𝒪`, tabulates lens data (exit
//! point, exit velocity, exit charge, travel time), checks the
//! pseudo-linearization identity and the weighted X-ray transform it produces,
//! and recovers the boundary field strength from lens data alone.

pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod lie_algebra;
pub mod linalg;
pub mod manifold;
pub mod ode;
pub mod recovery;
pub mod tensor;
pub mod variational;

pub use error::{Error, Result};
