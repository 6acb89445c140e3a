//! Bayesian multi-target tracking with MCMC over data associations.

pub mod error;
pub mod gaussian;
pub mod io;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod moves;
pub mod pgibbs;
pub mod smc;

pub use error::{MttError, Result};
