//! Ergodic capacity of IRS-assisted MIMO links from large-scale statistics.
//!
//! The crate evaluates the exact density of an unordered eigenvalue of the
//! effective cascaded channel, integrates it into the ergodic capacity,
//! differentiates the capacity with respect to the IRS phases, and maximises
//! it by projected gradient ascent. A Monte-Carlo engine samples both the
//! effective model and the full Kronecker-correlated channel as a check.

pub mod capacity;
pub mod channel;
pub mod eigenpdf;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod optimizer;
pub mod phase;
pub mod quadrature;
pub mod specfun;
pub mod svg;

pub use error::{Error, Result};
