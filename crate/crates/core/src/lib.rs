//! Estimation of the division rate of a size-structured cell population from a
//! sample of cell sizes.
//!
//! The crate covers the whole chain: the growth/fragmentation eigenproblem that
//! produces synthetic size distributions ([`eigensolve`]), sampling from them
//! ([`sampling`]), Gaussian kernel estimators of the density and of the flux
//! derivative ([`kernels`]) with data-driven bandwidths ([`bandwidth`]), the
//! inversion of the dilation operator ([`dilation`]) and the assembled
//! estimator ([`pipeline`]), plus a replication harness ([`harness`]).

pub mod bandwidth;
pub mod dilation;
pub mod eigensolve;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod models;
pub mod numgrid;
pub mod pipeline;
pub mod sampling;

pub use error::{Error, Result};
