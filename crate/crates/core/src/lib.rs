//! Exact information-bottleneck costs for small feed-forward networks.
//!
//! Feature distributions are finite mixtures of atoms and uniform boxes, so the
//! representation of a piecewise-linear network can be pushed forward exactly and
//! mutual information decided symbolically (finite or infinite). Remedied costs
//! (decision rules, probabilistic outputs, quantizers, additive noise), training
//! and diagnostics build on that.

pub mod dist;
pub mod error;
pub mod ibcost;
pub mod info;
pub mod net;
pub mod quad;
pub mod scenarios;
pub mod tol;
pub mod train;

pub use error::{Error, Result};
