//! Small-gain analysis for networks of input-to-state stable subsystems whose gains are
//! aggregated by sums on some rows and maxima on others.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod ganet;
pub mod graph;
pub mod grid;
pub mod kfun;
pub mod lyapunov;
pub mod network;
pub mod path;
pub mod report;
pub mod spectral;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use grid::GridSpec;
pub use kfun::{Aggregation, FnClass, ScalarFn};
pub use network::GainNetwork;
