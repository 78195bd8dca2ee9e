//! Stable allocations of `R^d` to Poisson centers with finite appetite.
//!
//! Every site grows towards its nearest centers and every center grows a ball
//! until it has swallowed territory of volume `alpha`. This crate computes a
//! discretized version of that allocation on a finite window and provides the
//! tools needed to study percolation of the claimed set:
//!
//! * [`pointprocess`]: Poisson samples on boxes and tori, homothetic rescaling.
//! * [`allocation`]: the capture engine and an exhaustive stability oracle.
//! * [`majorant`]: unit-cube counts, the `R_i` radii, painted sets, passable
//!   cubes and tail bounds.
//! * [`percolation`]: cluster labeling, crossings and threshold sweeps.
//! * [`booleanmodel`]: comparison with the Poisson Boolean model.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod allocation;
pub mod booleanmodel;
pub mod error;
pub mod lattice;
pub mod majorant;
pub mod percolation;
pub mod pointprocess;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Version tag written into every output file header.
pub const ENGINE_VERSION: &str = concat!("stabperc-", env!("CARGO_PKG_VERSION"));
