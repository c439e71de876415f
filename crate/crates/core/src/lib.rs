//! Numerical core of the artifact bias audit toolkit.
//!
//! Everything here is a pure function over in-memory values: no file system,
//! no clock, no global state. The crate is `no_std` and needs only `alloc`, so
//! the same code paths run inside the CLI and inside any embedding host.
//!
//! * [`model`]: domain types shared by every stage (records, annotations,
//!   prediction sets, bias families) and cross-file join validation.
//! * [`compositor`]: mask binarization and artifact insertion on RGB rasters.
//! * [`cbi`]: counterfactual bias insertion metrics (switched predictions,
//!   prediction shift, F1, per-family aggregation).
//! * [`stats`]: prevalence tables, phi correlation, predictive power score
//!   and Cohen's kappa.
//! * [`fidelity`]: FID, KID and k-NN precision/recall over embeddings.
//! * [`linalg`]: the dense symmetric eigensolver backing FID.

#![cfg_attr(not(test), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod cbi;
pub mod compositor;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod stats;
mod util;

pub use error::{Error, Result};
