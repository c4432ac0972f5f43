//! Identification codes over quantum channels.
//!
//! The crate builds and checks finite-block identification (ID) codes:
//!
//! - [`linalg`]: dense complex kernel (Hermitian eigendecomposition, functions
//!   on the support of PSD matrices, trace distance, fidelity, partial trace).
//! - [`state`], [`channel`], [`info`]: density operators, sub-POVMs, Kraus
//!   channels with adjoints, entropies and Holevo information.
//! - [`transmission`]: transmission codes, their errors, expurgation and
//!   seeded fixture generation.
//! - [`orthogonalize`]: converts an average-error transmission code into a
//!   pure, mutually orthogonal code via pretty-good measurements.
//! - [`subsets`]: families of equal-size subsets with bounded pairwise
//!   intersections.
//! - [`idcode`]: mixture ID codes, random-phase superposition ID codes,
//!   verification, concentration estimates, dimension bounds and
//!   purification onto an extended channel.
//! - [`counterexample`]: a decoder for which fixed-phase superpositions are
//!   never identified.
//! - [`harness`]: seeded end-to-end pipelines and parameter sweeps.

pub mod channel;
pub mod counterexample;
mod error;
pub mod harness;
pub mod idcode;
pub mod info;
pub mod io;
pub mod linalg;
pub mod orthogonalize;
pub mod random;
pub mod state;
pub mod subsets;
pub mod tol;
pub mod transmission;

pub use error::{Error, Result};
