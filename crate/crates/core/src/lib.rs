//! Quantum trajectories driven by finite Kraus ensembles.
//!
//! The crate covers the whole numerical pipeline: channel diagnostics
//! (fixed point, irreducibility, period), seeded trajectory simulation,
//! discovery and certification of maximal dark subspaces, the Markov chain
//! they carry and its invariant measure, smart isometry families with the
//! unitary groups they induce, and sampling of the ergodic invariant
//! measures of the trajectory kernel.
//!
//! It is `no_std` and only needs `alloc`; file formats and the command line
//! live in the `darktraj` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod darkspace;
pub mod error;
pub mod family;
pub mod linalg;
pub mod measures;
pub mod presets;
pub mod rng;
pub mod tol;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, DensityMatrix, Ray, Subspace, C64};
