//! High-accuracy adaptive tomography of qudit states.
//!
//! The crate builds the minimal family of `2d − 1 + (d mod 2)` projective
//! bases that jointly diagonalize every generalized Gell-Mann operator,
//! simulates finite-shot measurements in those bases, reconstructs states by
//! maximum likelihood, and evaluates the classical and quantum Fisher
//! information that bound the achievable mean infidelity.
//!
//! It is `no_std` and needs only `alloc`. File formats, the parallel
//! benchmark runner and the command line live in the `haqt` crate.
#![no_std]
extern crate alloc;

pub mod bases;
pub mod bench;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod gellmann;
pub mod linalg;
pub mod measurement;
pub mod protocols;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{CMatrix, RMatrix, C64};
pub use rng::SeedStream;
pub use state::{DensityMatrix, EigenDecomposition, PureState};
