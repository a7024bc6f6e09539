//! Classical capacity of a bosonic additive-noise channel whose noise is a
//! stationary Gauss-Markov (AR(1)) process.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss-Kronrod integration used throughout.
//! - [`noise_process`]: the Markov noise process, its L1 contraction and the
//!   weak-forgetfulness horizon.
//! - [`spectral`]: the tridiagonal precision matrix of the stationary noise,
//!   its spectrum and the asymptotic symbol.
//! - [`waterfill`]: water-filling solvers and the memory-channel capacity.
//! - [`channel`]: covariance-level simulation of the random-displacement
//!   channel and the collective-mode encodings that decouple it.
//! - [`cli`]: the `memchan` command-line front end.

pub mod channel;
pub mod cli;
pub mod error;
pub mod noise_process;
pub mod quadrature;
pub mod spectral;
pub mod waterfill;

pub use error::{Error, Result};
