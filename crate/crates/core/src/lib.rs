//! Minimum-power downlink energy signal design for multi-user MISO
//! wireless-powered communication networks whose users harvest energy
//! through non-linear, saturating rectifier circuits.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; scenario files, random streams and the command
//! line live in the companion `wpcn` crate.
//!
//! Layout:
//!
//! - [`numerics`]: special functions, Hermitian eigensolver, dense simplex,
//!   scalar root finding.
//! - [`eh_model`]: instantaneous harvested-power maps and their inverses.
//! - [`system_model`]: path loss, Rayleigh channels, zero-forcing noise and
//!   the per-user requirement functions.
//! - [`psi_solver`]: minimum instantaneous power for a harvest target via a
//!   cutting-plane dual, plus rank-one beamformer recovery.
//! - [`planner`]: the five end-to-end design schemes.
//! - [`oracle`]: independent checks (brute force, plan verifier, duality
//!   certificates).
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod eh_model;
mod error;
pub mod numerics;
pub mod oracle;
pub mod planner;
pub mod psi_solver;
pub mod system_model;

pub use error::{Error, Result};
pub use num_complex::Complex64;
