//! Atom-photon entanglement in a three-level Λ condensate under EIT.
//!
//! The crate is organised bottom-up:
//!
//! - [`fockspace`]: truncated one- and two-mode bosonic states.
//! - [`effective_model`]: the diagonal two-mode photon/atom Hamiltonian and
//!   its exact phase evolution.
//! - [`revival`]: discrete coherent-state superpositions at rational times.
//! - [`catalog`]: closed-form entangled and cat states.
//! - [`entanglement`]: concurrence and Schmidt-spectrum measures.
//! - [`full_model`]: the four-mode Hamiltonian, block-diagonalised by its two
//!   conserved charges, used to check the reduction to two modes.
//! - [`cli`]: the `eitangle` command-line front end.

pub mod catalog;
pub mod cli;
pub mod effective_model;
pub mod entanglement;
pub mod error;
pub mod fockspace;
pub mod format;
pub mod full_model;
pub mod revival;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
