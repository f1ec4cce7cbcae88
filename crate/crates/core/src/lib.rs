//! Electronic–vibrational entanglement in laser-driven diatomic molecules.
//!
//! Nuclear wavepackets on several coupled electronic channels are propagated
//! on a sine-DVR grid with a Chebyshev propagator; the electronic reduced
//! density matrix is evaluated along the way to give populations, Schmidt
//! eigenvalues, von Neumann entropy, purity and linear entropy.
//!
//! Everything inside the library is in atomic units (ħ = 1); see [`units`]
//! for the conversions applied at the configuration boundary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cli;
pub mod entanglement;
pub mod error;
pub mod grid;
pub mod oracles;
pub mod potentials;
pub mod propagator;
pub mod pulses;
pub mod runner;
pub mod units;
pub mod vibrational;

pub use error::{Error, Result};
