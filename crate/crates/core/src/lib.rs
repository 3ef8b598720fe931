//! Wireless MIMO switching through a zero-forcing amplify-and-forward relay.
//!
//! A relay with one antenna per station realizes a permutation of the
//! stations' signals in each slot. The crate builds the relay beamformers,
//! enumerates the derangement sets that give every ordered pair a slot, and
//! runs Monte Carlo throughput experiments over Rayleigh-fading channels.

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod relay;
pub mod scheduling;

pub use error::{Error, Result};
