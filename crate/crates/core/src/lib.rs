//! Folded-cycle error reconstruction.
//!
//! Builds Markovian noise channels from Hamiltonian and jump coefficients,
//! generates randomized-compiling circuits around an x-folded hard cycle,
//! simulates them with finite shots, and fits the generalized fidelity decay
//! to split each marginal Pauli error rate into a coherent (quadratic in the
//! folding) and a decoherent (linear) part.

pub mod channel;
pub mod error;
pub mod export;
pub mod fitdecay;
pub mod lindblad;
pub mod lsq;
pub mod notation;
pub mod oracle;
pub mod pauli;
pub mod protocol;
pub mod simulate;

pub use error::{Error, Result};
