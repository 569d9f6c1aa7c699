//! Non-Markovian quantum Mpemba analysis for quantum dots coupled to
//! fermionic reservoirs.
//!
//! Energies are in units of the half bandwidth `D`, times in `1/D`, and
//! `ħ = k_B = 1`.

pub mod bath;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod mpemba;
pub mod negf;
pub mod oracle;
pub mod pipeline;
pub mod redfield;
pub mod series;
pub mod state;
pub mod superop;
pub mod tomography;

pub use error::{Error, Result};
pub use faer::c64;
