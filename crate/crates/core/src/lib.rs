//! Flux coherence of rf-SQUID flux qubits.
//!
//! The library builds the circuit Hamiltonian in the LC-oscillator basis,
//! finds the macroscopic-superposition doublet near half a flux quantum,
//! measures its quantum coherence against flux dephasing, and bounds that
//! coherence from measurement statistics alone.

pub mod circuit;
pub mod coherence;
pub mod config;
pub mod driver;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod output;
pub mod quad;
pub mod spectrum;
pub mod witness;

pub use circuit::CircuitParams;
pub use error::{Error, Result};
