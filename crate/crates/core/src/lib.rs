//! Simulation of one-dimensional non-Hermitian lattices: Bloch models,
//! spectral topology, skin-channel wavepacket dynamics and Loschmidt-echo
//! diagnostics.

pub mod config;
pub mod dqpt;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod real;
pub mod spectral;
pub mod wavepacket;

pub use error::{Error, Result};
pub use real::{ComplexExt, Dd, Real};
