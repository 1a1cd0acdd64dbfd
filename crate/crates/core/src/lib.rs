//! Numerical laboratory for solitary waves of the focusing cubic NLS
//! `i ψ_t + ψ_xx + |ψ|²ψ = 0` on the line.
//!
//! The crate is layered bottom-up: [`grid`] supplies the periodic box and
//! the FFT contract, [`soliton`] and [`solver`] the exact family and the
//! split-step flow, [`linop`] and [`dft`] the linearized operator and its
//! distorted Fourier transform, [`modulation`] the soliton/radiation
//! decomposition, [`identities`] the closed-form spectral identities, and
//! [`asymptotics`] the decay and scattering diagnostics. [`config`] and
//! [`experiment`] drive complete pipelines.

pub mod asymptotics;
pub mod config;
pub mod czt;
pub mod dft;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod identities;
pub mod linop;
pub mod modulation;
pub mod series;
pub mod soliton;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{C64, ComplexField, Grid, VectorField};
pub use soliton::SolitonParams;
