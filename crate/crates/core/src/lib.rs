//! Linearly implicit, energy-preserving scalar auxiliary variable (SAV)
//! Fourier pseudo-spectral solver for the space-fractional nonlinear
//! Schrödinger equation
//!
//! ```text
//! i u_t - γ(-Δ)^{α/2} u + (V + β|u|²) u = 0
//! ```
//!
//! on periodic 1D and 2D domains, with a fully implicit Crank–Nicolson
//! comparator and the diagnostics needed for convergence, conservation and
//! cost studies.

pub mod cnf;
pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fsav;
pub mod grid;
pub mod presets;
pub mod sav;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Axis, GridSpec, RealField};
pub use sav::{ModelParams, SavState};
pub use spectral::SpectralSymbol;
