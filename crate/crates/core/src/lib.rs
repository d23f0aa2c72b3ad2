//! Gauge-invariant time-dependent Ginzburg-Landau simulator for a
//! superconducting wire carrying an injected current, together with the
//! normal-state field solves, magnetic spectral constants, and decay
//! diagnostics used to study order-parameter localization.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod fields;
pub mod io;
pub mod linalg;
pub mod spectral;
pub mod tdgl;

pub use error::{GlError, Result};

pub use cli::cli_main;
