//! Desk-scale moment-implicit particle-in-cell plasma simulation.
//!
//! The crate provides the full per-cycle pipeline: a relativistic implicit
//! particle mover, moment gathering with the implicit susceptibility, a
//! matrix-free flexible-GMRes field solve, dynamic particle-count control,
//! Gaussian-mixture compression of velocity distributions, and statistical
//! analysis of the compressed records, plus a CLI driver.

pub mod analysis;
pub mod config;
pub mod control;
pub mod driver;
pub mod error;
pub mod gmm;
pub mod grid;
pub mod init;
pub mod linalg;
pub mod maxwell;
pub mod moments;
pub mod mover;
pub mod particle;
pub mod rng;
pub mod state;

pub use config::{load_config, BoundaryMode, SimConfig, SpeciesParams};
pub use error::{Error, Result};
pub use particle::Particle;
pub use state::{DiagnosticsRow, SimState};
