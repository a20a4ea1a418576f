//! Pulse-resolved simulation and analysis of broadband Doppler cooling of a
//! single trapped ion.
//!
//! * [`theory`]: closed-form force, friction, diffusion and equilibrium temperature.
//! * [`engine`]: Monte Carlo pulse-by-pulse dynamics in the harmonic trap.
//! * [`imaging`]: synthetic fluorescence images and image thermometry.
//! * [`harness`]: detuning scans, lineshape fitting and CSV output.

pub mod config;
pub mod constants;
pub mod csv;
pub mod engine;
pub mod error;
pub mod fit;
pub mod harness;
pub mod imaging;
pub mod model;
pub mod theory;

pub use config::Config;
pub use error::{Error, Result, ValidationErrors, Violation};
pub use model::{
    AtomSpecies, EmissionDelayMode, InitialCondition, PulsedLaserConfig, SimConfig, TrapConfig,
    Validate, Vec3,
};
