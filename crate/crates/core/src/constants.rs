//! CODATA 2018 exact/recommended values, SI units.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Electron volt, J.
pub const EV: f64 = 1.602_176_634e-19;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// `arccosh(√2)`, the half-maximum point of `sech²`.
pub const SECH2_HALF_MAX: f64 = 0.881_373_587_019_543;

/// Full width at half maximum of `sech²(τ·δ/2)` in δ, multiplied by τ.
pub const SECH2_FWHM_TAU: f64 = 4.0 * SECH2_HALF_MAX;
