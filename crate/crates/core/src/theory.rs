//! Closed-form cooling theory for broadband pulsed excitation.
//!
//! Velocity convention: `v_beam` is the velocity component along the beam
//! propagation direction, so an atom moving with the light sees the laser
//! red-shifted and the atom-frame detuning is `δ − k·v_beam`. With this
//! convention the friction coefficient is negative (damping) for δ < 0.
//!
//! The per-axis force model assumes the beam has equal components along the
//! three principal axes, so each absorption delivers `ħk/√3` along an axis.

use crate::constants::{HBAR, K_B, SECH2_FWHM_TAU};
use crate::error::{Error, Result};
use crate::model::{AtomSpecies, PulsedLaserConfig, TrapConfig};

#[inline]
pub fn sech2(x: f64) -> f64 {
    // 4e^{-2|x|}/(1 + e^{-2|x|})², one exp and no overflow
    let e = (-2.0 * x.abs()).exp();
    let d = 1.0 + e;
    4.0 * e / (d * d)
}

/// Excitation probability of a two-level atom by one sech pulse,
/// `sin²(θ/2)·sech²(τ·δ_eff/2)`.
#[inline]
pub fn excitation_probability(theta: f64, tau: f64, delta_eff: f64) -> f64 {
    let s = (0.5 * theta).sin();
    s * s * sech2(0.5 * tau * delta_eff)
}

/// Detuning seen by an atom moving at `v_beam` along the beam.
#[inline]
pub fn atom_frame_detuning(delta: f64, k: f64, v_beam: f64) -> f64 {
    delta - k * v_beam
}

/// Mean momentum kick along one principal axis per absorbed photon, `ħk/√3`.
pub fn axis_momentum_kick(atom: &AtomSpecies) -> f64 {
    HBAR * atom.wavenumber() / 3f64.sqrt()
}

/// Photons scattered per second at the given beam-axis velocity.
pub fn scatter_rate(atom: &AtomSpecies, laser: &PulsedLaserConfig, v_beam: f64) -> f64 {
    let delta_eff = atom_frame_detuning(laser.detuning, atom.wavenumber(), v_beam);
    laser.rep_rate * excitation_probability(laser.rabi_angle, laser.tau, delta_eff)
}

/// Mean scattering force along one principal axis, N.
pub fn scattering_force(atom: &AtomSpecies, laser: &PulsedLaserConfig, v_beam: f64) -> f64 {
    axis_momentum_kick(atom) * scatter_rate(atom, laser, v_beam)
}

/// Small-velocity expansion `F ≈ f0 + beta·v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedForce {
    /// Velocity-independent force along an axis, N. Never negative.
    pub f0: f64,
    /// Friction coefficient, kg/s. Negative means damping.
    pub beta: f64,
    /// Static displacement `f0/(m·ω²)` along each principal axis, m.
    pub equilibrium_shift: [f64; 3],
}

impl LinearizedForce {
    /// `beta/m`, the cooling rate, 1/s.
    pub fn cooling_rate(&self, atom: &AtomSpecies) -> f64 {
        self.beta / atom.mass
    }
}

pub fn linearize_force(
    atom: &AtomSpecies,
    trap: &TrapConfig,
    laser: &PulsedLaserConfig,
) -> LinearizedForce {
    let k = atom.wavenumber();
    let x = 0.5 * laser.tau * laser.detuning;
    let common = axis_momentum_kick(atom) * laser.rep_rate * laser.resonant_excitation() * sech2(x);
    let f0 = common;
    // d/dv sech²(τ(δ − kv)/2) = kτ·sech²·tanh at v = 0
    let beta = common * k * laser.tau * x.tanh();
    let equilibrium_shift = trap.omega.map(|w| f0 / (atom.mass * w * w));
    LinearizedForce {
        f0,
        beta,
        equilibrium_shift,
    }
}

/// Heating power per axis from recoil, `(1/3)·(2E_r)·R·p_exc`, W.
pub fn diffusion_power(atom: &AtomSpecies, laser: &PulsedLaserConfig, p_exc: f64) -> f64 {
    (2.0 * atom.recoil_energy()) * laser.rep_rate * p_exc / 3.0
}

/// `ħ/(√3·τ·k_B)`, the large-detuning limit of [`equilibrium_temperature`], K.
pub fn temperature_floor(tau: f64) -> f64 {
    HBAR / (3f64.sqrt() * tau * K_B)
}

/// Friction-diffusion balance temperature `ħ/(√3·τ·k_B·|tanh(τδ/2)|)`.
///
/// Only red detunings have an equilibrium; δ ≥ 0 heats without bound.
pub fn equilibrium_temperature(tau: f64, delta: f64) -> Result<f64> {
    if !(delta < 0.0) {
        return Err(Error::NoEquilibrium { detuning: delta });
    }
    Ok(temperature_floor(tau) / (0.5 * tau * delta).tanh().abs())
}

/// FWHM in detuning of the `sech²(τδ/2)` lineshape, rad/s.
pub fn lineshape_fwhm(tau: f64) -> f64 {
    SECH2_FWHM_TAU / tau
}

/// Doppler shift `k·v`, rad/s.
pub fn doppler_shift(atom: &AtomSpecies, v: f64) -> f64 {
    atom.wavenumber() * v
}

/// Speed of a particle of mass `mass` carrying kinetic energy `energy`.
pub fn speed_from_kinetic_energy(energy: f64, mass: f64) -> f64 {
    (2.0 * energy / mass).sqrt()
}

/// Intensity needed to power-broaden a line of width `gamma` over `delta_d`,
/// `I_s·(2Δ_D/γ)²`. Both widths must be in the same units.
pub fn power_broadening_intensity(delta_d: f64, gamma: f64, i_sat: f64) -> f64 {
    let r = 2.0 * delta_d / gamma;
    i_sat * r * r
}

/// Micromotion to secular amplitude ratio, `√2·ω/Ω_rf`.
pub fn micromotion_ratio(trap: &TrapConfig, axis: usize) -> f64 {
    2f64.sqrt() * trap.omega[axis] / trap.omega_rf
}

/// `m·ω²·x_rms²/k_B`, K.
pub fn temperature_from_rms(x_rms: f64, omega: f64, mass: f64) -> f64 {
    let v = omega * x_rms;
    mass * v * v / K_B
}

/// Excited population left when the next pulse arrives, `exp(−1/(R·τ_life))`.
pub fn residual_excitation(lifetime: f64, rep_rate: f64) -> f64 {
    (-1.0 / (rep_rate * lifetime)).exp()
}

// Single-beam geometry.
//
// The expressions above treat each axis with the kick `ħk/√3` but the full
// Doppler sensitivity `k`. For one beam along `b`, the Doppler shift is set
// by `v·b`, so an axis with direction cosine `b_i` feels friction
// `β_beam·b_i²`. These oracles describe what a full three-dimensional
// simulation of one beam should converge to.

/// `dF_beam/dv_beam` at v = 0 for the force along the beam, kg/s.
pub fn beam_friction(atom: &AtomSpecies, laser: &PulsedLaserConfig) -> f64 {
    let k = atom.wavenumber();
    let x = 0.5 * laser.tau * laser.detuning;
    HBAR * k * laser.rep_rate * laser.resonant_excitation() * sech2(x) * k * laser.tau * x.tanh()
}

/// Energy damping rate of one secular mode under the single beam, 1/s.
///
/// For a harmonically bound mode ⟨v²⟩ = E/m, so energy decays at
/// `|β_beam|·b_i²/m` (not twice that, as for a free particle).
pub fn projected_energy_damping_rate(atom: &AtomSpecies, laser: &PulsedLaserConfig, axis: usize) -> f64 {
    let b = laser.beam_dir[axis];
    -beam_friction(atom, laser) * b * b / atom.mass
}

/// Equilibrium temperature of one secular mode under the single beam, K.
///
/// A pulse absorbs at most one photon, so the absorption kick along axis `i`
/// has variance `P(1−P)·(ħk·b_i/m)²` per pulse rather than the Poisson value
/// `P·(ħk·b_i/m)²`; emission adds `P·(ħk/m)²/3`. With `P` the excitation
/// probability at rest, balancing against [`projected_energy_damping_rate`]
/// gives `ħ(b_i²(1−P) + 1/3) / (2k_B·τ·|tanh(τδ/2)|·b_i²)`.
pub fn projected_equilibrium_temperature(laser: &PulsedLaserConfig, axis: usize) -> Result<f64> {
    if !(laser.detuning < 0.0) {
        return Err(Error::NoEquilibrium {
            detuning: laser.detuning,
        });
    }
    let b2 = laser.beam_dir[axis].powi(2);
    if b2 == 0.0 {
        return Err(Error::Precondition(format!("beam has no component along axis {axis}")));
    }
    let x = 0.5 * laser.tau * laser.detuning;
    let p = laser.resonant_excitation() * sech2(x);
    Ok(HBAR * (b2 * (1.0 - p) + 1.0 / 3.0) / (2.0 * K_B * laser.tau * x.tanh().abs() * b2))
}
