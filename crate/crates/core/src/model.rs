//! Configuration types shared by every other module.
//!
//! Internally every frequency is angular (rad/s). The only exception is the
//! pulse repetition rate, which is a count rate in Hz. Conversion from Hz
//! happens once, at the config-file boundary.

use crate::constants::{AMU, HBAR, TWO_PI};
use crate::error::{ValidationErrors, Violation};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Types whose invariants can be checked in one pass.
pub trait Validate: Sized {
    /// Every broken invariant. Empty when the value is valid.
    fn violations(&self) -> Vec<Violation>;

    fn validate(self) -> Result<Self, ValidationErrors> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ValidationErrors(v))
        }
    }
}

fn require_positive(out: &mut Vec<Violation>, field: &str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::new(field, value, "must be positive and finite"));
    }
}

/// Relative tolerance on `gamma * lifetime ≈ 1`.
pub const LINEWIDTH_LIFETIME_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    /// kg
    pub mass: f64,
    /// Transition wavelength in vacuo, m.
    pub wavelength: f64,
    /// Natural linewidth, rad/s.
    pub gamma: f64,
    /// Excited-state lifetime, s. Used by the dynamics in preference to `gamma`.
    pub lifetime: f64,
    /// W/m²
    pub saturation_intensity: f64,
}

impl AtomSpecies {
    /// ¹¹⁴Cd⁺ on the 5p ²P₁/₂ line at 226.5 nm.
    pub fn cadmium_114() -> Self {
        AtomSpecies {
            mass: 114.0 * AMU,
            wavelength: 226.5e-9,
            gamma: TWO_PI * 50.5e6,
            lifetime: 3.146e-9,
            saturation_intensity: 5000.0,
        }
    }

    /// Wavenumber k = 2π/λ, 1/m.
    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength
    }

    /// Recoil energy (ħk)²/2m, J.
    pub fn recoil_energy(&self) -> f64 {
        let p = HBAR * self.wavenumber();
        p * p / (2.0 * self.mass)
    }

    /// Single-photon recoil velocity ħk/m, m/s.
    pub fn recoil_velocity(&self) -> f64 {
        HBAR * self.wavenumber() / self.mass
    }
}

impl Validate for AtomSpecies {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        require_positive(&mut out, "mass", self.mass);
        require_positive(&mut out, "wavelength", self.wavelength);
        require_positive(&mut out, "gamma", self.gamma);
        require_positive(&mut out, "lifetime", self.lifetime);
        require_positive(&mut out, "saturation_intensity", self.saturation_intensity);
        if self.gamma > 0.0 && self.lifetime > 0.0 {
            let product = self.gamma * self.lifetime;
            if (product - 1.0).abs() > LINEWIDTH_LIFETIME_TOLERANCE {
                out.push(Violation::new(
                    "lifetime",
                    self.lifetime,
                    format!("gamma*lifetime = {product:.4}, deviates from 1 by more than 5%"),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Secular frequencies along the principal axes, rad/s.
    pub omega: Vec3,
    /// rf drive frequency, rad/s.
    pub omega_rf: f64,
}

impl TrapConfig {
    /// Approximately, not exactly, isotropic 0.85 MHz trap with a 35.8 MHz drive.
    ///
    /// The split between axes matters: with exactly degenerate frequencies the
    /// motion perpendicular to the single cooling beam is never damped.
    pub fn cadmium_default() -> Self {
        TrapConfig {
            omega: [TWO_PI * 0.85e6, TWO_PI * 0.87e6, TWO_PI * 0.83e6],
            omega_rf: TWO_PI * 35.8e6,
        }
    }

    pub fn isotropic(omega: f64, omega_rf: f64) -> Self {
        TrapConfig {
            omega: [omega; 3],
            omega_rf,
        }
    }

    /// Warnings that do not invalidate the trap.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                if self.omega[i] == self.omega[j] {
                    out.push(format!(
                        "omega[{i}] == omega[{j}]: motion perpendicular to the beam in that plane is not cooled"
                    ));
                }
            }
        }
        out
    }
}

impl Validate for TrapConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, w) in self.omega.iter().enumerate() {
            require_positive(&mut out, &format!("omega[{i}]"), *w);
        }
        require_positive(&mut out, "omega_rf", self.omega_rf);
        let max = self.omega.iter().cloned().fold(0.0, f64::max);
        if self.omega_rf > 0.0 && self.omega_rf <= max {
            out.push(Violation::new(
                "omega_rf",
                self.omega_rf,
                "must exceed every secular frequency",
            ));
        }
        out
    }
}

/// Tolerance on |beam_dir| = 1.
pub const BEAM_NORM_TOLERANCE: f64 = 1e-12;

/// Residual excited population at the next pulse above which the
/// independent-pulse picture is flagged.
pub const MEMORY_WARNING_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PulsedLaserConfig {
    /// Pulse duration parameter of the sech envelope, s.
    pub tau: f64,
    /// Pulse repetition rate R, Hz.
    pub rep_rate: f64,
    /// δ = ω_laser − ω_atom, rad/s.
    pub detuning: f64,
    /// Resonant pulse area θ, rad.
    pub rabi_angle: f64,
    /// Unit propagation direction in the trap principal-axis frame.
    pub beam_dir: Vec3,
    /// rms intensity radius of the beam, m.
    pub waist_rms: f64,
    /// J. Not used by the dynamics.
    pub pulse_energy: f64,
}

impl PulsedLaserConfig {
    pub fn cadmium_default() -> Self {
        let c = 1.0 / 3f64.sqrt();
        PulsedLaserConfig {
            tau: 1.3e-12,
            rep_rate: 80e6,
            detuning: -TWO_PI * 200e9,
            rabi_angle: std::f64::consts::PI,
            beam_dir: [c, c, c],
            waist_rms: 3.35e-6,
            pulse_energy: 12.5e-12,
        }
    }

    /// sin²(θ/2), the resonant excitation probability.
    pub fn resonant_excitation(&self) -> f64 {
        let s = (0.5 * self.rabi_angle).sin();
        s * s
    }

    /// Rabi angle giving the requested resonant excitation probability.
    pub fn rabi_angle_for(p_resonant: f64) -> f64 {
        2.0 * p_resonant.sqrt().asin()
    }

    /// Detuning at which τ·δ/2 equals `x`.
    pub fn detuning_for_half_tau_delta(tau: f64, x: f64) -> f64 {
        2.0 * x / tau
    }

    pub fn warnings(&self, atom: &AtomSpecies) -> Vec<String> {
        let mut out = Vec::new();
        let residual = (-1.0 / (self.rep_rate * atom.lifetime)).exp();
        if residual > MEMORY_WARNING_THRESHOLD {
            out.push(format!(
                "excited population {residual:.3} remains at the next pulse; pulses are not independent"
            ));
        }
        out
    }
}

impl Validate for PulsedLaserConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        require_positive(&mut out, "tau", self.tau);
        require_positive(&mut out, "rep_rate", self.rep_rate);
        require_positive(&mut out, "waist_rms", self.waist_rms);
        if !self.detuning.is_finite() {
            out.push(Violation::new("detuning", self.detuning, "must be finite"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.rabi_angle) {
            out.push(Violation::new("rabi_angle", self.rabi_angle, "must lie in [0, π]"));
        }
        let n = norm(&self.beam_dir);
        if !((n - 1.0).abs() <= BEAM_NORM_TOLERANCE) {
            out.push(Violation::new(
                "beam_dir",
                format!("{:?}", self.beam_dir),
                format!("norm {n} is not 1"),
            ));
        }
        if !(self.pulse_energy >= 0.0) {
            out.push(Violation::new("pulse_energy", self.pulse_energy, "must be non-negative"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionDelayMode {
    /// Emission recoil at the pulse time.
    Immediate,
    /// Emission after an exponentially distributed delay with the excited-state lifetime.
    Sampled,
}

impl EmissionDelayMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmissionDelayMode::Immediate => "immediate",
            EmissionDelayMode::Sampled => "sampled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "immediate" => Some(EmissionDelayMode::Immediate),
            "sampled" => Some(EmissionDelayMode::Sampled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Maxwell-Boltzmann position and velocity at this temperature, K.
    Thermal { temperature: f64 },
    /// Ion at the trap centre with this kinetic energy (J), isotropic direction.
    KineticEnergy { energy: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Total pulses, burn-in included.
    pub n_pulses: u64,
    /// `None` selects five energy e-foldings at the analytic damping rate.
    pub burn_in_pulses: Option<u64>,
    /// K/s per axis.
    pub background_heating: f64,
    pub emission_delay_mode: EmissionDelayMode,
    pub initial: InitialCondition,
    /// Keep every n-th state as a trajectory sample; 0 disables recording.
    pub record_stride: u64,
    /// Blocks used for the standard error of the temperature estimate.
    pub blocks: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            n_pulses: 100_000_000,
            burn_in_pulses: None,
            background_heating: 0.0,
            emission_delay_mode: EmissionDelayMode::Immediate,
            initial: InitialCondition::Thermal { temperature: 50.0 },
            record_stride: 0,
            blocks: 32,
        }
    }
}

impl Validate for SimConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_pulses == 0 {
            out.push(Violation::new("n_pulses", self.n_pulses, "must be positive"));
        }
        if let Some(b) = self.burn_in_pulses {
            if b >= self.n_pulses {
                out.push(Violation::new(
                    "burn_in_pulses",
                    b,
                    format!("must be less than n_pulses = {}", self.n_pulses),
                ));
            }
        }
        if !(self.background_heating >= 0.0 && self.background_heating.is_finite()) {
            out.push(Violation::new(
                "background_heating",
                self.background_heating,
                "must be non-negative and finite",
            ));
        }
        match self.initial {
            InitialCondition::Thermal { temperature } => {
                if !(temperature >= 0.0 && temperature.is_finite()) {
                    out.push(Violation::new(
                        "initial_temperature",
                        temperature,
                        "must be non-negative and finite",
                    ));
                }
            }
            InitialCondition::KineticEnergy { energy } => {
                if !(energy >= 0.0) {
                    out.push(Violation::new("initial_energy", energy, "must be non-negative"));
                }
            }
        }
        if self.blocks < 2 {
            out.push(Violation::new("blocks", self.blocks, "need at least 2 blocks"));
        }
        out
    }
}
