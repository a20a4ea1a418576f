//! Pulse-resolved Monte Carlo of one ion in a harmonic trap.
//!
//! Each pulse period is: photon absorption drawn with the exact sech²
//! probability at the current Doppler shift, recoil kicks, then exact free
//! secular evolution for `1/R`. A trajectory draws every random number from
//! one xoshiro256++ stream, so `(configs, seed)` fixes the result bit for bit.

pub mod interaction;
pub mod propagator;
pub mod stats;
pub mod trajectory;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::StandardNormal;

use crate::constants::K_B;
use crate::error::{Error, Result, ValidationErrors, Violation};
use crate::model::{
    dot, AtomSpecies, EmissionDelayMode, InitialCondition, PulsedLaserConfig, SimConfig, TrapConfig,
    Validate, Vec3,
};
use crate::theory;

pub use interaction::{background_heating_kick, isotropic_unit_vector, pulse_interaction, PulseKernel};
pub use propagator::{axis_energies, harmonic_advance, PulsePropagator};
pub use stats::{
    measure_damping_rate, time_to_temperature, DampingFit, EnergyEstimates, Estimate, TrajectoryStats,
};
pub use trajectory::{trajectory_table, write_trajectory_csv, TrajectorySample, TRAJECTORY_HEADER};

/// Generator behind every trajectory, seeded with `seed_from_u64`.
pub type SimRng = Xoshiro256PlusPlus;

/// Ion position and velocity in the principal-axis frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IonState {
    /// m
    pub position: Vec3,
    /// m/s
    pub velocity: Vec3,
    pub scatter_count: u64,
    /// s
    pub time: f64,
}

/// Background-heating kicks are applied once every this many pulses.
pub const HEATING_STRIDE: u64 = 64;

/// Energy e-foldings discarded by the automatic burn-in.
pub const AUTO_BURN_IN_E_FOLDINGS: f64 = 5.0;

/// Slowest single-beam energy damping rate over the three axes, 1/s.
/// Zero or negative when some axis is not cooled.
pub fn slowest_damping_rate(atom: &AtomSpecies, laser: &PulsedLaserConfig) -> f64 {
    (0..3)
        .map(|i| theory::projected_energy_damping_rate(atom, laser, i))
        .fold(f64::INFINITY, f64::min)
}

/// Pulses covering [`AUTO_BURN_IN_E_FOLDINGS`] energy e-foldings; zero when
/// the laser does not cool.
pub fn auto_burn_in(atom: &AtomSpecies, laser: &PulsedLaserConfig) -> u64 {
    let rate = slowest_damping_rate(atom, laser);
    if !(rate > 0.0) || !rate.is_finite() {
        return 0;
    }
    (AUTO_BURN_IN_E_FOLDINGS / rate * laser.rep_rate).ceil() as u64
}

/// Draws the starting state. Uses the trajectory's own stream.
pub fn initial_state<R: Rng + ?Sized>(
    initial: &InitialCondition,
    atom: &AtomSpecies,
    trap: &TrapConfig,
    rng: &mut R,
) -> IonState {
    let mut s = IonState::default();
    match *initial {
        InitialCondition::Thermal { temperature } => {
            let sv = (K_B * temperature / atom.mass).sqrt();
            for i in 0..3 {
                let nx: f64 = rng.sample(StandardNormal);
                let nv: f64 = rng.sample(StandardNormal);
                s.position[i] = sv / trap.omega[i] * nx;
                s.velocity[i] = sv * nv;
            }
        }
        InitialCondition::KineticEnergy { energy } => {
            let speed = theory::speed_from_kinetic_energy(energy, atom.mass);
            let u = isotropic_unit_vector(rng);
            s.velocity = u.map(|c| speed * c);
        }
    }
    s
}

/// Everything one call to [`run`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub stats: TrajectoryStats,
    /// States every `record_stride` pulses, plus the final state.
    pub trajectory: Vec<TrajectorySample>,
    pub final_state: IonState,
}

fn validate_all(
    atom: &AtomSpecies,
    trap: &TrapConfig,
    laser: &PulsedLaserConfig,
    sim: &SimConfig,
) -> std::result::Result<(), ValidationErrors> {
    let mut v = atom.violations();
    v.extend(trap.violations());
    v.extend(laser.violations());
    v.extend(sim.violations());
    if v.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(v))
    }
}

/// Burn-in actually used for `sim`.
pub fn resolve_burn_in(atom: &AtomSpecies, laser: &PulsedLaserConfig, sim: &SimConfig) -> Result<u64> {
    let burn_in = sim.burn_in_pulses.unwrap_or_else(|| auto_burn_in(atom, laser));
    if burn_in >= sim.n_pulses {
        return Err(ValidationErrors(vec![Violation::new(
            "burn_in_pulses",
            burn_in,
            format!("automatic burn-in exceeds n_pulses = {}", sim.n_pulses),
        )])
        .into());
    }
    Ok(burn_in)
}

struct Runner<'a> {
    kernel: PulseKernel,
    omega: Vec3,
    dt: f64,
    lifetime: f64,
    fast: Option<PulsePropagator>,
    rng: &'a mut SimRng,
    x: Vec3,
    v: Vec3,
    pulse: u64,
    scatters: u64,
    recoil_dv: Vec3,
}

impl Runner<'_> {
    #[inline(always)]
    fn advance(&mut self, dt_full: bool, dt: f64) {
        match (&self.fast, dt_full) {
            (Some(p), true) => p.advance(&mut self.x, &mut self.v),
            _ => {
                for i in 0..3 {
                    propagator::advance_axis(&mut self.x[i], &mut self.v[i], self.omega[i], dt);
                }
            }
        }
    }

    /// `count` pulses with immediate emission. Returns Σv² and Σ(ωx)² per
    /// axis over the pulse-start states when `ACC`.
    #[inline(never)]
    fn pulses_immediate<const ACC: bool>(&mut self, count: u64) -> Result<(Vec3, Vec3)> {
        let mut sv = [0.0; 3];
        let mut sx = [0.0; 3];
        let k = self.kernel;
        let omega = self.omega;
        let (mut x, mut v) = (self.x, self.v);
        let mut scatters = 0u64;
        let mut emitted = [0.0; 3];
        let rng = &mut *self.rng;
        let fast = self.fast;
        let mut result = Ok(());
        for n in 0..count {
            if ACC {
                for i in 0..3 {
                    sv[i] += v[i] * v[i];
                    let wx = omega[i] * x[i];
                    sx[i] += wx * wx;
                }
            }
            let vb = dot(&v, &k.beam);
            if !vb.is_finite() {
                result = Err(Error::NonFiniteState { pulse: self.pulse + n });
                break;
            }
            if k.absorbs(rng.random::<f64>(), vb) {
                let u = isotropic_unit_vector(rng);
                for i in 0..3 {
                    v[i] += k.recoil * (k.beam[i] + u[i]);
                    emitted[i] += u[i];
                }
                scatters += 1;
            }
            match &fast {
                Some(p) => p.advance(&mut x, &mut v),
                None => {
                    for i in 0..3 {
                        propagator::advance_axis(&mut x[i], &mut v[i], omega[i], self.dt);
                    }
                }
            }
        }
        self.x = x;
        self.v = v;
        for i in 0..3 {
            self.recoil_dv[i] += k.recoil * (scatters as f64 * k.beam[i] + emitted[i]);
        }
        self.scatters += scatters;
        if let Err(e) = result {
            if let Error::NonFiniteState { pulse } = e {
                self.pulse = pulse;
            }
            return Err(e);
        }
        self.pulse += count;
        Ok((sv, sx))
    }

    /// As [`Self::pulses_immediate`] but emission follows an exponential delay.
    /// Delays beyond one period are truncated to the period.
    fn pulses_sampled<const ACC: bool>(&mut self, count: u64) -> Result<(Vec3, Vec3)> {
        let mut sv = [0.0; 3];
        let mut sx = [0.0; 3];
        let k = self.kernel;
        for _ in 0..count {
            if ACC {
                for i in 0..3 {
                    sv[i] += self.v[i] * self.v[i];
                    let wx = self.omega[i] * self.x[i];
                    sx[i] += wx * wx;
                }
            }
            let vb = dot(&self.v, &k.beam);
            if !vb.is_finite() {
                return Err(Error::NonFiniteState { pulse: self.pulse });
            }
            if k.absorbs(self.rng.random::<f64>(), vb) {
                let u: f64 = self.rng.random();
                let delay = (-(1.0 - u).ln() * self.lifetime).min(self.dt);
                k.absorb(&mut self.v);
                self.advance(false, delay);
                let mid = self.v;
                k.emit(&mut self.v, self.rng);
                for i in 0..3 {
                    // free evolution between the kicks is not recoil
                    self.recoil_dv[i] += (self.v[i] - mid[i]) + k.recoil * k.beam[i];
                }
                self.advance(false, self.dt - delay);
                self.scatters += 1;
            } else {
                self.advance(true, self.dt);
            }
            self.pulse += 1;
        }
        Ok((sv, sx))
    }

    fn pulses(&mut self, mode: EmissionDelayMode, count: u64, acc: bool) -> Result<(Vec3, Vec3)> {
        match (mode, acc) {
            (EmissionDelayMode::Immediate, true) => self.pulses_immediate::<true>(count),
            (EmissionDelayMode::Immediate, false) => self.pulses_immediate::<false>(count),
            (EmissionDelayMode::Sampled, true) => self.pulses_sampled::<true>(count),
            (EmissionDelayMode::Sampled, false) => self.pulses_sampled::<false>(count),
        }
    }

    fn state(&self) -> IonState {
        IonState {
            position: self.x,
            velocity: self.v,
            scatter_count: self.scatters,
            time: self.pulse as f64 * self.dt,
        }
    }

    fn sample(&self) -> TrajectorySample {
        TrajectorySample {
            pulse_index: self.pulse,
            time: self.pulse as f64 * self.dt,
            position: self.x,
            velocity: self.v,
            scatters: self.scatters,
        }
    }
}

/// Simulates one trajectory.
///
/// After the burn-in every pulse-start state contributes one energy sample
/// per axis; the temperature of an axis is ⟨E_axis⟩/k_B with a block-averaged
/// standard error.
pub fn run(
    atom: &AtomSpecies,
    trap: &TrapConfig,
    laser: &PulsedLaserConfig,
    sim: &SimConfig,
) -> Result<RunOutput> {
    validate_all(atom, trap, laser, sim)?;
    let burn_in = resolve_burn_in(atom, laser, sim)?;
    let mut rng = SimRng::seed_from_u64(sim.seed);
    let start = initial_state(&sim.initial, atom, trap, &mut rng);
    let dt = 1.0 / laser.rep_rate;

    let mut runner = Runner {
        kernel: PulseKernel::new(atom, laser),
        omega: trap.omega,
        dt,
        lifetime: atom.lifetime,
        fast: PulsePropagator::new(trap, dt),
        rng: &mut rng,
        x: start.position,
        v: start.velocity,
        pulse: 0,
        scatters: 0,
        recoil_dv: [0.0; 3],
    };

    let n = sim.n_pulses;
    let sampled_pulses = n - burn_in;
    let mut acc = stats::BlockAccumulator::new(sampled_pulses, sim.blocks);
    let stride = sim.record_stride;
    let mut next_record = if stride > 0 { 0 } else { u64::MAX };
    let heating = sim.background_heating > 0.0;
    let mut next_heat = if heating { HEATING_STRIDE } else { u64::MAX };
    let mut trajectory = Vec::new();
    let mut scatters_at_burn_in = if burn_in == 0 { Some(0) } else { None };
    let half_m = 0.5 * atom.mass;

    while runner.pulse < n {
        let p = runner.pulse;
        if p == next_record {
            trajectory.push(runner.sample());
            next_record = next_record.saturating_add(stride);
        }
        if p == next_heat {
            let mut s = runner.state();
            background_heating_kick(
                &mut s,
                atom.mass,
                sim.background_heating,
                HEATING_STRIDE as f64 * dt,
                runner.rng,
            );
            runner.v = s.velocity;
            next_heat += HEATING_STRIDE;
        }
        let sampling = p >= burn_in;
        let mut end = n.min(next_record).min(next_heat);
        if sampling {
            end = end.min(p.saturating_add(acc.room()));
        } else {
            end = end.min(burn_in);
        }
        let (sv, sx) = runner.pulses(sim.emission_delay_mode, end - p, sampling)?;
        if sampling {
            let kin = sv.map(|s| half_m * s);
            let pot = sx.map(|s| half_m * s);
            if kin.iter().chain(&pot).any(|e| !e.is_finite()) {
                return Err(Error::NonFiniteState { pulse: runner.pulse });
            }
            acc.add(&kin, &pot, end - p);
        }
        if runner.pulse == burn_in {
            scatters_at_burn_in = Some(runner.scatters);
        }
    }
    if stride > 0 {
        trajectory.push(runner.sample());
    }

    let energies = acc.finish();
    let stats = TrajectoryStats {
        burn_in_pulses: burn_in,
        samples: acc.samples(),
        mean_energy: energies.temperature.map(|t| t.mean * K_B),
        energies,
        total_scatters: runner.scatters,
        sampled_scatters: runner.scatters - scatters_at_burn_in.unwrap_or(0),
        sampled_time: sampled_pulses as f64 * dt,
        recoil_impulse: runner.recoil_dv.map(|d| d * atom.mass),
    };
    let final_state = runner.state();
    Ok(RunOutput {
        stats,
        trajectory,
        final_state,
    })
}
