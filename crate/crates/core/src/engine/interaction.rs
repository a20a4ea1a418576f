//! Stochastic photon absorption and emission for one pulse.

use rand::Rng;
use rand_distr::StandardNormal;

use super::IonState;
use crate::constants::K_B;
use crate::model::{dot, AtomSpecies, PulsedLaserConfig, Vec3};
use crate::theory::sech2;

/// Uniform direction on the unit sphere.
///
/// Marsaglia's disc method: the resulting z is uniform on [−1, 1] and the
/// azimuth uniform on [0, 2π), without evaluating any trigonometric function.
#[inline]
pub fn isotropic_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let a: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let b: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let s = a * a + b * b;
        if s < 1.0 {
            let f = 2.0 * (1.0 - s).sqrt();
            return [a * f, b * f, 1.0 - 2.0 * s];
        }
    }
}

/// Per-run constants of the absorption model.
#[derive(Debug, Clone, Copy)]
pub struct PulseKernel {
    /// sin²(θ/2)
    pub resonant: f64,
    pub half_tau: f64,
    pub detuning: f64,
    pub k: f64,
    pub beam: Vec3,
    /// ħk/m
    pub recoil: f64,
    // first-order expansion of the excitation probability about v = 0
    p0: f64,
    p1: f64,
    /// dy/dv_beam for y = τ(δ − k·v_beam)/2
    dy: f64,
}

/// Absolute slack on the squeeze bounds; far above the rounding error of
/// [`PulseKernel::excitation`].
const SQUEEZE_MARGIN: f64 = 1e-12;

impl PulseKernel {
    pub fn new(atom: &AtomSpecies, laser: &PulsedLaserConfig) -> Self {
        let resonant = laser.resonant_excitation();
        let half_tau = 0.5 * laser.tau;
        let k = atom.wavenumber();
        let y0 = half_tau * laser.detuning;
        let g0 = sech2(y0);
        PulseKernel {
            resonant,
            half_tau,
            detuning: laser.detuning,
            k,
            beam: laser.beam_dir,
            recoil: atom.recoil_velocity(),
            p0: resonant * g0,
            p1: resonant * -2.0 * g0 * y0.tanh(),
            dy: -half_tau * k,
        }
    }

    #[inline(always)]
    pub fn excitation(&self, v_beam: f64) -> f64 {
        self.resonant * sech2(self.half_tau * (self.detuning - self.k * v_beam))
    }

    /// Same decision as `u < self.excitation(v_beam)`.
    ///
    /// |d²sech²(y)/dy²| ≤ 2, so the excitation probability lies within
    /// `resonant·d²` of its tangent at v = 0, d being the shift in y. The
    /// exact value is only evaluated when `u` falls inside that band.
    #[inline(always)]
    pub fn absorbs(&self, u: f64, v_beam: f64) -> bool {
        let d = self.dy * v_beam;
        let approx = self.p0 + self.p1 * d;
        let band = self.resonant * d * d + SQUEEZE_MARGIN;
        if u < approx - band {
            true
        } else if u >= approx + band {
            false
        } else {
            u < self.excitation(v_beam)
        }
    }

    /// Velocity kick of the absorbed photon.
    #[inline(always)]
    pub fn absorb(&self, v: &mut Vec3) {
        for i in 0..3 {
            v[i] += self.recoil * self.beam[i];
        }
    }

    /// Velocity kick of a spontaneously emitted photon.
    #[inline(always)]
    pub fn emit<R: Rng + ?Sized>(&self, v: &mut Vec3, rng: &mut R) {
        let u = isotropic_unit_vector(rng);
        for i in 0..3 {
            v[i] += self.recoil * u[i];
        }
    }
}

/// One pulse with emission at the pulse time. Returns whether a photon was absorbed.
pub fn pulse_interaction<R: Rng + ?Sized>(
    state: &mut IonState,
    atom: &AtomSpecies,
    laser: &PulsedLaserConfig,
    rng: &mut R,
) -> bool {
    let kernel = PulseKernel::new(atom, laser);
    if kernel.absorbs(rng.random::<f64>(), dot(&state.velocity, &kernel.beam)) {
        kernel.absorb(&mut state.velocity);
        kernel.emit(&mut state.velocity, rng);
        state.scatter_count += 1;
        true
    } else {
        false
    }
}

/// Zero-mean Gaussian velocity kick per axis with variance `k_B·rate·dt/m`,
/// heating each axis at `rate` kelvin per second on average.
pub fn background_heating_kick<R: Rng + ?Sized>(
    state: &mut IonState,
    mass: f64,
    rate: f64,
    dt: f64,
    rng: &mut R,
) {
    if rate == 0.0 {
        return;
    }
    let sigma = (K_B * rate * dt / mass).sqrt();
    for v in state.velocity.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *v += sigma * n;
    }
}
