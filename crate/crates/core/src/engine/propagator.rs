//! Exact free evolution in the harmonic trap.
//!
//! A rotation of phase space by φ = ωΔt is applied as three shears
//! (x += a·v, v −= c·x, x += a·v with a = tan(φ/2)/ω, c = ω·sin φ). Each
//! shear has unit determinant, so the rounded map is exactly area-preserving
//! and conserves a quadratic form within rounding of the true energy. Unlike
//! a rounded rotation matrix, repeated application cannot drift secularly.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::IonState;
use crate::model::{TrapConfig, Vec3};

#[derive(Debug, Clone, Copy)]
struct Shear {
    a: f64,
    c: f64,
}

impl Shear {
    /// |phase| must not exceed π/2.
    fn new(omega: f64, phase: f64) -> Self {
        Shear {
            a: (0.5 * phase).tan() / omega,
            c: omega * phase.sin(),
        }
    }

    #[inline(always)]
    fn apply(&self, x: &mut f64, v: &mut f64) {
        *x += self.a * *v;
        *v -= self.c * *x;
        *x += self.a * *v;
    }
}

/// Specialised propagator for intervals below a quarter period on every axis.
#[derive(Debug, Clone, Copy)]
pub struct PulsePropagator {
    shear: [Shear; 3],
}

impl PulsePropagator {
    /// `None` when some axis turns by more than π/2 in `dt`.
    pub fn new(trap: &TrapConfig, dt: f64) -> Option<Self> {
        if trap.omega.iter().any(|w| w * dt > FRAC_PI_2) {
            return None;
        }
        Some(PulsePropagator {
            shear: trap.omega.map(|w| Shear::new(w, w * dt)),
        })
    }

    #[inline(always)]
    pub fn advance(&self, x: &mut Vec3, v: &mut Vec3) {
        self.shear[0].apply(&mut x[0], &mut v[0]);
        self.shear[1].apply(&mut x[1], &mut v[1]);
        self.shear[2].apply(&mut x[2], &mut v[2]);
    }
}

/// Exact rotation of one axis by `omega·dt`, split into steps of at most π/2.
#[inline]
pub fn advance_axis(x: &mut f64, v: &mut f64, omega: f64, dt: f64) {
    let phase = (omega * dt).rem_euclid(TAU);
    if phase == 0.0 {
        return;
    }
    let n = (phase / FRAC_PI_2).ceil().max(1.0) as usize;
    let shear = Shear::new(omega, phase / n as f64);
    for _ in 0..n {
        shear.apply(x, v);
    }
}

/// Free secular motion for `dt` seconds. Energy per axis is conserved to
/// rounding error.
pub fn harmonic_advance(mut state: IonState, trap: &TrapConfig, dt: f64) -> IonState {
    for i in 0..3 {
        advance_axis(&mut state.position[i], &mut state.velocity[i], trap.omega[i], dt);
    }
    state.time += dt;
    state
}

/// `½mv² + ½mω²x²` per axis.
pub fn axis_energies(state: &IonState, trap: &TrapConfig, mass: f64) -> Vec3 {
    [0, 1, 2].map(|i| {
        let v = state.velocity[i];
        let wx = trap.omega[i] * state.position[i];
        0.5 * mass * (v * v + wx * wx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use proptest::prelude::*;

    fn trap() -> TrapConfig {
        TrapConfig::cadmium_default()
    }

    fn state(x: Vec3, v: Vec3) -> IonState {
        IonState {
            position: x,
            velocity: v,
            ..IonState::default()
        }
    }

    #[test]
    fn full_period_is_identity() {
        let t = trap();
        for axis in 0..3 {
            let w = t.omega[axis];
            let s0 = state([1e-6, -2e-6, 0.5e-6], [3.0, 1.0, -2.0]);
            let s1 = harmonic_advance(s0, &t, TWO_PI / w);
            assert!((s1.position[axis] - s0.position[axis]).abs() < 1e-20);
            assert!((s1.velocity[axis] - s0.velocity[axis]).abs() < 1e-13);
        }
    }

    #[test]
    fn quarter_period() {
        let t = TrapConfig::isotropic(TWO_PI * 0.85e6, TWO_PI * 35.8e6);
        let w = t.omega[0];
        let x0 = 2e-6;
        let s = harmonic_advance(state([x0; 3], [0.0; 3]), &t, std::f64::consts::PI / (2.0 * w));
        for i in 0..3 {
            assert!(s.position[i].abs() < 1e-15 * x0, "{}", s.position[i]);
            assert!((s.velocity[i] + w * x0).abs() < 1e-12 * w * x0);
        }
    }

    #[test]
    fn matches_closed_form_rotation() {
        let t = trap();
        let dt = 0.3e-6;
        let s0 = state([1e-6, 0.0, -1e-6], [0.5, 2.0, 1.0]);
        let s1 = harmonic_advance(s0, &t, dt);
        for i in 0..3 {
            let (w, x, v) = (t.omega[i], s0.position[i], s0.velocity[i]);
            let (sn, cs) = (w * dt).sin_cos();
            let xe = x * cs + v / w * sn;
            let ve = v * cs - x * w * sn;
            assert!((s1.position[i] - xe).abs() < 1e-14 * (x.abs() + v.abs() / w));
            assert!((s1.velocity[i] - ve).abs() < 1e-14 * (v.abs() + w * x.abs()));
        }
        assert_eq!(s1.time, dt);
    }

    #[test]
    fn pulse_propagator_agrees_with_general() {
        let t = trap();
        let dt = 1.0 / 80e6;
        let p = PulsePropagator::new(&t, dt).unwrap();
        let s0 = state([1e-6, 2e-6, -1e-6], [0.5, -2.0, 1.0]);
        let mut x = s0.position;
        let mut v = s0.velocity;
        p.advance(&mut x, &mut v);
        let s1 = harmonic_advance(s0, &t, dt);
        assert_eq!(x, s1.position);
        assert_eq!(v, s1.velocity);
        assert!(PulsePropagator::new(&t, 1e-6).is_none());
    }

    proptest! {
        #[test]
        fn energy_conserved_for_any_dt(
            dt in 0.0..1e-3f64,
            x in prop::array::uniform3(-1e-5..1e-5f64),
            v in prop::array::uniform3(-50.0..50.0f64),
        ) {
            let t = trap();
            let m = 1.9e-25;
            let s0 = state(x, v);
            let e0 = axis_energies(&s0, &t, m);
            let e1 = axis_energies(&harmonic_advance(s0, &t, dt), &t, m);
            for i in 0..3 {
                prop_assume!(e0[i] > 0.0);
                prop_assert!(((e1[i] - e0[i]) / e0[i]).abs() < 1e-12);
            }
        }
    }
}
