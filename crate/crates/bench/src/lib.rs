//! Fixtures shared by the benchmarks.

use pulsecool::{AtomSpecies, PulsedLaserConfig, TrapConfig};

/// Cd⁺ defaults with a π pulse at τδ/2 = −0.8168.
pub fn cadmium_setup() -> (AtomSpecies, TrapConfig, PulsedLaserConfig) {
    let base = PulsedLaserConfig::cadmium_default();
    let laser = PulsedLaserConfig {
        detuning: PulsedLaserConfig::detuning_for_half_tau_delta(base.tau, -0.8168),
        ..base
    };
    (AtomSpecies::cadmium_114(), TrapConfig::cadmium_default(), laser)
}
