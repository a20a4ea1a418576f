//! Acceptance suite: one PASS/FAIL line per criterion, details indented
//! below it. Pass criterion numbers as arguments to run a subset.
//! With `--strict` (or `ACCEPTANCE_STRICT=1`) a failed criterion makes the
//! process exit nonzero; otherwise the verdicts are only printed, so a
//! workspace test run still reaches the remaining test targets.

use std::time::Instant;

use pulsecool::constants::{AMU, EV, K_B, TWO_PI};
use pulsecool::engine::{self, axis_energies, trajectory_table, IonState, PulsePropagator, SimRng};
use pulsecool::harness::{self, fit_sech2, LineshapeFit, ScanSpec};
use pulsecool::imaging::{self, ImagingConfig, WaistMode};
use pulsecool::theory;
use pulsecool::{AtomSpecies, InitialCondition, PulsedLaserConfig, SimConfig, TrapConfig};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

// 1
const C1_HALF_TAU_DELTA: [f64; 3] = [-0.5, -0.8168, -1.5];
const C1_EXPECTED_K: [f64; 3] = [7.34, 5.03, 3.75];
const C1_REL_TOL: f64 = 0.10;
const C1_MIN_SAMPLED_PULSES: u64 = 30_000_000;
const C1_SAMPLED_PULSES: u64 = 1_500_000_000;
const C1_LIGHT_MASS_U: f64 = 2.0;
const C1_LIGHT_PULSES: u64 = 300_000_000;
// 2
const C2_FLOOR_K: f64 = 3.392;
const C2_FLOOR_TOL: f64 = 5e-4;
const C2_OBSERVED_MIN_K: f64 = 1.0;
// 3
const C3_FWHM_HZ: f64 = 431.6e9;
const C3_FWHM_TOL: f64 = 0.01;
const C3_REPORTED_FWHM_HZ: f64 = 420e9;
const C3_REPORTED_TOL: f64 = 0.05;
const C3_NOISE: f64 = 0.05;
const C3_NOISE_SEEDS: usize = 100;
const C3_TAU_TOL: f64 = 0.02;
const C3_SIGMA_BOUND: f64 = 4.0;
const C3_PULSES_PER_POINT: u64 = 2_000_000;
// 4
const C4_BETA_OVER_M: f64 = 1.98;
const C4_BETA_TOL: f64 = 0.005;
const C4_REPORTED_BETA: f64 = 2.0;
const C4_REPORTED_TOL: f64 = 0.05;
const C4_REL_TOL: f64 = 0.15;
const C4_START_K: f64 = 2000.0;
const C4_SECONDS: f64 = 5.0;
const C4_TRIALS: u64 = 3;
// 5
const C5_REL_TOL: f64 = 0.20;
const C5_TARGET_K: f64 = 10.0;
const C5_SECONDS: f64 = 10.0;
const C5_TRIALS: u64 = 3;
// light-mass ensembles backing 4 and 5
const ENSEMBLE_MASS_U: f64 = 2.0;
const ENSEMBLE_TRAJECTORIES: u64 = 40;
// 6
const C6_DERIVED: f64 = 0.0188;
const C6_DERIVED_TOL: f64 = 0.005;
const C6_REPORTED: f64 = 0.02;
const C6_REPORTED_TOL: f64 = 0.10;
// 7
const C7_DERIVED: f64 = 0.0336;
const C7_DERIVED_TOL: f64 = 0.005;
const C7_REPORTED: f64 = 0.035;
const C7_REPORTED_TOL: f64 = 0.05;
// 8
const C8_DERIVED: f64 = 1.04e10;
const C8_DERIVED_TOL: f64 = 0.005;
const C8_REPORTED: f64 = 1e10;
const C8_REPORTED_TOL: f64 = 0.10;
// 9
const C9_TEMPERATURES: [f64; 4] = [2.0, 5.0, 10.0, 30.0];
const C9_SEEDS: u64 = 50;
const C9_SHOT_TOL: f64 = 0.10;
const C9_MEDIAN_TOL: f64 = 0.05;
// 10
const C10_GRID: usize = 100;
const C10_IDENTITY_TOL: f64 = 1e-9;
const C10_DERIVATIVE_TOL: f64 = 1e-6;
const C10_STEPS: u64 = 1_000_000_000;
const C10_STEP_TOL: f64 = 1e-12;
const C10_DRIFT_TOL: f64 = 1e-9;

struct Suite {
    failed: Vec<u32>,
    ran: usize,
}

impl Suite {
    fn verdict(&mut self, id: u32, pass: bool, title: &str, notes: &[String], started: Instant) {
        self.ran += 1;
        if !pass {
            self.failed.push(id);
        }
        println!(
            "{} [{id:>2}] {title} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        for n in notes {
            println!("          {n}");
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn cd() -> AtomSpecies {
    AtomSpecies::cadmium_114()
}

fn laser_at(x: f64, theta: f64) -> PulsedLaserConfig {
    let base = PulsedLaserConfig::cadmium_default();
    PulsedLaserConfig {
        detuning: PulsedLaserConfig::detuning_for_half_tau_delta(base.tau, x),
        rabi_angle: theta,
        ..base
    }
}

/// sin²(θ/2) = 0.2 at tanh²(τδ/2) = 1/3.
fn weak_optimal_laser() -> PulsedLaserConfig {
    laser_at(-(1.0 / 3f64.sqrt()).atanh(), PulsedLaserConfig::rabi_angle_for(0.2))
}

fn criterion_1(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = cd();
    let trap = TrapConfig::cadmium_default();
    let base = laser_at(-0.5, std::f64::consts::PI);
    let detunings = ScanSpec::half_tau_grid(base.tau, &C1_HALF_TAU_DELTA);
    let mut notes = Vec::new();
    let mut pass = C1_SAMPLED_PULSES >= C1_MIN_SAMPLED_PULSES;
    for (i, &d) in detunings.iter().enumerate() {
        let laser = PulsedLaserConfig { detuning: d, ..base.clone() };
        let burn = engine::auto_burn_in(&atom, &laser);
        let t_theory = theory::equilibrium_temperature(laser.tau, d).unwrap();
        let sim = SimConfig {
            seed: 2024,
            initial: InitialCondition::Thermal { temperature: t_theory },
            ..SimConfig::default()
        };
        let spec = ScanSpec {
            detunings: vec![d],
            pulses: burn + C1_SAMPLED_PULSES,
            ..ScanSpec::default()
        };
        let p = &harness::temperature_scan(&atom, &trap, &laser, &sim, &spec).unwrap().points[0];
        let ok = p.error.is_none() && rel(p.t_mc, t_theory) <= C1_REL_TOL && rel(t_theory, C1_EXPECTED_K[i]) < 0.002;
        pass &= ok;
        let proj: Vec<f64> = (0..3)
            .map(|a| theory::projected_equilibrium_temperature(&laser, a).unwrap())
            .collect();
        let proj_mean = proj.iter().sum::<f64>() / 3.0;
        notes.push(format!(
            "τδ/2 = {:>7}: T_mc = {:.3} ± {:.3} K, closed form {:.3} K, ratio {:.3} (tol {:.0}%) {}",
            C1_HALF_TAU_DELTA[i],
            p.t_mc,
            p.t_mc_err,
            t_theory,
            p.t_mc / t_theory,
            100.0 * C1_REL_TOL,
            if ok { "ok" } else { "OUT" }
        ));
        notes.push(format!(
            "    per axis {:.3} / {:.3} / {:.3} K; single-beam oracle {:.3} K (MC/oracle {:.3}); {} burn-in + {} sampled pulses",
            p.t_axes[0],
            p.t_axes[1],
            p.t_axes[2],
            proj_mean,
            p.t_mc / proj_mean,
            burn,
            C1_SAMPLED_PULSES
        ));
    }
    // same physics at a light mass: faster damping, far more independent samples
    let light = AtomSpecies {
        mass: C1_LIGHT_MASS_U * AMU,
        ..cd()
    };
    for (i, &d) in detunings.iter().enumerate() {
        let laser = PulsedLaserConfig { detuning: d, ..base.clone() };
        let proj = theory::projected_equilibrium_temperature(&laser, 0).unwrap();
        let sim = SimConfig {
            seed: 77,
            n_pulses: C1_LIGHT_PULSES,
            initial: InitialCondition::Thermal { temperature: proj },
            ..SimConfig::default()
        };
        let out = engine::run(&light, &trap, &laser, &sim).unwrap();
        let t = out.stats.energies.mean_temperature;
        notes.push(format!(
            "{} u check, τδ/2 = {:>7}: T_mc = {:.3} ± {:.3} K vs single-beam oracle {:.3} K ({:+.1}%), closed form {:.3} K ({:+.1}%)",
            C1_LIGHT_MASS_U,
            C1_HALF_TAU_DELTA[i],
            t.mean,
            t.stderr,
            proj,
            100.0 * (t.mean / proj - 1.0),
            theory::equilibrium_temperature(laser.tau, d).unwrap(),
            100.0 * (t.mean / theory::equilibrium_temperature(laser.tau, d).unwrap() - 1.0),
        ));
    }
    notes.push("one beam along (1,1,1)/√3 damps each axis at 1/√3 of the closed-form friction, and a pulse".into());
    notes.push("absorbs at most one photon (variance P(1−P)); the exact ratio to the closed form is √3(2−P)/2".into());
    s.verdict(1, pass, "equilibrium temperature vs closed form within 10%", &notes, t0);
}

fn criterion_2(s: &mut Suite) {
    let t0 = Instant::now();
    let tau = 1.3e-12;
    let floor = theory::temperature_floor(tau);
    let far = theory::equilibrium_temperature(tau, -TWO_PI * 50e12).unwrap();
    let monotone = (1..200).all(|i| {
        let a = theory::equilibrium_temperature(tau, -TWO_PI * 10e9 * i as f64).unwrap();
        let b = theory::equilibrium_temperature(tau, -TWO_PI * 10e9 * (i + 1) as f64).unwrap();
        b < a && b > floor
    });
    let pass = rel(floor, C2_FLOOR_K) < C2_FLOOR_TOL && rel(far, floor) < 1e-12 && monotone;
    let notes = vec![
        format!("floor ħ/(√3 τ k_B) = {floor:.5} K; T at δ/2π = −50 THz: {far:.6} K; decreasing towards the floor: {monotone}"),
        format!(
            "the measured minimum near {C2_OBSERVED_MIN_K} K lies below this floor; the curve is reproduced as is, not tuned to it"
        ),
    ];
    s.verdict(2, pass, "temperature floor 3.392 K at τ = 1.3 ps", &notes, t0);
}

fn criterion_3(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = cd();
    let laser = PulsedLaserConfig::cadmium_default();
    let grid = ScanSpec::linear_grid(-TWO_PI * 600e9, TWO_PI * 600e9, 25);
    let mut notes = Vec::new();
    let mut worst_sigma: f64 = 0.0;
    let mut fit: Option<LineshapeFit> = None;
    for (k, temp) in [1.0, 5.0].into_iter().enumerate() {
        let spec = ScanSpec {
            detunings: grid.clone(),
            pulses: C3_PULSES_PER_POINT,
            lineshape_temperature: temp,
            ..ScanSpec::default()
        };
        let scan = harness::lineshape_scan(&atom, &laser, 31 + k as u64, &spec).unwrap();
        for p in &scan.points {
            worst_sigma = worst_sigma.max((p.rate_mc - p.rate_theory).abs() / p.rate_mc_err.max(1e-300));
        }
        if k == 0 {
            fit = fit_sech2(&scan.mc_points()).ok();
        }
    }
    let Some(f) = fit else {
        s.verdict(3, false, "lineshape width", &["sech² fit to the 1 K lineshape failed".into()], t0);
        return;
    };
    let fwhm_hz = f.fwhm / TWO_PI;
    notes.push(format!(
        "1 K lineshape fit: FWHM/2π = {:.2} GHz (target {:.1} GHz, tol {:.0}%), τ = {:.4} ps",
        fwhm_hz / 1e9,
        C3_FWHM_HZ / 1e9,
        100.0 * C3_FWHM_TOL,
        f.tau * 1e12
    ));
    notes.push(format!(
        "vs the reported ~{:.0} GHz: {:+.1}% (tol {:.0}%)",
        C3_REPORTED_FWHM_HZ / 1e9,
        100.0 * (fwhm_hz / C3_REPORTED_FWHM_HZ - 1.0),
        100.0 * C3_REPORTED_TOL
    ));
    notes.push(format!(
        "largest MC-theory deviation over 1 K and 5 K scans: {worst_sigma:.2}σ (bound {C3_SIGMA_BOUND}σ)"
    ));
    let truth = LineshapeFit {
        amplitude: 1.6e7,
        tau: 1.3e-12,
        center_offset: 0.0,
        residual_norm: 0.0,
        fwhm: 0.0,
        amplitude_err: 0.0,
        tau_err: 0.0,
        center_offset_err: 0.0,
    };
    let mut rng = SimRng::seed_from_u64(3);
    let mut taus = Vec::new();
    let mut fails = 0;
    for _ in 0..C3_NOISE_SEEDS {
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| {
                let n: f64 = StandardNormal.sample(&mut rng);
                (d, truth.eval(d) * (1.0 + C3_NOISE * n))
            })
            .collect();
        match fit_sech2(&pts) {
            Ok(f) => taus.push(f.tau / truth.tau),
            Err(_) => fails += 1,
        }
    }
    let med = median(taus.clone());
    let med_abs = median(taus.iter().map(|t| (t - 1.0).abs()).collect());
    notes.push(format!(
        "5% noise, 25 points, {C3_NOISE_SEEDS} seeds: median τ/τ₀ = {med:.4}, median |error| {:.2}%, {fails} fit failures (tol {:.0}%)",
        100.0 * med_abs,
        100.0 * C3_TAU_TOL
    ));
    let pass = rel(fwhm_hz, C3_FWHM_HZ) <= C3_FWHM_TOL
        && rel(fwhm_hz, C3_REPORTED_FWHM_HZ) <= C3_REPORTED_TOL
        && worst_sigma <= C3_SIGMA_BOUND
        && (med - 1.0).abs() <= C3_TAU_TOL
        && fails == 0;
    s.verdict(3, pass, "lineshape FWHM 2π×431.6 GHz; τ recovery under noise", &notes, t0);
}

/// Summed axis energies every `stride` pulses.
fn energy_trace(
    atom: &AtomSpecies,
    trap: &TrapConfig,
    laser: &PulsedLaserConfig,
    initial: InitialCondition,
    seconds: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let n = (seconds * laser.rep_rate) as u64;
    let sim = SimConfig {
        seed,
        n_pulses: n,
        burn_in_pulses: Some(0),
        initial,
        record_stride: (n / 2000).max(1),
        ..SimConfig::default()
    };
    let out = engine::run(atom, trap, laser, &sim).unwrap();
    let t = out.trajectory.iter().map(|p| p.time).collect();
    let e = out.trajectory.iter().map(|p| p.energy(atom.mass, &trap.omega)).collect();
    (t, e)
}

/// Mean of the traces, sample by sample.
fn mean_trace(traces: &[(Vec<f64>, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
    let n = traces.iter().map(|t| t.1.len()).min().unwrap_or(0);
    let t = traces[0].0[..n].to_vec();
    let e = (0..n)
        .map(|i| traces.iter().map(|tr| tr.1[i]).sum::<f64>() / traces.len() as f64)
        .collect();
    (t, e)
}

/// Ensemble energy decay rate at a light mass, in units of the single-beam oracle.
fn light_ensemble_rate(laser: &PulsedLaserConfig, initial: InitialCondition, e_eq: f64) -> Option<f64> {
    let atom = AtomSpecies {
        mass: ENSEMBLE_MASS_U * AMU,
        ..cd()
    };
    let trap = TrapConfig::cadmium_default();
    let g = theory::projected_energy_damping_rate(&atom, laser, 0);
    let traces: Vec<_> = (0..ENSEMBLE_TRAJECTORIES)
        .map(|seed| energy_trace(&atom, &trap, laser, initial, 6.0 / g, 500 + seed))
        .collect();
    let (t, e) = mean_trace(&traces);
    engine::measure_damping_rate(&t, &e, e_eq).ok().map(|f| f.energy_rate / g)
}

fn criterion_4(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = cd();
    let trap = TrapConfig::cadmium_default();
    let laser = weak_optimal_laser();
    let analytic = theory::linearize_force(&atom, &trap, &laser).cooling_rate(&atom).abs();
    let e_eq: f64 = (0..3)
        .map(|a| K_B * theory::projected_equilibrium_temperature(&laser, a).unwrap())
        .sum();
    let start = InitialCondition::Thermal { temperature: C4_START_K };
    let traces: Vec<_> = (0..C4_TRIALS)
        .map(|seed| energy_trace(&atom, &trap, &laser, start, C4_SECONDS, 100 + seed))
        .collect();
    let (t, e) = mean_trace(&traces);
    let fit = engine::measure_damping_rate(&t, &e, e_eq);
    let mc = fit.as_ref().map(|f| f.energy_rate).unwrap_or(f64::NAN);
    let projected = theory::projected_energy_damping_rate(&atom, &laser, 0);
    let mut notes = vec![format!(
        "analytic β/m = {analytic:.4} s⁻¹ (target {C4_BETA_OVER_M}, ~{C4_REPORTED_BETA} reported); MC energy decay {mc:.4} s⁻¹, ratio {:.3} (tol {:.0}%)",
        mc / analytic,
        100.0 * C4_REL_TOL
    )];
    match &fit {
        Ok(f) => notes.push(format!(
            "    mean of {C4_TRIALS} trajectories from {C4_START_K} K: {:.1} e-foldings fitted, 95% CI ±{:.4} s⁻¹",
            f.e_foldings, f.ci95
        )),
        Err(e) => notes.push(format!("    fit failed: {e}")),
    }
    notes.push(format!(
        "single-beam oracle |β_beam|/(3m) = {projected:.4} s⁻¹, MC/oracle {:.3}; {ENSEMBLE_MASS_U} u ensemble of {ENSEMBLE_TRAJECTORIES}: MC/oracle {:.3}",
        mc / projected,
        light_ensemble_rate(&laser, start, e_eq).unwrap_or(f64::NAN)
    ));
    let pass = rel(analytic, C4_BETA_OVER_M) <= C4_BETA_TOL
        && rel(analytic, C4_REPORTED_BETA) <= C4_REPORTED_TOL
        && rel(mc, analytic) <= C4_REL_TOL;
    s.verdict(4, pass, "cooling rate β/m = 1.98 s⁻¹, MC decay within 15%", &notes, t0);
}

fn criterion_5(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = cd();
    let trap = TrapConfig::cadmium_default();
    let laser = weak_optimal_laser();
    let beta_m = theory::linearize_force(&atom, &trap, &laser).cooling_rate(&atom).abs();
    let predicted_rate = 2.0 * beta_m;
    let e_f = 3.0 * K_B * C5_TARGET_K;
    let predicted_time = (EV / e_f).ln() / predicted_rate;
    let e_eq: f64 = (0..3)
        .map(|a| K_B * theory::projected_equilibrium_temperature(&laser, a).unwrap())
        .sum();
    let start = InitialCondition::KineticEnergy { energy: EV };
    let traces: Vec<_> = (0..C5_TRIALS)
        .map(|seed| energy_trace(&atom, &trap, &laser, start, C5_SECONDS, 200 + seed))
        .collect();
    let (t, e) = mean_trace(&traces);
    let rate = engine::measure_damping_rate(&t, &e, e_eq)
        .map(|f| f.energy_rate)
        .unwrap_or(f64::NAN);
    let times: Vec<f64> = traces
        .iter()
        .filter_map(|(t, e)| engine::time_to_temperature(t, e, 3.0, C5_TARGET_K))
        .collect();
    let time = times.iter().sum::<f64>() / times.len().max(1) as f64;
    let t_proj = e_eq / (3.0 * K_B);
    let mut notes = vec![format!(
        "log-energy decay {rate:.4} s⁻¹ vs 2|β|/m = {predicted_rate:.4} s⁻¹, ratio {:.3}; time to {C5_TARGET_K} K {time:.3} s vs {predicted_time:.3} s, ratio {:.3} (tol {:.0}%)",
        rate / predicted_rate,
        time / predicted_time,
        100.0 * C5_REL_TOL
    )];
    notes.push(format!(
        "    {} of {C5_TRIALS} trajectories reached {C5_TARGET_K} K within {C5_SECONDS} s",
        times.len()
    ));
    let oracle_rate = theory::projected_energy_damping_rate(&atom, &laser, 0);
    notes.push(format!(
        "single-beam oracle: energy rate {oracle_rate:.4} s⁻¹ (MC/oracle {:.3}; {ENSEMBLE_MASS_U} u ensemble {:.3}), equilibrium {t_proj:.2} K vs closed form {:.2} K",
        rate / oracle_rate,
        light_ensemble_rate(&laser, start, e_eq).unwrap_or(f64::NAN),
        theory::equilibrium_temperature(laser.tau, laser.detuning).unwrap()
    ));
    notes.push(format!(
        "a bound mode loses energy at its velocity damping rate, not twice it; with a {t_proj:.1} K floor, {C5_TARGET_K} K is reached on fluctuations"
    ));
    let pass = times.len() as u64 == C5_TRIALS
        && rel(rate, predicted_rate) <= C5_REL_TOL
        && rel(time, predicted_time) <= C5_REL_TOL;
    s.verdict(5, pass, "hot capture from 1 eV at 2|β|/m", &notes, t0);
}

fn criterion_6(s: &mut Suite) {
    let t0 = Instant::now();
    let r = theory::residual_excitation(3.146e-9, 80e6);
    let pass = rel(r, C6_DERIVED) <= C6_DERIVED_TOL && rel(r, C6_REPORTED) <= C6_REPORTED_TOL;
    let notes = vec![format!(
        "exp(−12.5 ns/3.146 ns) = {r:.5}; vs 0.0188 {:+.2}%, vs ~2% {:+.1}%",
        100.0 * (r / C6_DERIVED - 1.0),
        100.0 * (r / C6_REPORTED - 1.0)
    )];
    s.verdict(6, pass, "residual excitation 0.0188", &notes, t0);
}

fn criterion_7(s: &mut Suite) {
    let t0 = Instant::now();
    let trap = TrapConfig::isotropic(TWO_PI * 0.85e6, TWO_PI * 35.8e6);
    let r = theory::micromotion_ratio(&trap, 0);
    let pass = rel(r, C7_DERIVED) <= C7_DERIVED_TOL && rel(r, C7_REPORTED) <= C7_REPORTED_TOL;
    let notes = vec![format!(
        "√2·ω/Ω_rf = {r:.5}; vs 0.0336 {:+.2}%, vs 0.035 {:+.1}% (tol {:.0}%)",
        100.0 * (r / C7_DERIVED - 1.0),
        100.0 * (r / C7_REPORTED - 1.0),
        100.0 * C7_REPORTED_TOL
    )];
    s.verdict(7, pass, "micromotion ratio", &notes, t0);
}

fn criterion_8(s: &mut Suite) {
    let t0 = Instant::now();
    let i = theory::power_broadening_intensity(TWO_PI * 36e9, TWO_PI * 50e6, 5000.0);
    let pass = rel(i, C8_DERIVED) <= C8_DERIVED_TOL && rel(i, C8_REPORTED) <= C8_REPORTED_TOL;
    let notes = vec![format!(
        "I = I_s(2Δ_D/γ)² = {i:.4e} W/m²; vs 1.04e10 {:+.2}%, vs 1e10 {:+.1}%",
        100.0 * (i / C8_DERIVED - 1.0),
        100.0 * (i / C8_REPORTED - 1.0)
    )];
    s.verdict(8, pass, "power-broadening intensity", &notes, t0);
}

/// (per-shot worst relative error, median ratio, failures) over the seeds.
fn round_trip(temp: f64, imaging: &ImagingConfig) -> (f64, f64, usize) {
    let atom = cd();
    let trap = TrapConfig::cadmium_default();
    let mut ratios = Vec::new();
    let mut failures = 0;
    for seed in 0..C9_SEEDS {
        let mut rng = SimRng::seed_from_u64(1000 + seed);
        let img = imaging::synthesize_thermal(temp, &atom, &trap, imaging, &mut rng);
        match imaging::temperature_from_image(&img, &atom, &trap, imaging) {
            Ok(r) => ratios.push(r.temperature / temp),
            Err(_) => failures += 1,
        }
    }
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    (worst, median(ratios), failures)
}

fn criterion_9(s: &mut Suite) {
    let t0 = Instant::now();
    let default = ImagingConfig::default();
    let exact = ImagingConfig {
        waist_mode: WaistMode::ModelExact,
        ..ImagingConfig::default()
    };
    let mut pass = true;
    let mut notes = Vec::new();
    for temp in C9_TEMPERATURES {
        let (worst, med, fails) = round_trip(temp, &default);
        let ok = worst <= C9_SHOT_TOL && (med - 1.0).abs() <= C9_MEDIAN_TOL && fails == 0;
        pass &= ok;
        let (xw, xm, xf) = round_trip(temp, &exact);
        notes.push(format!(
            "{temp:>4} K: median ratio {med:.3}, worst shot {:.1}%, {fails} failed {} | model-exact inversion: median {xm:.3}, worst {:.1}%, {xf} failed",
            100.0 * worst,
            if ok { "ok" } else { "OUT" },
            100.0 * xw
        ));
    }
    notes.push(format!(
        "tolerances: {:.0}% per shot, {:.0}% median over {C9_SEEDS} seeds; default inversion applies the standard waist correction",
        100.0 * C9_SHOT_TOL,
        100.0 * C9_MEDIAN_TOL
    ));
    s.verdict(9, pass, "imaging round trip at 2, 5, 10, 30 K", &notes, t0);
}

fn criterion_10(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = cd();
    let trap = TrapConfig::cadmium_default();
    let mut worst_identity: f64 = 0.0;
    let mut worst_derivative: f64 = 0.0;
    for i in 0..C10_GRID {
        let d = -TWO_PI * (5e9 + 1995e9 * i as f64 / (C10_GRID - 1) as f64);
        let laser = PulsedLaserConfig {
            detuning: d,
            ..PulsedLaserConfig::cadmium_default()
        };
        let lin = theory::linearize_force(&atom, &trap, &laser);
        let p = theory::excitation_probability(laser.rabi_angle, laser.tau, d);
        let t = theory::diffusion_power(&atom, &laser, p) / (K_B * lin.cooling_rate(&atom).abs());
        worst_identity = worst_identity.max(rel(t, theory::equilibrium_temperature(laser.tau, d).unwrap()));
        // v scale where kτv/2 ~ 1e-4 keeps truncation far below the tolerance
        let h = 1e-4 * 2.0 / (atom.wavenumber() * laser.tau);
        let fd = (theory::scattering_force(&atom, &laser, h) - theory::scattering_force(&atom, &laser, -h)) / (2.0 * h);
        worst_derivative = worst_derivative.max(rel(fd, lin.beta));
    }
    // phase-space rotation over 1e9 pulse periods
    let dt = 1.0 / 80e6;
    let prop = PulsePropagator::new(&trap, dt).unwrap();
    let mass = atom.mass;
    let mut st = IonState {
        position: [1e-6, -2e-7, 3e-7],
        velocity: [0.3, 0.5, -0.2],
        ..IonState::default()
    };
    let e0 = axis_energies(&st, &trap, mass);
    let mut prev = e0;
    let mut worst_step: f64 = 0.0;
    for step in 1..=C10_STEPS {
        prop.advance(&mut st.position, &mut st.velocity);
        if step % 997 == 0 || step <= 1_000_000 {
            let e = axis_energies(&st, &trap, mass);
            for a in 0..3 {
                worst_step = worst_step.max(rel(e[a], prev[a]) / (if step <= 1_000_000 { 1.0 } else { 997.0 }));
            }
            prev = e;
        }
    }
    let e1 = axis_energies(&st, &trap, mass);
    let drift = (0..3).map(|a| rel(e1[a], e0[a])).fold(0.0, f64::max);
    let pass = worst_identity <= C10_IDENTITY_TOL
        && worst_derivative <= C10_DERIVATIVE_TOL
        && worst_step <= C10_STEP_TOL
        && drift <= C10_DRIFT_TOL;
    let notes = vec![
        format!("friction-diffusion ratio vs closed form, {C10_GRID} red detunings: worst {worst_identity:.2e} (tol {C10_IDENTITY_TOL:.0e})"),
        format!("β vs central difference of the force: worst {worst_derivative:.2e} (tol {C10_DERIVATIVE_TOL:.0e})"),
        format!(
            "propagator, {:.0e} steps: worst per-step energy change {worst_step:.2e} (tol {C10_STEP_TOL:.0e}), net change {drift:.2e} (tol {C10_DRIFT_TOL:.0e})",
            C10_STEPS as f64
        ),
    ];
    s.verdict(10, pass, "algebraic identities and propagator energy", &notes, t0);
}

fn criterion_11(s: &mut Suite) {
    let t0 = Instant::now();
    let atom = AtomSpecies { mass: 2.0 * AMU, ..cd() };
    let trap = TrapConfig::cadmium_default();
    let laser = PulsedLaserConfig::cadmium_default();
    let sim = SimConfig {
        seed: 9,
        n_pulses: 2_000_000,
        burn_in_pulses: Some(500_000),
        record_stride: 5000,
        background_heating: 2.0,
        ..SimConfig::default()
    };
    let csv = |s: &SimConfig| {
        let out = engine::run(&atom, &trap, &laser, s).unwrap();
        (trajectory_table(&out.trajectory).to_csv_string(), format!("{:?}", out.stats))
    };
    let a = csv(&sim);
    let b = csv(&sim);
    let c = csv(&SimConfig { seed: 10, ..sim.clone() });
    let same_seed = a == b && a != c;

    let serial = ScanSpec {
        detunings: ScanSpec::half_tau_grid(laser.tau, &C1_HALF_TAU_DELTA),
        trials: 2,
        pulses: 2_000_000,
        burn_in_pulses: Some(500_000),
        ..ScanSpec::default()
    };
    let parallel = ScanSpec { threads: 4, ..serial.clone() };
    let ts = harness::temperature_scan(&atom, &trap, &laser, &sim, &serial).unwrap();
    let tp = harness::temperature_scan(&atom, &trap, &laser, &sim, &parallel).unwrap();
    let line = ScanSpec {
        detunings: ScanSpec::linear_grid(-TWO_PI * 600e9, TWO_PI * 600e9, 13),
        pulses: 100_000,
        ..serial.clone()
    };
    let ls = harness::lineshape_scan(&atom, &laser, 5, &line).unwrap();
    let lp = harness::lineshape_scan(&atom, &laser, 5, &ScanSpec { threads: 3, ..line }).unwrap();
    let scans_agree = ts.to_table().to_csv_string() == tp.to_table().to_csv_string()
        && ls.to_table().to_csv_string() == lp.to_table().to_csv_string();

    let imaging = ImagingConfig::default();
    let image = |seed| {
        let mut rng = SimRng::seed_from_u64(seed);
        let img = imaging::synthesize_thermal(5.0, &atom, &trap, &imaging, &mut rng);
        let mut buf = Vec::new();
        imaging::write_image(&img, &mut buf).unwrap();
        buf
    };
    let images = image(4) == image(4);
    let notes = vec![
        format!("trajectory CSV and stats identical for equal seeds, different otherwise: {same_seed}"),
        format!("temperature and lineshape scans, 1 vs 3-4 threads, byte-identical CSV: {scans_agree}"),
        format!("synthetic image text identical for equal seeds: {images}"),
    ];
    s.verdict(11, same_seed && scans_agree && images, "determinism", &notes, t0);
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let strict = args.iter().any(|a| a == "--strict")
        || std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let all: [(u32, fn(&mut Suite)); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut suite = Suite {
        failed: Vec::new(),
        ran: 0,
    };
    let start = Instant::now();
    for (id, f) in all {
        if selected.is_empty() || selected.contains(&id) {
            f(&mut suite);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s; failed: {:?}",
        suite.ran - suite.failed.len(),
        suite.ran,
        start.elapsed().as_secs_f64(),
        suite.failed
    );
    if strict && !suite.failed.is_empty() {
        std::process::exit(1);
    }
}
