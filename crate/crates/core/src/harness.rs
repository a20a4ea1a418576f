//! Detuning scans: MC equilibrium temperature against the closed form, and
//! cold-ion scatter-rate lineshapes with a sech² fit.
//!
//! Every (point, trial) pair gets its own seed derived from the master seed,
//! so results do not depend on the worker count or on scheduling.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constants::{K_B, SECH2_FWHM_TAU, TWO_PI};
use crate::csv::{num, Table};
use crate::engine::{self, PulseKernel, SimRng};
use crate::error::{Error, Result, ValidationErrors, Violation};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::model::{AtomSpecies, PulsedLaserConfig, SimConfig, TrapConfig, Validate};
use crate::theory::{self, sech2};

pub const TEMPERATURE_HEADER: [&str; 6] = [
    "delta_rad_s",
    "delta_over_2pi_hz",
    "T_mc_K",
    "T_mc_err_K",
    "T_theory_K",
    "error",
];

pub const LINESHAPE_HEADER: [&str; 5] = ["delta_rad_s", "rate_theory_hz", "rate_mc_hz", "rate_mc_err_hz", "error"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    /// rad/s
    pub detunings: Vec<f64>,
    pub trials: usize,
    /// Pulses per trial, burn-in included for temperature scans.
    pub pulses: u64,
    /// Overrides the simulation's burn-in; `None` keeps it.
    pub burn_in_pulses: Option<u64>,
    /// Pinned temperature of the lineshape MC, K.
    pub lineshape_temperature: f64,
    /// Worker threads; 1 runs serially on the calling thread.
    pub threads: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            detunings: Vec::new(),
            trials: 1,
            pulses: 100_000_000,
            burn_in_pulses: None,
            lineshape_temperature: 1.0,
            threads: 1,
        }
    }
}

impl ScanSpec {
    /// Detunings at which `τδ/2` takes the given values.
    pub fn half_tau_grid(tau: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| PulsedLaserConfig::detuning_for_half_tau_delta(tau, x)).collect()
    }

    /// `n` evenly spaced detunings from `lo` to `hi` inclusive.
    pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

impl Validate for ScanSpec {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.detunings.is_empty() {
            out.push(Violation::new("detunings", "[]", "grid is empty"));
        }
        if let Some(d) = self.detunings.iter().find(|d| !d.is_finite()) {
            out.push(Violation::new("detunings", d, "must be finite"));
        }
        if self.trials == 0 {
            out.push(Violation::new("trials", 0, "must be positive"));
        }
        if self.pulses == 0 {
            out.push(Violation::new("pulses", 0, "must be positive"));
        }
        if !(self.lineshape_temperature >= 0.0 && self.lineshape_temperature.is_finite()) {
            out.push(Violation::new(
                "lineshape_temperature",
                self.lineshape_temperature,
                "must be non-negative and finite",
            ));
        }
        if self.threads == 0 {
            out.push(Violation::new("threads", 0, "must be positive"));
        }
        out
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `master ⊕ splitmix(splitmix(point) ⊕ trial)`.
pub fn point_seed(master: u64, point: usize, trial: usize) -> u64 {
    master ^ splitmix64(splitmix64(point as u64) ^ trial as u64)
}

/// Runs `f` on every job, in parallel when `threads > 1`; output keeps job order.
fn run_jobs<T, F>(jobs: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads <= 1 {
        return Ok((0..jobs).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..jobs).into_par_iter().map(f).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperaturePoint {
    /// rad/s
    pub detuning: f64,
    /// Mean over trials of the axis-averaged temperature, K.
    pub t_mc: f64,
    pub t_mc_err: f64,
    /// Per-axis mean over trials, K.
    pub t_axes: [f64; 3],
    pub t_theory: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureScan {
    pub points: Vec<TemperaturePoint>,
}

impl TemperatureScan {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&TEMPERATURE_HEADER);
        for p in &self.points {
            t.push(vec![
                num(p.detuning),
                num(p.detuning / TWO_PI),
                num(p.t_mc),
                num(p.t_mc_err),
                num(p.t_theory),
                error_cell(&p.error),
            ]);
        }
        t
    }

    /// Scan points with δ/2π in GHz.
    pub fn plot_table(&self) -> Table {
        let mut t = Table::new(&["delta_over_2pi_ghz", "T_mc_K", "T_mc_err_K", "T_theory_K"]);
        for p in &self.points {
            t.push(vec![num(p.detuning / TWO_PI / 1e9), num(p.t_mc), num(p.t_mc_err), num(p.t_theory)]);
        }
        t
    }
}

/// Single-line, comma-free rendering of a point's error.
fn error_cell(e: &Option<String>) -> String {
    e.as_deref()
        .unwrap_or_default()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .replace(',', ";")
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// MC equilibrium temperature at every detuning of `scan`, next to the
/// closed-form prediction. A failing point is recorded and the scan goes on.
pub fn temperature_scan(
    atom: &AtomSpecies,
    trap: &TrapConfig,
    laser: &PulsedLaserConfig,
    sim: &SimConfig,
    scan: &ScanSpec,
) -> Result<TemperatureScan> {
    let mut v = scan.violations();
    if let Some(d) = scan.detunings.iter().find(|&&d| !(d < 0.0)) {
        v.push(Violation::new("detunings", d, "temperature scans need red detunings"));
    }
    if !v.is_empty() {
        return Err(ValidationErrors(v).into());
    }
    let trials = scan.trials;
    let runs = run_jobs(scan.detunings.len() * trials, scan.threads, |job| {
        let (point, trial) = (job / trials, job % trials);
        let l = PulsedLaserConfig {
            detuning: scan.detunings[point],
            ..laser.clone()
        };
        let s = SimConfig {
            seed: point_seed(sim.seed, point, trial),
            n_pulses: scan.pulses,
            burn_in_pulses: scan.burn_in_pulses.or(sim.burn_in_pulses),
            record_stride: 0,
            ..sim.clone()
        };
        engine::run(atom, trap, &l, &s).map(|o| o.stats)
    })?;
    let points = scan
        .detunings
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let t_theory = theory::equilibrium_temperature(laser.tau, d).unwrap_or(f64::NAN);
            let chunk = &runs[i * trials..(i + 1) * trials];
            if let Some(Err(e)) = chunk.iter().find(|r| r.is_err()) {
                return TemperaturePoint {
                    detuning: d,
                    t_mc: f64::NAN,
                    t_mc_err: f64::NAN,
                    t_axes: [f64::NAN; 3],
                    t_theory,
                    error: Some(e.to_string()),
                };
            }
            let stats: Vec<_> = chunk.iter().filter_map(|r| r.as_ref().ok()).collect();
            let means: Vec<f64> = stats.iter().map(|s| s.energies.mean_temperature.mean).collect();
            let (t_mc, mut t_mc_err) = mean_and_stderr(&means);
            if trials == 1 {
                t_mc_err = stats[0].energies.mean_temperature.stderr;
            }
            let t_axes = [0, 1, 2].map(|a| {
                stats.iter().map(|s| s.energies.temperature[a].mean).sum::<f64>() / trials as f64
            });
            TemperaturePoint {
                detuning: d,
                t_mc,
                t_mc_err,
                t_axes,
                t_theory,
                error: None,
            }
        })
        .collect();
    Ok(TemperatureScan { points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineshapePoint {
    /// rad/s
    pub detuning: f64,
    /// Photons/s for an ion at rest.
    pub rate_theory: f64,
    pub rate_mc: f64,
    pub rate_mc_err: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineshapeScan {
    pub points: Vec<LineshapePoint>,
}

impl LineshapeScan {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&LINESHAPE_HEADER);
        for p in &self.points {
            t.push(vec![
                num(p.detuning),
                num(p.rate_theory),
                num(p.rate_mc),
                num(p.rate_mc_err),
                error_cell(&p.error),
            ]);
        }
        t
    }

    /// Scan points with δ/2π in GHz and, when given, the fitted curve.
    pub fn plot_table(&self, fit: Option<&LineshapeFit>) -> Table {
        let mut t = Table::new(&["delta_over_2pi_ghz", "rate_mc_hz", "rate_mc_err_hz", "rate_theory_hz", "rate_fit_hz"]);
        for p in &self.points {
            let f = fit.map(|f| f.eval(p.detuning)).unwrap_or(f64::NAN);
            t.push(vec![
                num(p.detuning / TWO_PI / 1e9),
                num(p.rate_mc),
                num(p.rate_mc_err),
                num(p.rate_theory),
                num(f),
            ]);
        }
        t
    }

    /// (detuning, MC rate) pairs for [`fit_sech2`].
    pub fn mc_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.error.is_none())
            .map(|p| (p.detuning, p.rate_mc))
            .collect()
    }
}

/// Scatter rate of an ion held at a fixed temperature.
///
/// Each pulse sees a fresh beam-axis velocity from the Maxwell-Boltzmann
/// distribution at `temperature`, so the ion never heats or cools.
pub fn pinned_scatter_rate(
    atom: &AtomSpecies,
    laser: &PulsedLaserConfig,
    temperature: f64,
    pulses: u64,
    seed: u64,
) -> (f64, u64) {
    let kernel = PulseKernel::new(atom, laser);
    let sv = (K_B * temperature / atom.mass).sqrt();
    let mut rng = SimRng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..pulses {
        let n: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        hits += kernel.absorbs(u, sv * n) as u64;
    }
    (laser.rep_rate * hits as f64 / pulses as f64, hits)
}

/// Cold-ion scatter rate at every detuning of `scan`, MC and closed form.
pub fn lineshape_scan(
    atom: &AtomSpecies,
    laser: &PulsedLaserConfig,
    seed: u64,
    scan: &ScanSpec,
) -> Result<LineshapeScan> {
    let v = scan.violations();
    if !v.is_empty() {
        return Err(ValidationErrors(v).into());
    }
    let trials = scan.trials;
    let hits = run_jobs(scan.detunings.len() * trials, scan.threads, |job| {
        let (point, trial) = (job / trials, job % trials);
        let l = PulsedLaserConfig {
            detuning: scan.detunings[point],
            ..laser.clone()
        };
        pinned_scatter_rate(atom, &l, scan.lineshape_temperature, scan.pulses, point_seed(seed, point, trial)).1
    })?;
    let n = (scan.pulses * trials as u64) as f64;
    let points = scan
        .detunings
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let l = PulsedLaserConfig {
                detuning: d,
                ..laser.clone()
            };
            let k: u64 = hits[i * trials..(i + 1) * trials].iter().sum();
            let p = k as f64 / n;
            LineshapePoint {
                detuning: d,
                rate_theory: theory::scatter_rate(atom, &l, 0.0),
                rate_mc: laser.rep_rate * p,
                rate_mc_err: laser.rep_rate * (p * (1.0 - p) / n).sqrt(),
                error: None,
            }
        })
        .collect();
    Ok(LineshapeScan { points })
}

/// `amplitude·sech²(τ(δ − center_offset)/2)` fitted to a lineshape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeFit {
    /// photons/s
    pub amplitude: f64,
    /// s
    pub tau: f64,
    /// rad/s
    pub center_offset: f64,
    pub residual_norm: f64,
    /// `3.5255/τ`, rad/s
    pub fwhm: f64,
    pub amplitude_err: f64,
    pub tau_err: f64,
    pub center_offset_err: f64,
}

impl LineshapeFit {
    pub fn eval(&self, delta: f64) -> f64 {
        self.amplitude * sech2(0.5 * self.tau * (delta - self.center_offset))
    }
}

/// Width between half-maximum crossings, interpolated linearly. Uses twice
/// the one-sided width when the other side never drops below half.
fn half_max_width(x: &[f64], y: &[f64], imax: usize) -> Option<f64> {
    let half = 0.5 * y[imax];
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let right = (imax + 1..x.len()).find(|&j| y[j] < half).map(|j| cross(j - 1, j));
    let left = (0..imax).rev().find(|&j| y[j] < half).map(|j| cross(j + 1, j));
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (x[imax] - l)),
        (None, Some(r)) => Some(2.0 * (r - x[imax])),
        (None, None) => None,
    }
}

/// Least-squares sech² fit to (detuning rad/s, rate photons/s) points.
///
/// Starts from the largest rate, its detuning, and τ from the half-maximum
/// width; refines to 1e-10 relative parameter change or 200 iterations.
pub fn fit_sech2(points: &[(f64, f64)]) -> Result<LineshapeFit> {
    if points.len() < 4 {
        return Err(Error::Precondition(format!("need at least 4 points, got {}", points.len())));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let imax = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0);
    let a0 = y[imax];
    let c0 = x[imax];
    let span = x[x.len() - 1] - x[0];
    let width = half_max_width(&x, &y, imax).unwrap_or(span);
    let tau0 = SECH2_FWHM_TAU / width;
    let init_err = |reason: String| Error::LineshapeFit {
        amplitude: a0,
        tau: tau0,
        center: c0,
        reason,
    };
    if !(a0 > 0.0) || !(tau0 > 0.0) || !tau0.is_finite() {
        return Err(init_err("no positive peak".into()));
    }
    if !(span > 0.5 * width) {
        return Err(Error::Precondition(format!(
            "points span {span:e} rad/s, less than half the FWHM {width:e}"
        )));
    }
    // normalized units: detuning in units of the initial FWHM, rate of the peak
    let (xs, ys) = (width, a0);
    let xn: Vec<f64> = x.iter().map(|v| (v - c0) / xs).collect();
    let yn: Vec<f64> = y.iter().map(|v| v / ys).collect();
    let model = |t: f64, p: &[f64; 3]| {
        let d = t - p[2];
        let u = 0.5 * p[1] * d;
        let s = sech2(u);
        let g = -2.0 * p[0] * s * u.tanh();
        (p[0] * s, [s, g * 0.5 * d, -g * 0.5 * p[1]])
    };
    let r = levenberg_marquardt(&xn, &yn, [1.0, tau0 * xs, 0.0], model, LmOptions::default());
    let [a, t, c] = r.params;
    let e = r.errors();
    if !r.converged {
        return Err(init_err(format!("no convergence after {} iterations", r.iterations)));
    }
    let tau = t.abs() / xs;
    if !(a > 0.0) || !(tau > 0.0) || !tau.is_finite() {
        return Err(init_err(format!("fit left the valid region (A = {}, τ = {tau})", a * ys)));
    }
    Ok(LineshapeFit {
        amplitude: a * ys,
        tau,
        center_offset: c0 + c * xs,
        residual_norm: r.rss.sqrt() * ys,
        fwhm: theory::lineshape_fwhm(tau),
        amplitude_err: e[0] * ys,
        tau_err: e[1] / xs,
        center_offset_err: e[2] * xs,
    })
}
