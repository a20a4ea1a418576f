//! Estimators for trajectory output.

use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::model::Vec3;

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Distance from `value` in units of the standard error.
    pub fn sigmas_from(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }
}

/// Per-block running sums of kinetic and potential energy on each axis.
#[derive(Debug, Clone)]
pub(crate) struct BlockAccumulator {
    block_len: u64,
    kinetic: Vec<Vec3>,
    potential: Vec<Vec3>,
    counts: Vec<u64>,
    current: usize,
    in_block: u64,
}

impl BlockAccumulator {
    pub fn new(total_samples: u64, blocks: usize) -> Self {
        let blocks = blocks.max(1).min(total_samples.max(1) as usize);
        let block_len = (total_samples / blocks as u64).max(1);
        BlockAccumulator {
            block_len,
            kinetic: vec![[0.0; 3]; blocks],
            potential: vec![[0.0; 3]; blocks],
            counts: vec![0; blocks],
            current: 0,
            in_block: 0,
        }
    }

    /// Samples left before the current block is full. The last block absorbs
    /// any remainder.
    #[inline]
    pub fn room(&self) -> u64 {
        if self.current + 1 == self.counts.len() {
            u64::MAX
        } else {
            self.block_len - self.in_block
        }
    }

    #[inline(always)]
    pub fn add(&mut self, kinetic: &Vec3, potential: &Vec3, n: u64) {
        let k = &mut self.kinetic[self.current];
        let p = &mut self.potential[self.current];
        for i in 0..3 {
            k[i] += kinetic[i];
            p[i] += potential[i];
        }
        self.counts[self.current] += n;
        self.in_block += n;
        if self.in_block >= self.block_len && self.current + 1 < self.counts.len() {
            self.current += 1;
            self.in_block = 0;
        }
    }

    fn block_means(&self, f: impl Fn(&Vec3, &Vec3) -> f64) -> Vec<f64> {
        (0..self.counts.len())
            .filter(|&b| self.counts[b] > 0)
            .map(|b| f(&self.kinetic[b], &self.potential[b]) / self.counts[b] as f64)
            .collect()
    }

    fn estimate(&self, f: impl Fn(&Vec3, &Vec3) -> f64) -> Estimate {
        let total: u64 = self.counts.iter().sum();
        let (mut sk, mut sp) = ([0.0; 3], [0.0; 3]);
        for b in 0..self.counts.len() {
            for i in 0..3 {
                sk[i] += self.kinetic[b][i];
                sp[i] += self.potential[b][i];
            }
        }
        let mean = if total > 0 { f(&sk, &sp) / total as f64 } else { f64::NAN };
        let means = self.block_means(&f);
        let n = means.len();
        let stderr = if n >= 2 {
            let mu = means.iter().sum::<f64>() / n as f64;
            let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate { mean, stderr }
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn finish(&self) -> EnergyEstimates {
        let per_axis = |g: fn(&Vec3, &Vec3, usize) -> f64| {
            [0, 1, 2].map(|i| self.estimate(move |k, p| g(k, p, i) / K_B))
        };
        EnergyEstimates {
            temperature: per_axis(|k, p, i| k[i] + p[i]),
            kinetic_temperature: per_axis(|k, _, i| 2.0 * k[i]),
            potential_temperature: per_axis(|_, p, i| 2.0 * p[i]),
            mean_temperature: self.estimate(|k, p| (0..3).map(|i| k[i] + p[i]).sum::<f64>() / (3.0 * K_B)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimates {
    /// ⟨E_axis⟩/k_B, equipartition for a 1D oscillator.
    pub temperature: [Estimate; 3],
    /// 2⟨½mv²⟩/k_B
    pub kinetic_temperature: [Estimate; 3],
    /// 2⟨½mω²x²⟩/k_B
    pub potential_temperature: [Estimate; 3],
    /// Average of the three axis temperatures.
    pub mean_temperature: Estimate,
}

/// Summary of one trajectory after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub burn_in_pulses: u64,
    /// Energy samples taken (one per pulse after burn-in).
    pub samples: u64,
    /// ⟨E_axis⟩, J.
    pub mean_energy: Vec3,
    pub energies: EnergyEstimates,
    /// Photons scattered over the whole run.
    pub total_scatters: u64,
    /// Photons scattered after burn-in.
    pub sampled_scatters: u64,
    /// Time covered by the energy samples, s.
    pub sampled_time: f64,
    /// Sum of all recoil momentum delivered along each axis, kg·m/s.
    pub recoil_impulse: Vec3,
}

impl TrajectoryStats {
    pub fn temperature(&self) -> [Estimate; 3] {
        self.energies.temperature
    }

    /// Scatter rate after burn-in, photons/s.
    pub fn scatter_rate(&self) -> f64 {
        self.sampled_scatters as f64 / self.sampled_time
    }
}

/// Exponential fit of an energy decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingFit {
    /// Energy decay rate, 1/s. For harmonically bound motion this is `|β|/m`.
    pub energy_rate: f64,
    /// Half-width of the 95% confidence interval on `energy_rate`.
    pub ci95: f64,
    /// ln of the fitted excess energy range.
    pub e_foldings: f64,
    pub points: usize,
}

/// Minimum number of e-foldings above the floor for a damping fit.
pub const MIN_E_FOLDINGS: f64 = 3.0;

/// Excess energy, in units of the floor, below which samples are dropped.
pub const FLOOR_MARGIN: f64 = 2.0;

/// Least-squares fit of `ln(E − E_eq)` against time.
///
/// Only the initial run of samples with `E − E_eq > FLOOR_MARGIN·E_eq` is
/// used, so equilibrium noise does not bias the slope.
pub fn measure_damping_rate(times: &[f64], energies: &[f64], e_eq: f64) -> Result<DampingFit> {
    if times.len() != energies.len() {
        return Err(Error::Precondition("times and energies differ in length".into()));
    }
    let cutoff = FLOOR_MARGIN * e_eq.max(0.0);
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&ti, &ei) in times.iter().zip(energies) {
        let excess = ei - e_eq;
        if !(excess > cutoff) || excess <= 0.0 {
            break;
        }
        t.push(ti);
        y.push(excess.ln());
    }
    let n = t.len();
    if n < 3 {
        return Err(Error::InsufficientRange {
            e_foldings: 0.0,
            required: MIN_E_FOLDINGS,
        });
    }
    let tm = t.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = t.iter().map(|ti| (ti - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - tm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let e_foldings = -slope * (t[n - 1] - t[0]);
    if !(e_foldings >= MIN_E_FOLDINGS) {
        return Err(Error::InsufficientRange {
            e_foldings: if e_foldings.is_finite() { e_foldings } else { 0.0 },
            required: MIN_E_FOLDINGS,
        });
    }
    let intercept = ym - slope * tm;
    let rss: f64 = t
        .iter()
        .zip(&y)
        .map(|(ti, yi)| (yi - intercept - slope * ti).powi(2))
        .sum();
    let se = (rss / (n as f64 - 2.0).max(1.0) / sxx).sqrt();
    Ok(DampingFit {
        energy_rate: -slope,
        ci95: 1.96 * se,
        e_foldings,
        points: n,
    })
}

/// First time at which `energy/(dof·k_B)` drops to `temperature` or below.
pub fn time_to_temperature(times: &[f64], energies: &[f64], dof: f64, temperature: f64) -> Option<f64> {
    times
        .iter()
        .zip(energies)
        .find(|(_, &e)| e / (dof * K_B) <= temperature)
        .map(|(&t, _)| t)
}
