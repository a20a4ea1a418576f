//! Synthetic fluorescence images of a thermal ion and their inversion to a
//! temperature.
//!
//! Image coordinates are (h, v): horizontal and vertical in the image
//! plane, with the crossection taken along v. The laser beam crosses the
//! image plane at angle φ from the vertical; fluorescence is weighted by a
//! Gaussian of rms `waist_rms` transverse to it.

use std::io::{self, BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::constants::K_B;
use crate::csv::{num, Table};
use crate::error::{Error, Result, Violation};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::model::{AtomSpecies, TrapConfig, Validate};
use crate::theory::temperature_from_rms;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossectionMode {
    /// Mean of the columns within `slice_halfwidth` of the centroid.
    Slice,
    /// Sum over all columns.
    Marginal,
}

impl CrossectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CrossectionMode::Slice => "slice",
            CrossectionMode::Marginal => "marginal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "slice" => Some(CrossectionMode::Slice),
            "marginal" => Some(CrossectionMode::Marginal),
            _ => None,
        }
    }
}

/// How the beam-waist weighting is undone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaistMode {
    /// `x_w·x_corr/√(x_w² − x_im²·sin²φ)`
    Verbatim,
    /// As `Verbatim` with `x_corr` in the radical.
    SelfConsistent,
    /// Numerical inverse of the forward model used by [`synthesize_image`].
    ModelExact,
}

impl WaistMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WaistMode::Verbatim => "verbatim",
            WaistMode::SelfConsistent => "self_consistent",
            WaistMode::ModelExact => "model_exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "verbatim" => Some(WaistMode::Verbatim),
            "self_consistent" => Some(WaistMode::SelfConsistent),
            "model_exact" => Some(WaistMode::ModelExact),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingConfig {
    /// x_r, m
    pub psf_rms: f64,
    /// One-sigma uncertainty of `psf_rms`, m.
    pub psf_rms_err: f64,
    /// x_w, m. `f64::INFINITY` disables the brightness weighting.
    pub waist_rms: f64,
    pub waist_rms_err: f64,
    /// Beam direction in the image plane, rad from the vertical (φ).
    pub beam_angle_in_image: f64,
    /// m
    pub pixel_size: f64,
    pub width: usize,
    pub height: usize,
    /// Expected photon count over the whole image.
    pub total_counts: f64,
    pub crossection_mode: CrossectionMode,
    /// Pixels either side of the centroid column in slice mode.
    pub slice_halfwidth: usize,
    pub waist_mode: WaistMode,
    /// Trap axis imaged along v.
    pub vertical_axis: usize,
    /// Trap axis imaged along h.
    pub horizontal_axis: usize,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        ImagingConfig {
            psf_rms: 1.15e-6,
            psf_rms_err: 0.01e-6,
            waist_rms: 3.35e-6,
            waist_rms_err: 0.15e-6,
            beam_angle_in_image: std::f64::consts::FRAC_PI_4,
            pixel_size: 0.4e-6,
            width: 64,
            height: 64,
            total_counts: 1e5,
            crossection_mode: CrossectionMode::Slice,
            slice_halfwidth: 3,
            waist_mode: WaistMode::Verbatim,
            vertical_axis: 0,
            horizontal_axis: 2,
        }
    }
}

impl ImagingConfig {
    /// φ in the waist correction.
    pub fn phi(&self) -> f64 {
        self.beam_angle_in_image
    }

    /// Center of pixel (0, 0) as (h, v), m. The grid is centred on the origin.
    pub fn origin(&self) -> (f64, f64) {
        (
            -0.5 * (self.width as f64 - 1.0) * self.pixel_size,
            -0.5 * (self.height as f64 - 1.0) * self.pixel_size,
        )
    }
}

impl Validate for ImagingConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0) {
                out.push(Violation::new(name, v, "must be positive"));
            }
        };
        positive("psf_rms", self.psf_rms);
        positive("waist_rms", self.waist_rms);
        positive("pixel_size", self.pixel_size);
        positive("total_counts", self.total_counts);
        for (name, v) in [("psf_rms_err", self.psf_rms_err), ("waist_rms_err", self.waist_rms_err)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::new(name, v, "must be non-negative and finite"));
            }
        }
        if !self.beam_angle_in_image.is_finite() {
            out.push(Violation::new("beam_angle_in_image", self.beam_angle_in_image, "must be finite"));
        }
        for (name, n) in [("width", self.width), ("height", self.height)] {
            if n < 5 {
                out.push(Violation::new(name, n, "need at least 5 pixels"));
            }
        }
        if 2 * self.slice_halfwidth + 1 > self.width {
            out.push(Violation::new(
                "slice_halfwidth",
                self.slice_halfwidth,
                format!("slice is wider than the image ({} pixels)", self.width),
            ));
        }
        for (name, a) in [("vertical_axis", self.vertical_axis), ("horizontal_axis", self.horizontal_axis)] {
            if a > 2 {
                out.push(Violation::new(name, a, "must be 0, 1 or 2"));
            }
        }
        if self.vertical_axis == self.horizontal_axis {
            out.push(Violation::new("horizontal_axis", self.horizontal_axis, "must differ from vertical_axis"));
        }
        out
    }
}

/// rms thermal displacement `√(k_B·T/(m·ω²))`, m.
pub fn thermal_sigma(temperature: f64, omega: f64, mass: f64) -> f64 {
    (K_B * temperature / (mass * omega * omega)).sqrt()
}

/// Thermal rms (h, v) of the imaged axes.
pub fn image_sigmas(temperature: f64, atom: &AtomSpecies, trap: &TrapConfig, imaging: &ImagingConfig) -> [f64; 2] {
    [
        thermal_sigma(temperature, trap.omega[imaging.horizontal_axis], atom.mass),
        thermal_sigma(temperature, trap.omega[imaging.vertical_axis], atom.mass),
    ]
}

/// Symmetric 2×2 covariance `[[hh, hv], [hv, vv]]`.
pub type Cov2 = [[f64; 2]; 2];

/// Covariance of the brightness-weighted position distribution.
///
/// Weighting N(0, Σ) by `exp(−(n·r)²/(2x_w²))`, n ⊥ beam, gives
/// `Σ − Σn nᵀΣ/(nᵀΣn + x_w²)`, which stays finite for σ → 0 and x_w → ∞.
pub fn weighted_covariance(sigmas: [f64; 2], waist_rms: f64, phi: f64) -> Cov2 {
    let s = [[sigmas[0].powi(2), 0.0], [0.0, sigmas[1].powi(2)]];
    if waist_rms.is_infinite() {
        return s;
    }
    // beam (sin φ, cos φ) in (h, v); n is its in-plane normal
    let n = [phi.cos(), -phi.sin()];
    let sn = [s[0][0] * n[0], s[1][1] * n[1]];
    let q = n[0] * sn[0] + n[1] * sn[1] + waist_rms * waist_rms;
    [
        [s[0][0] - sn[0] * sn[0] / q, -sn[0] * sn[1] / q],
        [-sn[0] * sn[1] / q, s[1][1] - sn[1] * sn[1] / q],
    ]
}

/// Covariance of the expected image: weighted distribution blurred by the PSF.
pub fn image_covariance(sigmas: [f64; 2], imaging: &ImagingConfig) -> Cov2 {
    let mut c = weighted_covariance(sigmas, imaging.waist_rms, imaging.phi());
    let r2 = imaging.psf_rms.powi(2);
    c[0][0] += r2;
    c[1][1] += r2;
    c
}

/// Expected width of the vertical profile of an image with covariance `c`.
///
/// Marginal: `√c_vv`. Slice: the columns at offsets h_j are Gaussians of
/// variance `c_vv − c_hv²/c_hh` centred at `(c_hv/c_hh)·h_j`, so their
/// average has the conditional variance plus the spread of those centres.
pub fn profile_width(c: &Cov2, imaging: &ImagingConfig) -> f64 {
    match imaging.crossection_mode {
        CrossectionMode::Marginal => c[1][1].sqrt(),
        CrossectionMode::Slice => {
            let cond = c[1][1] - c[0][1] * c[0][1] / c[0][0];
            let slope = c[0][1] / c[0][0];
            let hw = imaging.slice_halfwidth as i64;
            let (mut sw, mut swh2) = (0.0, 0.0);
            for j in -hw..=hw {
                let h = j as f64 * imaging.pixel_size;
                let w = (-0.5 * h * h / c[0][0]).exp();
                sw += w;
                swh2 += w * h * h;
            }
            (cond + slope * slope * swh2 / sw).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetadata {
    pub temperature: Option<f64>,
    /// Thermal (h, v) rms, m.
    pub sigmas: Option<[f64; 2]>,
    pub seed: Option<u64>,
}

/// Photon counts on a pixel grid; row index runs along v.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    /// Row-major, `counts[row·width + col]`.
    pub counts: Vec<u64>,
    pub width: usize,
    pub height: usize,
    /// m
    pub pixel_size: f64,
    /// Center of pixel (0, 0) as (h, v), m.
    pub origin: (f64, f64),
    pub metadata: ImageMetadata,
}

impl SyntheticImage {
    pub fn at(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.width + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Expected counts per pixel, normalised to `total_counts` over the grid.
pub fn expected_image(sigmas: [f64; 2], imaging: &ImagingConfig) -> Vec<f64> {
    let c = image_covariance(sigmas, imaging);
    let det = c[0][0] * c[1][1] - c[0][1] * c[0][1];
    let inv = [[c[1][1] / det, -c[0][1] / det], [-c[0][1] / det, c[0][0] / det]];
    let (h0, v0) = imaging.origin();
    let mut out = Vec::with_capacity(imaging.width * imaging.height);
    for row in 0..imaging.height {
        let v = v0 + row as f64 * imaging.pixel_size;
        for col in 0..imaging.width {
            let h = h0 + col as f64 * imaging.pixel_size;
            let q = inv[0][0] * h * h + 2.0 * inv[0][1] * h * v + inv[1][1] * v * v;
            out.push((-0.5 * q).exp());
        }
    }
    let sum: f64 = out.iter().sum();
    let scale = imaging.total_counts / sum;
    out.iter_mut().for_each(|x| *x *= scale);
    out
}

/// Poisson counts drawn around [`expected_image`].
pub fn synthesize_image<R: Rng + ?Sized>(sigmas: [f64; 2], imaging: &ImagingConfig, rng: &mut R) -> SyntheticImage {
    let counts = expected_image(sigmas, imaging)
        .into_iter()
        .map(|lambda| match Poisson::new(lambda) {
            Ok(p) => p.sample(rng) as u64,
            Err(_) => 0,
        })
        .collect();
    SyntheticImage {
        counts,
        width: imaging.width,
        height: imaging.height,
        pixel_size: imaging.pixel_size,
        origin: imaging.origin(),
        metadata: ImageMetadata {
            temperature: None,
            sigmas: Some(sigmas),
            seed: None,
        },
    }
}

/// Thermal image of an ion at `temperature`.
pub fn synthesize_thermal<R: Rng + ?Sized>(
    temperature: f64,
    atom: &AtomSpecies,
    trap: &TrapConfig,
    imaging: &ImagingConfig,
    rng: &mut R,
) -> SyntheticImage {
    let mut img = synthesize_image(image_sigmas(temperature, atom, trap, imaging), imaging, rng);
    img.metadata.temperature = Some(temperature);
    img
}

/// 1D profile along v.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// m
    pub x: Vec<f64>,
    pub counts: Vec<f64>,
}

impl Profile {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["x_m", "counts"]);
        for (x, c) in self.x.iter().zip(&self.counts) {
            t.push(vec![num(*x), num(*c)]);
        }
        t
    }
}

/// Vertical crossection through the intensity centroid.
pub fn crossection(image: &SyntheticImage, mode: CrossectionMode, slice_halfwidth: usize) -> Result<Profile> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::Precondition("empty image".into()));
    }
    let x: Vec<f64> = (0..image.height)
        .map(|r| image.origin.1 + r as f64 * image.pixel_size)
        .collect();
    let counts = match mode {
        CrossectionMode::Marginal => (0..image.height)
            .map(|r| (0..image.width).map(|c| image.at(r, c) as f64).sum())
            .collect(),
        CrossectionMode::Slice => {
            let mut total = 0.0;
            let mut moment = 0.0;
            for r in 0..image.height {
                for c in 0..image.width {
                    let n = image.at(r, c) as f64;
                    total += n;
                    moment += n * c as f64;
                }
            }
            let column = moment / total;
            let centre = column.round();
            if !(centre >= 0.0 && centre < image.width as f64) {
                return Err(Error::CentroidOutside {
                    column,
                    width: image.width,
                });
            }
            let centre = centre as usize;
            let lo = centre.saturating_sub(slice_halfwidth);
            let hi = (centre + slice_halfwidth).min(image.width - 1);
            let n = (hi - lo + 1) as f64;
            (0..image.height)
                .map(|r| (lo..=hi).map(|c| image.at(r, c) as f64).sum::<f64>() / n)
                .collect()
        }
    };
    Ok(Profile { x, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFitResult {
    pub amplitude: f64,
    /// m
    pub center: f64,
    /// m
    pub rms_width: f64,
    pub baseline: f64,
    /// √RSS, in count units.
    pub residual_norm: f64,
    pub converged: bool,
    /// One-sigma errors of (amplitude, center, rms_width, baseline).
    pub amplitude_err: f64,
    pub center_err: f64,
    pub rms_width_err: f64,
    pub baseline_err: f64,
    pub iterations: usize,
    /// Why the fit was rejected, when it was.
    pub diagnostic: Option<String>,
}

/// Least squares of `baseline + amplitude·exp(−(x−x₀)²/(2σ²))`.
///
/// Fits in units where x spans [−1, 1] and the peak count is 1. Starts from
/// the lowest sample as baseline and the half-maximum region for centre and
/// width. Converges when a step changes every parameter by less than 1e-10
/// relative, or gives up after 200 iterations.
pub fn fit_gaussian_1d(x: &[f64], y: &[f64]) -> Result<GaussianFitResult> {
    if x.len() != y.len() {
        return Err(Error::Precondition("x and y differ in length".into()));
    }
    if x.len() < 5 {
        return Err(Error::Precondition(format!("need at least 5 points, got {}", x.len())));
    }
    let (xmin, xmax) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let xc = 0.5 * (xmin + xmax);
    let xs = 0.5 * (xmax - xmin);
    let ys = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let failed = |why: &str| GaussianFitResult {
        amplitude: f64::NAN,
        center: f64::NAN,
        rms_width: f64::NAN,
        baseline: f64::NAN,
        residual_norm: f64::NAN,
        converged: false,
        amplitude_err: f64::NAN,
        center_err: f64::NAN,
        rms_width_err: f64::NAN,
        baseline_err: f64::NAN,
        iterations: 0,
        diagnostic: Some(why.to_string()),
    };
    if !(xs > 0.0) || !(ys > 0.0) || !ys.is_finite() {
        return Ok(failed("degenerate profile"));
    }
    let xn: Vec<f64> = x.iter().map(|v| (v - xc) / xs).collect();
    let yn: Vec<f64> = y.iter().map(|v| v / ys).collect();

    let base0 = yn.iter().cloned().fold(f64::INFINITY, f64::min);
    let imax = (0..yn.len()).max_by(|&a, &b| yn[a].total_cmp(&yn[b])).unwrap_or(0);
    let amp0 = yn[imax] - base0;
    if !(amp0 > 0.0) {
        return Ok(failed("flat profile"));
    }
    let half: Vec<usize> = (0..yn.len()).filter(|&i| yn[i] - base0 > 0.5 * amp0).collect();
    let (mut w, mut wx) = (0.0, 0.0);
    for &i in &half {
        w += yn[i] - base0;
        wx += (yn[i] - base0) * xn[i];
    }
    let c0 = if w > 0.0 { wx / w } else { xn[imax] };
    let lo = half.iter().map(|&i| xn[i]).fold(f64::INFINITY, f64::min);
    let hi = half.iter().map(|&i| xn[i]).fold(f64::NEG_INFINITY, f64::max);
    let dx = 2.0 / (xn.len() - 1) as f64;
    let s0 = ((hi - lo + dx) / 2.354_820_045).clamp(0.5 * dx, 2.0);

    let model = |t: f64, p: &[f64; 4]| {
        let d = t - p[2];
        let s2 = p[3] * p[3];
        let e = (-0.5 * d * d / s2).exp();
        let ae = p[1] * e;
        (p[0] + ae, [1.0, e, ae * d / s2, ae * d * d / (s2 * p[3])])
    };
    let r = levenberg_marquardt(&xn, &yn, [base0, amp0, c0, s0], model, LmOptions::default());
    let [b, a, c, s] = r.params;
    let err = r.errors();
    let s = s.abs();
    let mut out = GaussianFitResult {
        amplitude: a * ys,
        center: xc + c * xs,
        rms_width: s * xs,
        baseline: b * ys,
        residual_norm: r.rss.sqrt() * ys,
        converged: r.converged,
        amplitude_err: err[1] * ys,
        center_err: err[2] * xs,
        rms_width_err: err[3] * xs,
        baseline_err: err[0] * ys,
        iterations: r.iterations,
        diagnostic: None,
    };
    let reason = if !r.converged {
        Some(format!("no convergence after {} iterations", r.iterations))
    } else if !(a > 0.0) {
        Some(format!("non-positive amplitude {}", out.amplitude))
    } else if !(s > 0.1 * dx && s < 10.0) {
        Some(format!("width {} m at a bound", out.rms_width))
    } else if !(a > 3.0 * err[1]) {
        Some("no significant peak".into())
    } else {
        None
    };
    if reason.is_some() {
        out.converged = false;
        out.diagnostic = reason;
    }
    Ok(out)
}

/// `√(x_im² − x_r²)`.
pub fn psf_correct(x_im: f64, x_r: f64) -> Result<f64> {
    if !(x_im > x_r) {
        return Err(Error::Unresolvable { x_im, x_r });
    }
    Ok(((x_im - x_r) * (x_im + x_r)).sqrt())
}

/// `x_w·x_corr/√(x_w² − x_im²·sin²φ)`.
pub fn waist_correct(x_corr: f64, x_im: f64, x_w: f64, phi: f64) -> Result<f64> {
    if x_w.is_infinite() {
        return Ok(x_corr);
    }
    let radicand = x_w * x_w - (x_im * phi.sin()).powi(2);
    if !(radicand > 0.0) {
        return Err(Error::WaistGeometry { radicand });
    }
    Ok(x_w * x_corr / radicand.sqrt())
}

/// Thermal rms along v whose expected profile is `x_im` wide under the
/// forward model. `anisotropy` is σ_h/σ_v.
pub fn invert_profile_width(x_im: f64, anisotropy: f64, imaging: &ImagingConfig) -> Result<f64> {
    let width = |sv: f64| profile_width(&image_covariance([anisotropy * sv, sv], imaging), imaging);
    let floor = width(0.0);
    if !(x_im > floor) {
        return Err(Error::Unresolvable {
            x_im,
            x_r: imaging.psf_rms,
        });
    }
    let mut hi = x_im;
    while width(hi) <= x_im {
        hi *= 2.0;
        if hi > 1e6 * x_im {
            return Err(Error::WaistGeometry {
                radicand: width(hi).powi(2) - x_im * x_im,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if width(mid) < x_im {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// x_rms from a measured profile width under `imaging.waist_mode`.
pub fn true_rms(x_im: f64, x_r: f64, x_w: f64, anisotropy: f64, imaging: &ImagingConfig) -> Result<f64> {
    match imaging.waist_mode {
        WaistMode::Verbatim => waist_correct(psf_correct(x_im, x_r)?, x_im, x_w, imaging.phi()),
        WaistMode::SelfConsistent => {
            let x_corr = psf_correct(x_im, x_r)?;
            waist_correct(x_corr, x_corr, x_w, imaging.phi())
        }
        WaistMode::ModelExact => {
            let cfg = ImagingConfig {
                psf_rms: x_r,
                waist_rms: x_w,
                ..imaging.clone()
            };
            invert_profile_width(x_im, anisotropy, &cfg)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTemperature {
    /// K
    pub temperature: f64,
    /// First-order propagated one-sigma error from the fit, x_r and x_w.
    pub temperature_err: f64,
    pub x_im: f64,
    pub x_im_err: f64,
    pub x_rms: f64,
    pub fit: GaussianFitResult,
}

/// Crossection, Gaussian fit, PSF and waist correction, then `k_BT = mω²x²`
/// with the vertical axis' ω.
///
/// Images whose width does not exceed `psf_rms` by twice the combined
/// uncertainty of the two are reported as unresolvable.
pub fn temperature_from_image(
    image: &SyntheticImage,
    atom: &AtomSpecies,
    trap: &TrapConfig,
    imaging: &ImagingConfig,
) -> Result<ImageTemperature> {
    let profile = crossection(image, imaging.crossection_mode, imaging.slice_halfwidth)?;
    let fit = fit_gaussian_1d(&profile.x, &profile.counts)?;
    if !fit.converged {
        return Err(Error::FitFailed(fit.diagnostic.clone().unwrap_or_default()));
    }
    let x_im = fit.rms_width;
    let x_im_err = fit.rms_width_err;
    let x_r = imaging.psf_rms;
    if x_im - x_r <= 2.0 * x_im_err.hypot(imaging.psf_rms_err) {
        return Err(Error::Unresolvable { x_im, x_r });
    }
    let omega = trap.omega[imaging.vertical_axis];
    let anisotropy = omega / trap.omega[imaging.horizontal_axis];
    let temp = |p: [f64; 3]| -> Result<f64> {
        let x = true_rms(p[0], p[1], p[2], anisotropy, imaging)?;
        Ok(temperature_from_rms(x, omega, atom.mass))
    };
    let p = [x_im, x_r, imaging.waist_rms];
    let sig = [x_im_err, imaging.psf_rms_err, imaging.waist_rms_err];
    let t = temp(p)?;
    let mut var = 0.0;
    for i in 0..3 {
        if sig[i] == 0.0 || !p[i].is_finite() {
            continue;
        }
        let h = 1e-4 * sig[i].min(p[i].abs());
        let mut up = p;
        let mut dn = p;
        up[i] += h;
        dn[i] -= h;
        let d = (temp(up)? - temp(dn)?) / (2.0 * h);
        var += (d * sig[i]).powi(2);
    }
    Ok(ImageTemperature {
        temperature: t,
        temperature_err: var.sqrt(),
        x_im,
        x_im_err,
        x_rms: true_rms(x_im, x_r, imaging.waist_rms, anisotropy, imaging)?,
        fit,
    })
}

/// Text grid: `pixel_size_m=`, `width=`, `height=` header lines, then one
/// row of counts per line. Metadata goes in `#` comment lines.
pub fn write_image<W: Write>(image: &SyntheticImage, mut w: W) -> io::Result<()> {
    if let Some(t) = image.metadata.temperature {
        writeln!(w, "# temperature_K={}", num(t))?;
    }
    if let Some(s) = image.metadata.seed {
        writeln!(w, "# seed={s}")?;
    }
    writeln!(w, "pixel_size_m={}", num(image.pixel_size))?;
    writeln!(w, "width={}", image.width)?;
    writeln!(w, "height={}", image.height)?;
    for row in image.counts.chunks(image.width) {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Inverse of [`write_image`]. The grid is assumed centred on the origin.
pub fn read_image<R: BufRead>(r: R) -> Result<SyntheticImage> {
    let mut pixel_size = None;
    let mut width = None;
    let mut height = None;
    let mut meta = ImageMetadata {
        temperature: None,
        sigmas: None,
        seed: None,
    };
    let mut counts = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let bad = |what: &str| Error::Format(format!("line {}: {what}", n + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("temperature_K=") {
                meta.temperature = v.parse().ok();
            } else if let Some(v) = c.trim().strip_prefix("seed=") {
                meta.seed = v.parse().ok();
            }
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "pixel_size_m" => pixel_size = Some(v.trim().parse::<f64>().map_err(|_| bad("bad pixel_size_m"))?),
                "width" => width = Some(v.trim().parse::<usize>().map_err(|_| bad("bad width"))?),
                "height" => height = Some(v.trim().parse::<usize>().map_err(|_| bad("bad height"))?),
                other => return Err(bad(&format!("unknown header {other}"))),
            }
            continue;
        }
        let w = width.ok_or_else(|| bad("counts before width header"))?;
        let row: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("non-integer count"))?;
        if row.len() != w {
            return Err(bad(&format!("expected {w} counts, found {}", row.len())));
        }
        counts.extend(row);
    }
    let (Some(pixel_size), Some(width), Some(height)) = (pixel_size, width, height) else {
        return Err(Error::Format("missing pixel_size_m, width or height".into()));
    };
    if !(pixel_size > 0.0) {
        return Err(Error::Format(format!("pixel_size_m must be positive, got {pixel_size}")));
    }
    if counts.len() != width * height {
        return Err(Error::Format(format!(
            "expected {height} rows of counts, found {}",
            counts.len() / width.max(1)
        )));
    }
    Ok(SyntheticImage {
        counts,
        width,
        height,
        pixel_size,
        origin: (
            -0.5 * (width as f64 - 1.0) * pixel_size,
            -0.5 * (height as f64 - 1.0) * pixel_size,
        ),
        metadata: meta,
    })
}
