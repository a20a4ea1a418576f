//! TOML configuration files.
//!
//! Sections `[atom] [trap] [laser] [sim] [imaging] [scan]`, every key
//! optional (missing keys keep the Cd⁺ defaults). Angular frequencies take a
//! `_hz` suffix (multiplied by 2π on load) or a `_rad` suffix (rad/s, used as
//! is). Unknown keys, wrong types and broken invariants are all collected and
//! reported together. See `config/SCHEMA.md` for the full key list.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::constants::{AMU, TWO_PI};
use crate::error::{Error, Result, ValidationErrors, Violation};
use crate::harness::ScanSpec;
use crate::imaging::{CrossectionMode, ImagingConfig, WaistMode};
use crate::model::{
    AtomSpecies, EmissionDelayMode, InitialCondition, PulsedLaserConfig, SimConfig, TrapConfig, Validate,
};

/// Grids and run lengths for the two detuning scans.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    /// Temperature-scan detunings, rad/s.
    pub detunings: Vec<f64>,
    /// Lineshape-scan detunings, rad/s.
    pub line_detunings: Vec<f64>,
    pub trials: usize,
    /// Pulses per temperature-scan trial, burn-in included.
    pub pulses: u64,
    pub burn_in_pulses: Option<u64>,
    /// Pulses per lineshape point and trial.
    pub line_pulses: u64,
    /// K
    pub line_temperature: f64,
    pub threads: usize,
}

impl ScanSettings {
    pub fn cadmium_default(tau: f64) -> Self {
        ScanSettings {
            detunings: ScanSpec::half_tau_grid(tau, &[-0.5, -0.8168, -1.5]),
            line_detunings: ScanSpec::linear_grid(-TWO_PI * 600e9, TWO_PI * 600e9, 25),
            trials: 1,
            pulses: 100_000_000,
            burn_in_pulses: None,
            line_pulses: 1_000_000,
            line_temperature: 1.0,
            threads: 1,
        }
    }

    pub fn temperature_spec(&self) -> ScanSpec {
        ScanSpec {
            detunings: self.detunings.clone(),
            trials: self.trials,
            pulses: self.pulses,
            burn_in_pulses: self.burn_in_pulses,
            lineshape_temperature: self.line_temperature,
            threads: self.threads,
        }
    }

    pub fn lineshape_spec(&self) -> ScanSpec {
        ScanSpec {
            detunings: self.line_detunings.clone(),
            pulses: self.line_pulses,
            burn_in_pulses: None,
            ..self.temperature_spec()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub atom: AtomSpecies,
    pub trap: TrapConfig,
    pub laser: PulsedLaserConfig,
    pub sim: SimConfig,
    pub imaging: ImagingConfig,
    pub scan: ScanSettings,
}

impl Default for Config {
    fn default() -> Self {
        let laser = PulsedLaserConfig::cadmium_default();
        Config {
            atom: AtomSpecies::cadmium_114(),
            trap: TrapConfig::cadmium_default(),
            scan: ScanSettings::cadmium_default(laser.tau),
            laser,
            sim: SimConfig::default(),
            imaging: ImagingConfig::default(),
        }
    }
}

fn prefixed(section: &str, v: Vec<Violation>) -> impl Iterator<Item = Violation> + '_ {
    v.into_iter().map(move |mut x| {
        x.field = format!("{section}.{}", x.field);
        x
    })
}

impl Validate for Config {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        out.extend(prefixed("atom", self.atom.violations()));
        out.extend(prefixed("trap", self.trap.violations()));
        out.extend(prefixed("laser", self.laser.violations()));
        out.extend(prefixed("sim", self.sim.violations()));
        out.extend(prefixed("imaging", self.imaging.violations()));
        let s = &self.scan;
        let mut scan = self.scan.temperature_spec().violations();
        scan.retain(|v| v.field != "detunings" || !s.detunings.is_empty());
        if let Some(d) = s.detunings.iter().find(|&&d| !(d < 0.0)) {
            scan.push(Violation::new("detunings", d, "temperature scans need red detunings"));
        }
        if let Some(d) = s.line_detunings.iter().find(|d| !d.is_finite()) {
            scan.push(Violation::new("line_detunings", d, "must be finite"));
        }
        if s.line_pulses == 0 {
            scan.push(Violation::new("line_pulses", 0, "must be positive"));
        }
        out.extend(prefixed("scan", scan));
        out
    }
}

/// Keys of one section, with consumption tracking and error collection.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
    errors: &'a mut Vec<Violation>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errors: &'a mut Vec<Violation>) -> Self {
        let table = match root.get(name) {
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                errors.push(Violation::new(name, other, "must be a table"));
                None
            }
            None => None,
        };
        Section {
            name,
            table,
            used: BTreeSet::new(),
            errors,
        }
    }

    fn bad(&mut self, key: &str, value: &Value, reason: &str) {
        self.errors
            .push(Violation::new(format!("{}.{key}", self.name), value, reason));
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.table?.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        let v = self.raw(key)?;
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.bad(key, v, "expected a number");
                None
            }
        }
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        let v = self.raw(key)?;
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::String(s) if s.parse::<u64>().is_ok() => s.parse().ok(),
            _ => {
                self.bad(key, v, "expected a non-negative integer");
                None
            }
        }
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.u64(key).map(|x| x as usize)
    }

    fn str(&mut self, key: &str) -> Option<&'a str> {
        let v = self.raw(key)?;
        match v {
            Value::String(s) => Some(s),
            _ => {
                self.bad(key, v, "expected a string");
                None
            }
        }
    }

    fn f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let items = match v {
            Value::Array(a) => a,
            _ => {
                self.bad(key, v, "expected an array of numbers");
                return None;
            }
        };
        let mut out = Vec::with_capacity(items.len());
        for x in items {
            match x {
                Value::Float(f) => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                _ => {
                    self.bad(key, v, "expected an array of numbers");
                    return None;
                }
            }
        }
        Some(out)
    }

    fn vec3(&mut self, key: &str) -> Option<[f64; 3]> {
        let list = self.f64_list(key)?;
        match <[f64; 3]>::try_from(list) {
            Ok(a) => Some(a),
            Err(l) => {
                let v = self.raw(key).cloned().unwrap_or(Value::Integer(l.len() as i64));
                self.bad(key, &v, "expected 3 components");
                None
            }
        }
    }

    /// One of several mutually exclusive spellings; errors if more than one is given.
    fn exclusive(&mut self, keys: &[&str]) -> Option<usize> {
        let present: Vec<usize> = (0..keys.len())
            .filter(|&i| self.table.is_some_and(|t| t.contains_key(keys[i])))
            .collect();
        if present.len() > 1 {
            let v = self.raw(keys[present[1]]).cloned().unwrap();
            let names = present.iter().map(|&i| keys[i]).collect::<Vec<_>>().join(", ");
            self.bad(keys[present[1]], &v, &format!("conflicting keys: {names}"));
            for &i in &present {
                self.used.insert(keys[i].to_string());
            }
            return None;
        }
        present.first().copied()
    }

    /// `<base>_hz` (×2π) or `<base>_rad`.
    fn angular(&mut self, base: &str) -> Option<f64> {
        let (hz, rad) = (format!("{base}_hz"), format!("{base}_rad"));
        match self.exclusive(&[&hz, &rad])? {
            0 => self.f64(&hz).map(|x| x * TWO_PI),
            _ => self.f64(&rad),
        }
    }

    fn angular3(&mut self, base: &str) -> Option<[f64; 3]> {
        let (hz, rad) = (format!("{base}_hz"), format!("{base}_rad"));
        match self.exclusive(&[&hz, &rad])? {
            0 => self.vec3(&hz).map(|a| a.map(|x| x * TWO_PI)),
            _ => self.vec3(&rad),
        }
    }

    fn angular_list(&mut self, base: &str) -> Option<Vec<f64>> {
        let (hz, rad) = (format!("{base}_hz"), format!("{base}_rad"));
        match self.exclusive(&[&hz, &rad])? {
            0 => self.f64_list(&hz).map(|a| a.into_iter().map(|x| x * TWO_PI).collect()),
            _ => self.f64_list(&rad),
        }
    }

    fn finish(self) {
        if let Some(t) = self.table {
            for (k, v) in t {
                if !self.used.contains(k) {
                    self.errors
                        .push(Violation::new(format!("{}.{k}", self.name), v, "unknown key"));
                }
            }
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

const SECTIONS: [&str; 6] = ["atom", "trap", "laser", "sim", "imaging", "scan"];

impl Config {
    /// Parses and validates a configuration file's text.
    pub fn from_toml_str(text: &str) -> Result<Config> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut errors = Vec::new();
        for (k, v) in &root {
            if !SECTIONS.contains(&k.as_str()) {
                errors.push(Violation::new(k, v, "unknown section"));
            }
        }
        let mut c = Config::default();

        let mut s = Section::new(&root, "atom", &mut errors);
        match s.exclusive(&["mass", "mass_u"]) {
            Some(0) => set(&mut c.atom.mass, s.f64("mass")),
            Some(_) => set(&mut c.atom.mass, s.f64("mass_u").map(|u| u * AMU)),
            None => {}
        }
        set(&mut c.atom.wavelength, s.f64("wavelength"));
        set(&mut c.atom.gamma, s.angular("gamma"));
        set(&mut c.atom.lifetime, s.f64("lifetime"));
        set(&mut c.atom.saturation_intensity, s.f64("saturation_intensity"));
        s.finish();

        let mut s = Section::new(&root, "trap", &mut errors);
        set(&mut c.trap.omega, s.angular3("omega"));
        set(&mut c.trap.omega_rf, s.angular("omega_rf"));
        s.finish();

        let mut s = Section::new(&root, "laser", &mut errors);
        set(&mut c.laser.tau, s.f64("tau"));
        set(&mut c.laser.rep_rate, s.f64("rep_rate"));
        match s.exclusive(&["detuning_hz", "detuning_rad", "half_tau_delta"]) {
            Some(2) => {
                let tau = c.laser.tau;
                set(
                    &mut c.laser.detuning,
                    s.f64("half_tau_delta")
                        .map(|x| PulsedLaserConfig::detuning_for_half_tau_delta(tau, x)),
                )
            }
            Some(_) => set(&mut c.laser.detuning, s.angular("detuning")),
            None => {}
        }
        set(&mut c.laser.rabi_angle, s.f64("rabi_angle"));
        set(&mut c.laser.beam_dir, s.vec3("beam_dir"));
        set(&mut c.laser.waist_rms, s.f64("waist_rms"));
        set(&mut c.laser.pulse_energy, s.f64("pulse_energy"));
        s.finish();

        let mut s = Section::new(&root, "sim", &mut errors);
        set(&mut c.sim.seed, s.u64("seed"));
        set(&mut c.sim.n_pulses, s.u64("n_pulses"));
        if let Some(v) = s.raw("burn_in_pulses") {
            match v {
                Value::String(a) if a == "auto" => c.sim.burn_in_pulses = None,
                _ => {
                    s.used.remove("burn_in_pulses");
                    c.sim.burn_in_pulses = s.u64("burn_in_pulses").or(c.sim.burn_in_pulses);
                }
            }
        }
        set(&mut c.sim.background_heating, s.f64("background_heating"));
        if let Some(m) = s.str("emission_delay_mode") {
            match EmissionDelayMode::parse(m) {
                Some(m) => c.sim.emission_delay_mode = m,
                None => s.bad("emission_delay_mode", &Value::from(m), "expected immediate or sampled"),
            }
        }
        match s.exclusive(&["initial_temperature", "initial_energy"]) {
            Some(0) => {
                if let Some(t) = s.f64("initial_temperature") {
                    c.sim.initial = InitialCondition::Thermal { temperature: t };
                }
            }
            Some(_) => {
                if let Some(e) = s.f64("initial_energy") {
                    c.sim.initial = InitialCondition::KineticEnergy { energy: e };
                }
            }
            None => {}
        }
        set(&mut c.sim.record_stride, s.u64("record_stride"));
        set(&mut c.sim.blocks, s.usize("blocks"));
        s.finish();

        let mut s = Section::new(&root, "imaging", &mut errors);
        let im = &mut c.imaging;
        set(&mut im.psf_rms, s.f64("psf_rms"));
        set(&mut im.psf_rms_err, s.f64("psf_rms_err"));
        set(&mut im.waist_rms, s.f64("waist_rms"));
        set(&mut im.waist_rms_err, s.f64("waist_rms_err"));
        set(&mut im.beam_angle_in_image, s.f64("beam_angle_in_image"));
        set(&mut im.pixel_size, s.f64("pixel_size"));
        set(&mut im.width, s.usize("width"));
        set(&mut im.height, s.usize("height"));
        set(&mut im.total_counts, s.f64("total_counts"));
        if let Some(m) = s.str("crossection_mode") {
            match CrossectionMode::parse(m) {
                Some(m) => im.crossection_mode = m,
                None => s.bad("crossection_mode", &Value::from(m), "expected slice or marginal"),
            }
        }
        set(&mut im.slice_halfwidth, s.usize("slice_halfwidth"));
        if let Some(m) = s.str("waist_mode") {
            match WaistMode::parse(m) {
                Some(m) => im.waist_mode = m,
                None => s.bad(
                    "waist_mode",
                    &Value::from(m),
                    "expected verbatim, self_consistent or model_exact",
                ),
            }
        }
        set(&mut im.vertical_axis, s.usize("vertical_axis"));
        set(&mut im.horizontal_axis, s.usize("horizontal_axis"));
        s.finish();

        let mut s = Section::new(&root, "scan", &mut errors);
        let tau = c.laser.tau;
        match s.exclusive(&["detunings_hz", "detunings_rad", "half_tau_delta"]) {
            Some(2) => set(
                &mut c.scan.detunings,
                s.f64_list("half_tau_delta").map(|x| ScanSpec::half_tau_grid(tau, &x)),
            ),
            Some(_) => set(&mut c.scan.detunings, s.angular_list("detunings")),
            None => {}
        }
        set(&mut c.scan.line_detunings, s.angular_list("line_detunings"));
        set(&mut c.scan.trials, s.usize("trials"));
        set(&mut c.scan.pulses, s.u64("pulses"));
        if let Some(b) = s.u64("burn_in_pulses") {
            c.scan.burn_in_pulses = Some(b);
        }
        set(&mut c.scan.line_pulses, s.u64("line_pulses"));
        set(&mut c.scan.line_temperature, s.f64("line_temperature"));
        set(&mut c.scan.threads, s.usize("threads"));
        s.finish();

        errors.extend(c.violations());
        if errors.is_empty() {
            Ok(c)
        } else {
            Err(ValidationErrors(errors).into())
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        Config::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Every setting, angular frequencies in Hz. Loading the text back gives
    /// the same configuration to within rounding of the 2π factor.
    pub fn to_toml_string(&self) -> String {
        fn f(x: f64) -> String {
            // shortest representation that reads back to the same f64
            if x.is_nan() {
                "nan".into()
            } else {
                format!("{x:?}")
            }
        }
        fn list(xs: &[f64]) -> String {
            format!("[{}]", xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", "))
        }
        fn hz(xs: &[f64]) -> String {
            list(&xs.iter().map(|x| x / TWO_PI).collect::<Vec<_>>())
        }
        let mut s = String::new();
        let a = &self.atom;
        let _ = writeln!(s, "[atom]");
        let _ = writeln!(s, "mass = {}", f(a.mass));
        let _ = writeln!(s, "wavelength = {}", f(a.wavelength));
        let _ = writeln!(s, "gamma_hz = {}", f(a.gamma / TWO_PI));
        let _ = writeln!(s, "lifetime = {}", f(a.lifetime));
        let _ = writeln!(s, "saturation_intensity = {}", f(a.saturation_intensity));

        let _ = writeln!(s, "\n[trap]");
        let _ = writeln!(s, "omega_hz = {}", hz(&self.trap.omega));
        let _ = writeln!(s, "omega_rf_hz = {}", f(self.trap.omega_rf / TWO_PI));

        let l = &self.laser;
        let _ = writeln!(s, "\n[laser]");
        let _ = writeln!(s, "tau = {}", f(l.tau));
        let _ = writeln!(s, "rep_rate = {}", f(l.rep_rate));
        let _ = writeln!(s, "detuning_hz = {}", f(l.detuning / TWO_PI));
        let _ = writeln!(s, "rabi_angle = {}", f(l.rabi_angle));
        let _ = writeln!(s, "beam_dir = {}", list(&l.beam_dir));
        let _ = writeln!(s, "waist_rms = {}", f(l.waist_rms));
        let _ = writeln!(s, "pulse_energy = {}", f(l.pulse_energy));

        let m = &self.sim;
        let _ = writeln!(s, "\n[sim]");
        if m.seed > i64::MAX as u64 {
            let _ = writeln!(s, "seed = \"{}\"", m.seed);
        } else {
            let _ = writeln!(s, "seed = {}", m.seed);
        }
        let _ = writeln!(s, "n_pulses = {}", m.n_pulses);
        match m.burn_in_pulses {
            Some(b) => writeln!(s, "burn_in_pulses = {b}"),
            None => writeln!(s, "burn_in_pulses = \"auto\""),
        }
        .ok();
        let _ = writeln!(s, "background_heating = {}", f(m.background_heating));
        let _ = writeln!(s, "emission_delay_mode = \"{}\"", m.emission_delay_mode.as_str());
        match m.initial {
            InitialCondition::Thermal { temperature } => writeln!(s, "initial_temperature = {}", f(temperature)),
            InitialCondition::KineticEnergy { energy } => writeln!(s, "initial_energy = {}", f(energy)),
        }
        .ok();
        let _ = writeln!(s, "record_stride = {}", m.record_stride);
        let _ = writeln!(s, "blocks = {}", m.blocks);

        let im = &self.imaging;
        let _ = writeln!(s, "\n[imaging]");
        let _ = writeln!(s, "psf_rms = {}", f(im.psf_rms));
        let _ = writeln!(s, "psf_rms_err = {}", f(im.psf_rms_err));
        let _ = writeln!(s, "waist_rms = {}", f(im.waist_rms));
        let _ = writeln!(s, "waist_rms_err = {}", f(im.waist_rms_err));
        let _ = writeln!(s, "beam_angle_in_image = {}", f(im.beam_angle_in_image));
        let _ = writeln!(s, "pixel_size = {}", f(im.pixel_size));
        let _ = writeln!(s, "width = {}", im.width);
        let _ = writeln!(s, "height = {}", im.height);
        let _ = writeln!(s, "total_counts = {}", f(im.total_counts));
        let _ = writeln!(s, "crossection_mode = \"{}\"", im.crossection_mode.as_str());
        let _ = writeln!(s, "slice_halfwidth = {}", im.slice_halfwidth);
        let _ = writeln!(s, "waist_mode = \"{}\"", im.waist_mode.as_str());
        let _ = writeln!(s, "vertical_axis = {}", im.vertical_axis);
        let _ = writeln!(s, "horizontal_axis = {}", im.horizontal_axis);

        let sc = &self.scan;
        let _ = writeln!(s, "\n[scan]");
        let _ = writeln!(s, "detunings_hz = {}", hz(&sc.detunings));
        let _ = writeln!(s, "line_detunings_hz = {}", hz(&sc.line_detunings));
        let _ = writeln!(s, "trials = {}", sc.trials);
        let _ = writeln!(s, "pulses = {}", sc.pulses);
        if let Some(b) = sc.burn_in_pulses {
            let _ = writeln!(s, "burn_in_pulses = {b}");
        }
        let _ = writeln!(s, "line_pulses = {}", sc.line_pulses);
        let _ = writeln!(s, "line_temperature = {}", f(sc.line_temperature));
        let _ = writeln!(s, "threads = {}", sc.threads);
        s
    }
}
