use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pulsecool::config::Config;
use pulsecool::constants::TWO_PI;
use pulsecool::csv::{num, Table};
use pulsecool::engine::{self, trajectory_table};
use pulsecool::harness::{self, LineshapeFit, ScanSpec};
use pulsecool::imaging::{self, read_image, synthesize_thermal, write_image};
use pulsecool::theory;
use pulsecool::{Error, PulsedLaserConfig, Validate, ValidationErrors};
use rand::SeedableRng;

#[derive(Parser, Debug)]
#[command(name = "pulsecool", version, about = "Broadband pulsed Doppler cooling of a trapped ion")]
struct Cli {
    /// TOML configuration file; defaults to the built-in Cd+ settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides [sim] seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans, overrides [scan] threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for fig3a.csv / fig3b.csv plot data
    #[arg(long, global = true)]
    plot_data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form quantities on a detuning grid, or scalar estimates
    Theory(TheoryArgs),
    /// One cooling trajectory: per-axis temperatures and scatter rate
    Cool(CoolArgs),
    /// Equilibrium temperature against detuning
    ScanTemp(ScanArgs),
    /// Cold-ion scatter rate against detuning, with a sech² fit
    ScanLine(ScanArgs),
    /// Synthesize and/or analyze a fluorescence image
    Image(ImageArgs),
    /// Fit a sech² lineshape to a CSV of (detuning rad/s, rate) points
    FitLine(FitLineArgs),
}

#[derive(Args, Debug)]
struct TheoryArgs {
    /// Print scalar estimates instead of the detuning grid
    #[arg(long)]
    scalars: bool,
    /// Grid start, δ/2π in Hz
    #[arg(long, default_value_t = -600e9, allow_negative_numbers = true)]
    from_hz: f64,
    /// Grid end, δ/2π in Hz
    #[arg(long, default_value_t = 600e9, allow_negative_numbers = true)]
    to_hz: f64,
    #[arg(long, default_value_t = 121)]
    points: usize,
}

#[derive(Args, Debug)]
struct CoolArgs {
    /// Total pulses, overrides [sim] n_pulses
    #[arg(long)]
    pulses: Option<u64>,
    /// Burn-in pulses, overrides [sim] burn_in_pulses
    #[arg(long)]
    burn_in: Option<u64>,
    /// Write sampled states to this CSV
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Pulses between trajectory samples (default 1000 with --trajectory)
    #[arg(long)]
    record_stride: Option<u64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Trials per point, overrides [scan] trials
    #[arg(long)]
    trials: Option<usize>,
    /// Pulses per trial, overrides [scan] pulses or line_pulses
    #[arg(long)]
    pulses: Option<u64>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    /// Generate a thermal image (requires --temperature)
    #[arg(long)]
    synthesize: bool,
    /// K
    #[arg(long)]
    temperature: Option<f64>,
    /// Analyze an image file, or the synthesized image when no file is given
    #[arg(long, num_args = 0..=1)]
    analyze: Option<Option<PathBuf>>,
    /// Write the fitted crossection to this CSV
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitLineArgs {
    /// CSV with a header; uses delta_rad_s and the first rate column
    input: PathBuf,
}

/// Bad input (exit 1) or failed computation (exit 2).
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<ValidationErrors> for Failure {
    fn from(e: ValidationErrors) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut c = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        c.sim.seed = s;
    }
    if let Some(t) = cli.threads {
        c.scan.threads = t;
    }
    for w in c.trap.warnings().into_iter().chain(c.laser.warnings(&c.atom)) {
        log::warn!("{w}");
    }
    Ok(c)
}

fn emit(out: &Option<PathBuf>, text: &str) -> io::Result<()> {
    match out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(text.as_bytes())?;
            f.flush()
        }
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn write_plot(dir: &Path, name: &str, table: &Table) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), table.to_csv_string())
}

fn dispatch(cli: Cli) -> Outcome {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Theory(a) => theory_cmd(&cli, &cfg, a),
        Command::Cool(a) => cool_cmd(&cli, cfg, a),
        Command::ScanTemp(a) => scan_temp_cmd(&cli, &cfg, a),
        Command::ScanLine(a) => scan_line_cmd(&cli, &cfg, a),
        Command::Image(a) => image_cmd(&cli, &cfg, a),
        Command::FitLine(a) => fit_line_cmd(&cli, a),
    }
}

fn theory_cmd(cli: &Cli, cfg: &Config, a: &TheoryArgs) -> Outcome {
    let (atom, trap, laser) = (&cfg.atom, &cfg.trap, &cfg.laser);
    if a.scalars {
        let mut t = Table::new(&["quantity", "value", "unit"]);
        let mut row = |q: &str, v: f64, u: &str| t.push(vec![q.into(), num(v), u.into()]);
        let lin = theory::linearize_force(atom, trap, laser);
        row("temperature_floor", theory::temperature_floor(laser.tau), "K");
        row("equilibrium_temperature", theory::equilibrium_temperature(laser.tau, laser.detuning).unwrap_or(f64::NAN), "K");
        for i in 0..3 {
            row(
                &format!("projected_temperature_{i}"),
                theory::projected_equilibrium_temperature(laser, i).unwrap_or(f64::NAN),
                "K",
            );
            row(&format!("projected_energy_damping_{i}"), theory::projected_energy_damping_rate(atom, laser, i), "1/s");
        }
        row("excitation_probability", theory::excitation_probability(laser.rabi_angle, laser.tau, laser.detuning), "");
        row("scatter_rate", theory::scatter_rate(atom, laser, 0.0), "1/s");
        row("force_f0", lin.f0, "N");
        row("friction_beta", lin.beta, "kg/s");
        row("cooling_rate", lin.cooling_rate(atom), "1/s");
        let p = theory::excitation_probability(laser.rabi_angle, laser.tau, laser.detuning);
        row("diffusion_power", theory::diffusion_power(atom, laser, p), "W");
        row("lineshape_fwhm_over_2pi", theory::lineshape_fwhm(laser.tau) / TWO_PI, "Hz");
        row("recoil_velocity", atom.recoil_velocity(), "m/s");
        row("recoil_energy", atom.recoil_energy(), "J");
        row("residual_excitation", theory::residual_excitation(atom.lifetime, laser.rep_rate), "");
        for i in 0..3 {
            row(&format!("micromotion_ratio_{i}"), theory::micromotion_ratio(trap, i), "");
        }
        return Ok(emit(&cli.out, &t.to_csv_string())?);
    }
    if a.points == 0 || !(a.from_hz.is_finite() && a.to_hz.is_finite()) {
        return Err(Failure::Usage("grid needs finite bounds and at least one point".into()));
    }
    let mut t = Table::new(&[
        "delta_rad_s",
        "delta_over_2pi_hz",
        "p_exc",
        "scatter_rate_hz",
        "force_N",
        "beta_kg_s",
        "diffusion_W",
        "T_eq_K",
        "T_proj_0_K",
        "T_proj_1_K",
        "T_proj_2_K",
    ]);
    for d in ScanSpec::linear_grid(TWO_PI * a.from_hz, TWO_PI * a.to_hz, a.points) {
        let l = PulsedLaserConfig {
            detuning: d,
            ..laser.clone()
        };
        let p = theory::excitation_probability(l.rabi_angle, l.tau, d);
        let lin = theory::linearize_force(atom, trap, &l);
        let proj = |i| theory::projected_equilibrium_temperature(&l, i).unwrap_or(f64::NAN);
        t.push(vec![
            num(d),
            num(d / TWO_PI),
            num(p),
            num(theory::scatter_rate(atom, &l, 0.0)),
            num(theory::scattering_force(atom, &l, 0.0)),
            num(lin.beta),
            num(theory::diffusion_power(atom, &l, p)),
            num(theory::equilibrium_temperature(l.tau, d).unwrap_or(f64::NAN)),
            num(proj(0)),
            num(proj(1)),
            num(proj(2)),
        ]);
    }
    Ok(emit(&cli.out, &t.to_csv_string())?)
}

fn cool_cmd(cli: &Cli, mut cfg: Config, a: &CoolArgs) -> Outcome {
    if let Some(n) = a.pulses {
        cfg.sim.n_pulses = n;
    }
    if let Some(b) = a.burn_in {
        cfg.sim.burn_in_pulses = Some(b);
    }
    if let Some(s) = a.record_stride {
        cfg.sim.record_stride = s;
    } else if a.trajectory.is_some() && cfg.sim.record_stride == 0 {
        cfg.sim.record_stride = 1000;
    }
    let v = cfg.sim.violations();
    if !v.is_empty() {
        return Err(ValidationErrors(v).into());
    }
    let out = engine::run(&cfg.atom, &cfg.trap, &cfg.laser, &cfg.sim)?;
    let s = &out.stats;
    let mut t = Table::new(&["quantity", "value", "stderr", "unit"]);
    let mut row = |q: &str, v: f64, e: f64, u: &str| t.push(vec![q.into(), num(v), num(e), u.into()]);
    for (i, e) in s.energies.temperature.iter().enumerate() {
        row(&format!("T_{i}"), e.mean, e.stderr, "K");
    }
    row("T_mean", s.energies.mean_temperature.mean, s.energies.mean_temperature.stderr, "K");
    row(
        "T_theory",
        theory::equilibrium_temperature(cfg.laser.tau, cfg.laser.detuning).unwrap_or(f64::NAN),
        f64::NAN,
        "K",
    );
    for i in 0..3 {
        row(
            &format!("T_projected_{i}"),
            theory::projected_equilibrium_temperature(&cfg.laser, i).unwrap_or(f64::NAN),
            f64::NAN,
            "K",
        );
    }
    row("scatter_rate", s.scatter_rate(), f64::NAN, "1/s");
    row("burn_in_pulses", s.burn_in_pulses as f64, f64::NAN, "");
    row("sampled_pulses", s.samples as f64, f64::NAN, "");
    row("total_scatters", s.total_scatters as f64, f64::NAN, "");
    emit(&cli.out, &t.to_csv_string())?;
    if let Some(p) = &a.trajectory {
        std::fs::write(p, trajectory_table(&out.trajectory).to_csv_string())?;
    }
    Ok(())
}

fn scan_temp_cmd(cli: &Cli, cfg: &Config, a: &ScanArgs) -> Outcome {
    let mut spec = cfg.scan.temperature_spec();
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(p) = a.pulses {
        spec.pulses = p;
    }
    let scan = harness::temperature_scan(&cfg.atom, &cfg.trap, &cfg.laser, &cfg.sim, &spec)?;
    emit(&cli.out, &scan.to_table().to_csv_string())?;
    if let Some(dir) = &cli.plot_data {
        write_plot(dir, "fig3a.csv", &scan.plot_table())?;
    }
    Ok(())
}

fn report_fit(f: &LineshapeFit) -> Table {
    let mut t = Table::new(&["quantity", "value", "stderr", "unit"]);
    let mut row = |q: &str, v: f64, e: f64, u: &str| t.push(vec![q.into(), num(v), num(e), u.into()]);
    row("amplitude", f.amplitude, f.amplitude_err, "1/s");
    row("tau", f.tau, f.tau_err, "s");
    row("center_offset", f.center_offset, f.center_offset_err, "rad/s");
    row("fwhm", f.fwhm, f.fwhm * f.tau_err / f.tau, "rad/s");
    row("fwhm_over_2pi", f.fwhm / TWO_PI, f.fwhm * f.tau_err / f.tau / TWO_PI, "Hz");
    row("residual_norm", f.residual_norm, f64::NAN, "1/s");
    t
}

fn scan_line_cmd(cli: &Cli, cfg: &Config, a: &ScanArgs) -> Outcome {
    let mut spec = cfg.scan.lineshape_spec();
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(p) = a.pulses {
        spec.pulses = p;
    }
    let scan = harness::lineshape_scan(&cfg.atom, &cfg.laser, cfg.sim.seed, &spec)?;
    emit(&cli.out, &scan.to_table().to_csv_string())?;
    let fit = match harness::fit_sech2(&scan.mc_points()) {
        Ok(f) => {
            for line in report_fit(&f).to_csv_string().lines().skip(1) {
                eprintln!("fit {line}");
            }
            Some(f)
        }
        Err(e) => {
            log::warn!("lineshape fit: {e}");
            None
        }
    };
    if let Some(dir) = &cli.plot_data {
        write_plot(dir, "fig3b.csv", &scan.plot_table(fit.as_ref()))?;
    }
    Ok(())
}

fn image_cmd(cli: &Cli, cfg: &Config, a: &ImageArgs) -> Outcome {
    let (atom, trap, im) = (&cfg.atom, &cfg.trap, &cfg.imaging);
    let synthesized = if a.synthesize {
        let t = a
            .temperature
            .ok_or_else(|| Failure::Usage("--synthesize needs --temperature".into()))?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage(format!("temperature {t} must be positive")));
        }
        let mut rng = engine::SimRng::seed_from_u64(cfg.sim.seed);
        let mut img = synthesize_thermal(t, atom, trap, im, &mut rng);
        img.metadata.seed = Some(cfg.sim.seed);
        Some(img)
    } else {
        None
    };
    let image = match (&a.analyze, synthesized) {
        (None, Some(img)) => {
            let mut buf = Vec::new();
            write_image(&img, &mut buf)?;
            emit(&cli.out, &String::from_utf8_lossy(&buf))?;
            return Ok(());
        }
        (None, None) => return Err(Failure::Usage("image needs --synthesize and/or --analyze".into())),
        (Some(Some(p)), _) => {
            let f = File::open(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            read_image(BufReader::new(f))?
        }
        (Some(None), Some(img)) => img,
        (Some(None), None) => return Err(Failure::Usage("--analyze needs a file unless --synthesize is given".into())),
    };
    if let Some(p) = &a.profile {
        let prof = imaging::crossection(&image, im.crossection_mode, im.slice_halfwidth)?;
        std::fs::write(p, prof.to_table().to_csv_string())?;
    }
    let r = imaging::temperature_from_image(&image, atom, trap, im)?;
    let mut t = Table::new(&["quantity", "value", "stderr", "unit"]);
    let mut row = |q: &str, v: f64, e: f64, u: &str| t.push(vec![q.into(), num(v), num(e), u.into()]);
    row("temperature", r.temperature, r.temperature_err, "K");
    row("x_im", r.x_im, r.x_im_err, "m");
    row("x_rms", r.x_rms, f64::NAN, "m");
    row("fit_amplitude", r.fit.amplitude, r.fit.amplitude_err, "counts");
    row("fit_center", r.fit.center, r.fit.center_err, "m");
    row("fit_baseline", r.fit.baseline, r.fit.baseline_err, "counts");
    row("fit_residual_norm", r.fit.residual_norm, f64::NAN, "counts");
    if let Some(t0) = image.metadata.temperature {
        row("true_temperature", t0, f64::NAN, "K");
    }
    Ok(emit(&cli.out, &t.to_csv_string())?)
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Failure::Usage("empty input".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let xi = header.iter().position(|h| *h == "delta_rad_s").unwrap_or(0);
    let yi = ["rate_mc_hz", "rate_hz", "rate_theory_hz", "scatter_rate_hz"]
        .iter()
        .find_map(|n| header.iter().position(|h| h == n))
        .unwrap_or(1);
    let mut pts = Vec::new();
    for (n, l) in lines.enumerate() {
        let cells: Vec<&str> = l.split(',').map(str::trim).collect();
        let get = |i: usize| cells.get(i).and_then(|c| c.parse::<f64>().ok());
        match (get(xi), get(yi)) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => pts.push((x, y)),
            _ => return Err(Failure::Usage(format!("line {}: expected numbers in columns {xi} and {yi}", n + 2))),
        }
    }
    Ok(pts)
}

fn fit_line_cmd(cli: &Cli, a: &FitLineArgs) -> Outcome {
    let pts = read_points(&a.input)?;
    let f = harness::fit_sech2(&pts)?;
    Ok(emit(&cli.out, &report_fit(&f).to_csv_string())?)
}
