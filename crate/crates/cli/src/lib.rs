//! `omsq`: parameter sweeps, spectra, detection maps and validation runs.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 for numerical
//! failures. Diagnostics go to stderr.

use clap::{Args, Parser, Subcommand, ValueEnum};
use optomech_squeeze::adiabatic::{adiabatic_variance_p, adiabatic_variance_p_approx, feedback_variance_p, AdiabaticInputs};
use optomech_squeeze::config::parse_config;
use optomech_squeeze::expr::parse_number;
use optomech_squeeze::lyapunov::steady_covariance;
use optomech_squeeze::mech_spectra::{spectrum, variance, Quadrature};
use optomech_squeeze::output::{detection_map, find_band, spectrum_zout};
use optomech_squeeze::params::optimal_theta;
use optomech_squeeze::sde::{simulate, SimConfig};
use optomech_squeeze::stability::{routh_hurwitz, spectral_abscissa};
use optomech_squeeze::sweep::{cavity_point, mirror_point, run_sweep, Format, SweepResult, SweepSpec, Table};
use optomech_squeeze::sweep::{CAVITY_COLUMNS, MIRROR_COLUMNS};
use optomech_squeeze::validation::{validate, ValidationConfig};
use optomech_squeeze::{build_drift, solve_steady_state, Error, Execution, SystemParams};
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Default output directory when `--output` is absent.
pub const OUTPUT_DIR_ENV: &str = "OMSQ_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "omsq", version, about = "Optomechanical squeezing with an intracavity parametric amplifier")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Parameter file with `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one parameter; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Pump phase in radians; accepts `pi` expressions such as `pi/16`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Parametric gain G/κ (ignored by gain sweeps).
    #[arg(long, global = true)]
    gain: Option<String>,
    /// Output file; defaults to $OMSQ_OUTPUT_DIR/<command>.<ext> or stdout.
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Omit the timestamp metadata line so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Range {
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    points: Option<usize>,
}

impl Range {
    fn resolve(&self, lo: f64, hi: f64, n: usize) -> Result<(f64, f64, usize), CliError> {
        let num = |s: &Option<String>, d: f64| s.as_deref().map(parse_number).transpose().map(|v| v.unwrap_or(d));
        Ok((num(&self.from, lo)?, num(&self.to, hi)?, self.points.unwrap_or(n)))
    }

    fn grid(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
        let (lo, hi, n) = self.resolve(lo, hi, n)?;
        if n < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(CliError::Usage(format!("range needs --points >= 2 and --from < --to, got [{lo}, {hi}] x {n}")));
        }
        Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mirror variances versus parametric gain (default 0 to 0.49, 50 points).
    SweepGain(Range),
    /// Mirror variances versus cooperativity (default 1 to 1000, 50 points).
    SweepCooperativity(Range),
    /// Mirror variances versus bath temperature in kelvin (default 0 to 0.02, 21 points).
    SweepTemperature(Range),
    /// Mirror fluctuation spectra S_Q and S_P (default ω in [-1, 1], 201 points).
    Spectrum(Range),
    /// Output quadrature spectrum at one homodyne phase, with the squeezing band.
    Detect {
        /// Homodyne phase; 0 is the amplitude and pi/2 the phase quadrature.
        #[arg(long, default_value = "pi/2", allow_hyphen_values = true)]
        phi: String,
        #[command(flatten)]
        range: Range,
    },
    /// Output spectrum over frequency and homodyne phase in long format.
    DetectMap {
        #[command(flatten)]
        range: Range,
        /// Homodyne phases spread evenly over [0, pi].
        #[arg(long, default_value_t = 61)]
        phi_points: usize,
    },
    /// Cavity quadrature variances of the bare parametric amplifier versus gain.
    CavitySweep(Range),
    /// Stability over gain and (log-spaced) cooperativity.
    StabilityMap {
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value_t = 1.0)]
        c_from: f64,
        #[arg(long, default_value_t = 1e4)]
        c_to: f64,
        #[arg(long, default_value_t = 41)]
        c_points: usize,
    },
    /// Adiabatic closed form against the full result at the optimal pump phase.
    Analytic {
        #[command(flatten)]
        range: Range,
        /// Feedback gain.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Stochastic estimate of the mirror variances with z-scores.
    Oracle {
        /// Step in units of 1/κ (default: a quarter of the admissible step).
        #[arg(long)]
        dt: Option<f64>,
        /// Sampled time per trajectory in units of 1/κ.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long, default_value_t = 4)]
        trajectories: usize,
        /// Default sampled time, in slowest relaxation times over all trajectories.
        #[arg(long, default_value_t = 2500.0)]
        relaxation_times: f64,
    },
    /// Three-way cross-check on random parameter draws.
    Validate {
        #[arg(long, default_value_t = 10_000)]
        stability_draws: usize,
        #[arg(long, default_value_t = 100)]
        analytic_draws: usize,
        #[arg(long, default_value_t = 20)]
        sde_draws: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SweepGain(_) => "sweep-gain",
            Command::SweepCooperativity(_) => "sweep-cooperativity",
            Command::SweepTemperature(_) => "sweep-temperature",
            Command::Spectrum(_) => "spectrum",
            Command::Detect { .. } => "detect",
            Command::DetectMap { .. } => "detect-map",
            Command::CavitySweep(_) => "cavity-sweep",
            Command::StabilityMap { .. } => "stability-map",
            Command::Analytic { .. } => "analytic",
            Command::Oracle { .. } => "oracle",
            Command::Validate { .. } => "validate",
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidConfig(_)
            | Error::Config { .. }
            | Error::UnknownKey(_)
            | Error::Expression(_)
            | Error::Sweep(_)
            | Error::Output(_)
            | Error::DomainError(_)
            | Error::FeedbackUnstable { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(&cli.common);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("omsq {}: {e}", cli.command.name());
            e.code()
        }
    }
}

fn init_logging(c: &Common) {
    let level = if c.quiet {
        log::LevelFilter::Error
    } else if c.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn resolve_params(c: &Common) -> Result<SystemParams, CliError> {
    let mut p = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Usage(format!("malformed config `{}`: {e}", path.display())))?
        }
        None => SystemParams::default(),
    };
    for kv in &c.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        p.set(k.trim(), parse_number(v)?)?;
    }
    if let Some(t) = &c.theta {
        p.theta = parse_number(t)?;
    }
    if let Some(g) = &c.gain {
        p.gain = parse_number(g)?;
    }
    p.validate()?;
    Ok(p)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let params = resolve_params(c)?;
    let start = Instant::now();
    let text = with_threads(c.threads, || produce(&cli.command, &params, c))??;
    log::info!("{} finished in {:.2?}", cli.command.name(), start.elapsed());
    let ext = match (&cli.command, c.format) {
        (Command::Validate { .. }, _) => "txt",
        (_, FormatArg::Csv) => "csv",
        (_, FormatArg::Jsonl) => "jsonl",
    };
    emit(&text, c.output.as_deref(), cli.command.name(), ext)
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(threads: Option<usize>, f: impl FnOnce() -> R) -> Result<R, CliError> {
    if threads.is_some_and(|n| n > 1) {
        log::warn!("built without the `parallel` feature; running on one thread");
    }
    Ok(f())
}

fn emit(text: &str, output: Option<&Path>, command: &str, ext: &str) -> Result<(), CliError> {
    let path = match (output, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(PathBuf::from(dir).join(format!("{command}.{ext}"))),
        (None, None) => None,
    };
    match path {
        Some(p) => {
            std::fs::write(&p, text)
                .map_err(|e| CliError::Usage(format!("cannot write output `{}`: {e}", p.display())))?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn timestamp(c: &Common) -> Option<u64> {
    if c.no_timestamp {
        return None;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn stamp(table: Table, c: &Common, command: &str) -> Table {
    let t = table.meta("command", command).meta("version", optomech_squeeze::sweep::VERSION);
    match timestamp(c) {
        Some(ts) => t.meta("timestamp", ts),
        None => t,
    }
}

fn produce(cmd: &Command, p: &SystemParams, c: &Common) -> Result<String, CliError> {
    let exec = Execution::Parallel;
    let format: Format = c.format.into();
    let name = cmd.name();
    let sweep = |param: &str, range: &Range, lo, hi, n, cols: &[&str], cavity: bool| -> Result<String, CliError> {
        let (lo, hi, n) = range.resolve(lo, hi, n)?;
        let spec = SweepSpec::new(name, param, lo, hi, n, *p)?;
        let mut result = if cavity {
            run_sweep(&spec, cols, exec, cavity_point)
        } else {
            run_sweep(&spec, cols, exec, mirror_point)
        };
        report_rows(&result);
        if let Some(ts) = timestamp(c) {
            result = result.with_timestamp(ts);
        }
        Ok(result.render(format)?)
    };

    match cmd {
        Command::SweepGain(r) => sweep("gain", r, 0.0, 0.49, 50, MIRROR_COLUMNS, false),
        Command::SweepCooperativity(r) => sweep("cooperativity", r, 1.0, 1000.0, 50, MIRROR_COLUMNS, false),
        Command::SweepTemperature(r) => sweep("temperature", r, 0.0, 0.02, 21, MIRROR_COLUMNS, false),
        Command::CavitySweep(r) => sweep("gain", r, 0.0, 0.49, 50, CAVITY_COLUMNS, true),
        Command::Spectrum(r) => {
            let omegas = r.grid(-1.0, 1.0, 201)?;
            let ss = stable_state(p)?;
            let rows = exec.map(&omegas, |&w| spectrum(w, &ss, p).map(|s| vec![w, s.s_q, s.s_p]));
            let mut t = Table::new(&["omega", "s_q", "s_p"]);
            t.rows = rows.into_iter().collect::<Result<_, _>>()?;
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::Detect { phi, range } => {
            let phi = parse_number(phi)?;
            let omegas = range.grid(-0.1, 0.1, 201)?;
            let ss = stable_state(p)?;
            let rows = exec.map(&omegas, |&w| spectrum_zout(w, phi, &ss, p).map(|s| vec![w, s]));
            let mut t = Table::new(&["omega", "s_zout"]).meta("phi", phi);
            t = match find_band(phi, &ss, p)? {
                Some(b) => t.meta("band_half_width", b.half_width()).meta("band_min", b.min_s),
                None => t.meta("band_half_width", "none"),
            };
            t.rows = rows.into_iter().collect::<Result<_, _>>()?;
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::DetectMap { range, phi_points } => {
            let omegas = range.grid(-0.1, 0.1, 101)?;
            if *phi_points < 1 {
                return Err(CliError::Usage("--phi-points must be at least 1".into()));
            }
            let phis: Vec<f64> = (0..*phi_points)
                .map(|i| if *phi_points == 1 { 0.0 } else { std::f64::consts::PI * i as f64 / (*phi_points - 1) as f64 })
                .collect();
            let ss = stable_state(p)?;
            let map = detection_map(&omegas, &phis, &ss, p, exec)?;
            let mut t = Table::new(&["omega", "phi", "s_zout"]);
            for (pi, &phi) in map.phis.iter().enumerate() {
                for (wi, &w) in map.omegas.iter().enumerate() {
                    t.rows.push(vec![w, phi, map.get(pi, wi)]);
                }
            }
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::StabilityMap { range, c_from, c_to, c_points } => {
            let gains = range.grid(0.0, 1.0, 51)?;
            if *c_points < 2 || !(*c_from > 0.0 && c_from < c_to) {
                return Err(CliError::Usage("cooperativity range needs 0 < --c-from < --c-to and --c-points >= 2".into()));
            }
            let (l0, l1) = (c_from.ln(), c_to.ln());
            let coops: Vec<f64> = (0..*c_points).map(|i| (l0 + (l1 - l0) * i as f64 / (*c_points - 1) as f64).exp()).collect();
            let cells: Vec<(f64, f64)> = gains.iter().flat_map(|&g| coops.iter().map(move |&k| (g, k))).collect();
            let rows = exec.map(&cells, |&(g, k)| {
                let q = p.with_gain(g).with_cooperativity(k);
                let ss = solve_steady_state(&q)?;
                let rh = routh_hurwitz(&q, &ss);
                let abscissa = spectral_abscissa(&build_drift(&ss, &q).drift);
                Ok::<_, Error>(vec![g, k, if rh.stable { 1.0 } else { 0.0 }, rh.margin(), abscissa])
            });
            let mut t = Table::new(&["gain", "cooperativity", "stable", "margin", "spectral_abscissa"]);
            t.rows = rows.into_iter().collect::<Result<_, _>>()?;
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::Analytic { range, eta } => {
            let gains = range.grid(0.3, 0.49, 20)?;
            let rows = exec.map(&gains, |&g| {
                let base = p.with_gain(g);
                let ss = solve_steady_state(&base)?;
                let q = base.with_theta(optimal_theta(ss.g)?);
                let inputs = AdiabaticInputs::new(&q, &ss, *eta)?;
                Ok::<_, Error>(vec![
                    g,
                    q.theta,
                    adiabatic_variance_p(&inputs)?,
                    adiabatic_variance_p_approx(ss.n_th_c, ss.n_th_m),
                    variance(&ss, &q, Quadrature::P)?,
                    feedback_variance_p(&inputs)?,
                ])
            });
            let mut t = Table::new(&["gain", "theta_opt", "closed_form", "near_threshold", "full", "with_feedback"])
                .meta("eta", eta);
            t.rows = rows.into_iter().collect::<Result<_, _>>()?;
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::Oracle { dt, duration, burn_in, trajectories, relaxation_times } => {
            let ss = solve_steady_state(p)?;
            let dm = build_drift(&ss, p);
            let mut cfg = SimConfig::auto(&dm, relaxation_times / *trajectories.max(&1) as f64, *trajectories, c.seed);
            cfg.dt = dt.unwrap_or(cfg.dt);
            cfg.duration = duration.unwrap_or(cfg.duration);
            cfg.burn_in = burn_in.unwrap_or(cfg.burn_in);
            log::info!("oracle: {cfg:?}");
            let est = simulate(&dm, &cfg, exec)?;
            let cov = steady_covariance(&dm)?;
            let (zq, zp) = est.z_scores(cov.var_q(), cov.var_p());
            let mut t = Table::new(&["var_q", "var_p", "stderr_q", "stderr_p", "lyapunov_q", "lyapunov_p", "z_q", "z_p"])
                .meta("dt", cfg.dt)
                .meta("duration", cfg.duration)
                .meta("burn_in", cfg.burn_in)
                .meta("trajectories", cfg.n_traj)
                .meta("seed", cfg.seed);
            t.rows.push(vec![est.var_q, est.var_p, est.stderr_q, est.stderr_p, cov.var_q(), cov.var_p(), zq, zp]);
            Ok(stamp(t, c, name).render(format)?)
        }
        Command::Validate { stability_draws, analytic_draws, sde_draws } => {
            let cfg = ValidationConfig {
                seed: c.seed,
                stability_draws: *stability_draws,
                analytic_draws: *analytic_draws,
                sde_draws: *sde_draws,
                ..Default::default()
            };
            let report = validate(&cfg, exec)?;
            let mut text = format!("validate seed = {}\n", cfg.seed);
            for (k, d) in report.sde.iter().enumerate() {
                text.push_str(&format!(
                    "sde draw {k:>2}: var_p {:.5} ± {:.5} vs {:.5} (z = {:+.2})\n",
                    d.estimate.var_p, d.estimate.stderr_p, d.lyapunov[1], d.z[1]
                ));
            }
            text.push_str(&report.summary());
            if report.passed() {
                Ok(text)
            } else {
                print!("{text}");
                Err(CliError::Numerical("validation checks failed".into()))
            }
        }
    }
}

fn stable_state(p: &SystemParams) -> Result<optomech_squeeze::SteadyState, CliError> {
    let ss = solve_steady_state(p)?;
    let rh = routh_hurwitz(p, &ss);
    if !rh.stable {
        return Err(Error::UnstableSystem { margin: rh.margin() }.into());
    }
    Ok(ss)
}

fn report_rows(result: &SweepResult) {
    let mut seen = std::collections::BTreeSet::new();
    for row in &result.rows {
        for w in &row.warnings {
            if seen.insert(w.clone()) {
                log::warn!("{} = {}: {w}", result.header.parameter, row.value);
            }
        }
    }
    let unstable = result.rows.iter().filter(|r| r.outputs.is_none()).count();
    if unstable > 0 {
        log::warn!("{unstable} of {} points flagged unstable or failed", result.rows.len());
    }
}
