//! Command-line parsing and validation.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vortexpair::profiles::BUILTIN_NAMES;
use vortexpair::{Interpolation, StreamMethod};

#[derive(Debug, Parser)]
#[command(name = "vortexpair", version, about = "Steady vortex pairs by energy maximization over rearrangements")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Maximize the energy over rearrangements of a profile at a given impulse.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Evolve a vorticity field under the 2D Euler equations.
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Perturb a maximizer and track its distance to the translated orbit.
    #[command(allow_negative_numbers = true)]
    Stability(StabilityArgs),
    /// Concentration and decay diagnostics for one VPF file or a directory of them.
    #[command(allow_negative_numbers = true)]
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Cell counts `nx,ny`. Defaults to 64,32 for builtins; VPF inputs carry their own.
    #[arg(long, value_name = "NX,NY")]
    grid: Option<String>,
    /// Strip extent `L,Z` for `[-L, L] x (0, Z)`. Defaults to 4,4 for builtins.
    #[arg(long, value_name = "L,Z")]
    domain: Option<String>,
    /// `builtin:NAME` or a VPF file path.
    #[arg(long, default_value = "builtin:patch")]
    profile: String,
    /// Exponent of the `L^p` part of the perturbation norm.
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    /// Report file of `key=value` lines; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InterpArg {
    Cubic,
    Bilinear,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Target impulse.
    #[arg(long)]
    impulse: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol_energy: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Skip Steiner symmetrization of the iterates.
    #[arg(long)]
    no_steiner: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Fft)]
    method: MethodArg,
    /// Relative impulse step of the secant multiplier used for the virial gap.
    #[arg(long, default_value_t = 0.1)]
    secant_step: f64,
    /// Output VPF file for the maximizer.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration log, one `key=value` record per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TimeArgs {
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Final time.
    #[arg(long = "t-end", default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 10)]
    record_every: usize,
    #[arg(long, value_enum, default_value_t = InterpArg::Cubic)]
    interp: InterpArg,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    time: TimeArgs,
    /// Directory for VPF snapshots and their `index.txt`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    time: TimeArgs,
    /// Representative maximizer as a VPF file. Without it the profile is solved first.
    #[arg(long)]
    rep: Option<PathBuf>,
    /// Impulse for the solve; defaults to the profile's own impulse.
    #[arg(long)]
    impulse: Option<f64>,
    #[arg(long)]
    no_steiner: bool,
    /// Comma-separated perturbation sizes.
    #[arg(long, default_value = "0,1e-2,5e-3,2.5e-3")]
    deltas: String,
    /// Share of the perturbation taken by seeded noise, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// VPF file or directory of VPF files (read in name order).
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated radius ladder.
    #[arg(long, default_value = "0.25,0.5,1,2")]
    radii: String,
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Where the initial vorticity comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Builtin(String),
    File(PathBuf),
}

/// Grid settings; `None` entries take the input's or the builtin default.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub cells: Option<(usize, usize)>,
    pub extent: Option<(f64, f64)>,
}

pub const DEFAULT_CELLS: (usize, usize) = (64, 32);
pub const DEFAULT_EXTENT: (f64, f64) = (4.0, 4.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub impulse: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub steiner: bool,
    pub method: StreamMethod,
    pub secant_step: f64,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeOptions {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub interpolation: Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub time: TimeOptions,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions {
    pub time: TimeOptions,
    pub rep: Option<PathBuf>,
    pub impulse: Option<f64>,
    pub steiner: bool,
    pub deltas: Vec<f64>,
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub input: PathBuf,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Solve(SolveOptions),
    Evolve(EvolveOptions),
    Stability(StabilityOptions),
    Diagnose(DiagnoseOptions),
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    pub profile: ProfileSource,
    pub p: f64,
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub enum ConfigError {
    /// Usage error or help/version request from the argument parser.
    Usage(clap::Error),
    /// Every invalid flag, one message each.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Usage(e) => write!(f, "{e}"),
            ConfigError::Invalid(msgs) => {
                writeln!(f, "invalid configuration:")?;
                for m in msgs {
                    writeln!(f, "  {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Collects messages for every invalid flag.
#[derive(Default)]
struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn positive(&mut self, flag: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.errors.push(format!("--{flag}: must be a finite number > 0, got {v}"));
        }
    }

    fn exponent(&mut self, v: f64) {
        if !(v > 2.0 && v.is_finite()) {
            self.errors.push(format!("--p: must satisfy 2 < p < inf, got {v}"));
        }
    }

    fn list(&mut self, flag: &str, s: &str, min: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for part in s.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) if v >= min && v.is_finite() => out.push(v),
                _ => {
                    self.errors.push(format!("--{flag}: entry {part:?} must be a number >= {min}"));
                }
            }
        }
        out
    }

    fn pair<T: std::str::FromStr + Copy>(&mut self, flag: &str, s: &Option<String>, ok: impl Fn(T) -> bool) -> Option<(T, T)> {
        let s = s.as_ref()?;
        let parts: Vec<&str> = s.split(',').collect();
        let parsed: Vec<Option<T>> = parts.iter().map(|p| p.trim().parse::<T>().ok().filter(|&v| ok(v))).collect();
        match parsed.as_slice() {
            [Some(a), Some(b)] => Some((*a, *b)),
            _ => {
                self.errors.push(format!("--{flag}: expected two positive values `a,b`, got {s:?}"));
                None
            }
        }
    }

    fn common(&mut self, c: &Common) -> (GridSpec, ProfileSource) {
        let cells = self.pair::<usize>("grid", &c.grid, |v| v > 0);
        let extent = self.pair::<f64>("domain", &c.domain, |v| v > 0.0 && v.is_finite());
        self.exponent(c.p);
        let profile = match c.profile.strip_prefix("builtin:") {
            Some(name) => {
                if !BUILTIN_NAMES.contains(&name) {
                    self.errors.push(format!("--profile: unknown builtin {name:?} (known: {})", BUILTIN_NAMES.join(", ")));
                }
                ProfileSource::Builtin(name.to_string())
            }
            None if c.profile.is_empty() => {
                self.errors.push("--profile: empty path".into());
                ProfileSource::File(PathBuf::new())
            }
            None => ProfileSource::File(PathBuf::from(&c.profile)),
        };
        (GridSpec { cells, extent }, profile)
    }

    fn time(&mut self, t: &TimeArgs) -> TimeOptions {
        self.positive("dt", t.dt);
        self.positive("t-end", t.t_end);
        if t.record_every == 0 {
            self.errors.push("--record-every: must be >= 1".into());
        }
        TimeOptions {
            dt: t.dt,
            t_end: t.t_end,
            record_every: t.record_every,
            interpolation: match t.interp {
                InterpArg::Cubic => Interpolation::Cubic,
                InterpArg::Bilinear => Interpolation::Bilinear,
            },
        }
    }

    fn finish(self, cfg: RunConfig) -> Result<RunConfig, ConfigError> {
        if self.errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(self.errors))
        }
    }
}

/// Parses and validates `argv` (including the program name).
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ConfigError::Usage)?;
    let mut ck = Checker::default();
    match cli.command {
        Cmd::Solve(a) => {
            let (grid, profile) = ck.common(&a.common);
            let impulse = match a.impulse {
                Some(v) => {
                    ck.positive("impulse", v);
                    v
                }
                None => {
                    ck.errors.push("--impulse: required for solve".into());
                    f64::NAN
                }
            };
            ck.positive("tol-energy", a.tol_energy);
            if a.max_iter == 0 {
                ck.errors.push("--max-iter: must be >= 1".into());
            }
            if !(a.secant_step > 0.0 && a.secant_step < 1.0) {
                ck.errors.push(format!("--secant-step: must lie in (0, 1), got {}", a.secant_step));
            }
            let cmd = Command::Solve(SolveOptions {
                impulse,
                tol_energy: a.tol_energy,
                max_iter: a.max_iter,
                steiner: !a.no_steiner,
                method: match a.method {
                    MethodArg::Fft => StreamMethod::Fft,
                    MethodArg::Direct => StreamMethod::Direct,
                },
                secant_step: a.secant_step,
                out: a.out,
                trace: a.trace,
            });
            ck.finish(RunConfig { command: cmd, grid, profile, p: a.common.p, report: a.common.report })
        }
        Cmd::Evolve(a) => {
            let (grid, profile) = ck.common(&a.common);
            let time = ck.time(&a.time);
            let cmd = Command::Evolve(EvolveOptions { time, out_dir: a.out_dir });
            ck.finish(RunConfig { command: cmd, grid, profile, p: a.common.p, report: a.common.report })
        }
        Cmd::Stability(a) => {
            let (grid, profile) = ck.common(&a.common);
            let time = ck.time(&a.time);
            if let Some(v) = a.impulse {
                ck.positive("impulse", v);
            }
            let deltas = ck.list("deltas", &a.deltas, 0.0);
            if !(0.0..=1.0).contains(&a.noise) {
                ck.errors.push(format!("--noise: must lie in [0, 1], got {}", a.noise));
            }
            let cmd = Command::Stability(StabilityOptions {
                time,
                rep: a.rep,
                impulse: a.impulse,
                steiner: !a.no_steiner,
                deltas,
                noise: a.noise,
                seed: a.seed,
            });
            ck.finish(RunConfig { command: cmd, grid, profile, p: a.common.p, report: a.common.report })
        }
        Cmd::Diagnose(a) => {
            ck.exponent(a.p);
            let radii = ck.list("radii", &a.radii, 0.0);
            let cmd = Command::Diagnose(DiagnoseOptions { input: a.input, radii });
            let grid = GridSpec { cells: None, extent: None };
            ck.finish(RunConfig { command: cmd, grid, profile: ProfileSource::Builtin(String::new()), p: a.p, report: a.report })
        }
    }
}
