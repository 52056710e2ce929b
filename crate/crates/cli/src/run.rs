//! Subcommand drivers.

use std::fs;
use std::path::{Path, PathBuf};

use vortexpair::euler::{stability_experiment, EulerConfig, StabilityConfig};
use vortexpair::io::{read_vpf_file, write_index, write_vpf_file, IndexEntry, Report};
use vortexpair::optimizer::SolverConfig;
use vortexpair::{bound_report, cc_classify, CCThresholds, Domain, Error, Euler, Field, GreensOperator, Solver};

use crate::config::{
    Command, DiagnoseOptions, EvolveOptions, ProfileSource, RunConfig, SolveOptions, StabilityOptions, TimeOptions,
    DEFAULT_CELLS, DEFAULT_EXTENT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    NotConverged(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::NotConverged(_) => EXIT_NOT_CONVERGED,
            Failure::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::NotConverged(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Io(_) | Error::Format(_) | Error::Report(_) => Failure::Io(m),
            Error::Bracket(_) => Failure::NotConverged(m),
            _ => Failure::Config(m),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Outcome of a run that got as far as writing its report.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged { EXIT_OK } else { EXIT_NOT_CONVERGED }
    }
}

/// Runs the configured subcommand and writes its report.
pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let outcome = match &cfg.command {
        Command::Solve(o) => run_solve(cfg, o),
        Command::Evolve(o) => run_evolve(cfg, o),
        Command::Stability(o) => run_stability(cfg, o),
        Command::Diagnose(o) => run_diagnose(cfg, o),
    }?;
    match &cfg.report {
        Some(path) => outcome.report.write_file(path).map_err(|e| io_err(path, e))?,
        None => print!("{}", outcome.report),
    }
    Ok(outcome)
}

/// Initial vorticity for the configured profile and grid.
pub fn load_profile(cfg: &RunConfig) -> Result<Field, Failure> {
    match &cfg.profile {
        ProfileSource::Builtin(name) => {
            let (nx, ny) = cfg.grid.cells.unwrap_or(DEFAULT_CELLS);
            let (l, z) = cfg.grid.extent.unwrap_or(DEFAULT_EXTENT);
            Ok(vortexpair::profiles::builtin(name, Domain::new(l, z, nx, ny)?)?)
        }
        ProfileSource::File(path) => load_field(cfg, path),
    }
}

/// Reads a VPF file, checking it against any explicit grid flags.
fn load_field(cfg: &RunConfig, path: &Path) -> Result<Field, Failure> {
    let f = read_vpf_file(path).map_err(|e| io_err(path, e))?;
    let d = f.domain();
    if let Some((nx, ny)) = cfg.grid.cells {
        if (nx, ny) != (d.nx(), d.ny()) {
            return Err(Failure::Config(format!(
                "--grid {nx},{ny} does not match {} ({},{})",
                path.display(),
                d.nx(),
                d.ny()
            )));
        }
    }
    if let Some((l, z)) = cfg.grid.extent {
        if (l, z) != (d.half_width(), d.strip_height()) {
            return Err(Failure::Config(format!(
                "--domain {l},{z} does not match {} ({},{})",
                path.display(),
                d.half_width(),
                d.strip_height()
            )));
        }
    }
    Ok(f)
}

fn write_field(path: &Path, f: &Field) -> Result<(), Failure> {
    write_vpf_file(path, f).map_err(|e| io_err(path, e))
}

fn solver_config(cfg: &RunConfig, o: &SolveOptions) -> SolverConfig {
    let mut sc = SolverConfig::new(o.impulse);
    sc.p = cfg.p;
    sc.tol_energy = o.tol_energy;
    sc.max_iter = o.max_iter;
    sc.steiner = o.steiner;
    sc.method = o.method;
    sc
}

pub fn run_solve(cfg: &RunConfig, o: &SolveOptions) -> Result<Outcome, Failure> {
    let zeta0 = load_profile(cfg)?;
    let solver = Solver::new(&zeta0, solver_config(cfg, o))?;
    let mut trace = String::new();
    let sol = solver.run_from(solver.initial_state()?, |r| {
        trace.push_str(&r.to_string());
        trace.push('\n');
    })?;
    let s = &sol.state;

    let mut r = Report::new();
    r.set("converged", sol.converged)
        .set("iterations", s.iteration)
        .set_f64("lambda", s.lambda)
        .set_f64("energy", s.energy)
        .set_f64("impulse", s.impulse)
        .set_f64("impulse_target", o.impulse)
        .set_f64("mass", s.zeta.integrate())
        .set("kind", sol.kind.as_str())
        .set("defect", sol.defect)
        .set_f64("fv_residual", sol.fit.residual)
        .set("support_violations", sol.fit.support_violations);
    match solver.virial_check(&sol, o.secant_step) {
        Ok(v) => {
            r.set_f64("lambda_secant", v.lambda).set_f64("virial_gap", v.gap);
            match v.exact_gap {
                Some(g) => r.set_f64("virial_gap_exact", g),
                None => r.set("virial_gap_exact", "nan"),
            };
        }
        // The impulse bound is inactive, so there is no multiplier to test.
        Err(Error::InvalidParameter(_)) => {
            r.set("lambda_secant", "nan").set("virial_gap", "nan").set("virial_gap_exact", "nan");
        }
        Err(e) => return Err(e.into()),
    }
    if let Some(path) = &o.out {
        write_field(path, &s.zeta)?;
    }
    if let Some(path) = &o.trace {
        fs::write(path, trace).map_err(|e| io_err(path, e))?;
    }
    Ok(Outcome { report: r, converged: sol.converged })
}

fn euler_for(domain: Domain, p: f64, t: &TimeOptions) -> Result<Euler, Failure> {
    let mut ec = EulerConfig::new(t.dt);
    ec.p = p;
    ec.interpolation = t.interpolation;
    Ok(Euler::new(domain, ec)?)
}

pub fn run_evolve(cfg: &RunConfig, o: &EvolveOptions) -> Result<Outcome, Failure> {
    let omega0 = load_profile(cfg)?;
    let euler = euler_for(*omega0.domain(), cfg.p, &o.time)?;
    if let Some(dir) = &o.out_dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut state = euler.init(omega0)?;
    let mut index = Vec::new();
    let traj = euler.evolve(&mut state, o.time.t_end, o.time.record_every, |s, rec| {
        if let Some(dir) = &o.out_dir {
            let name = format!("snap_{:05}.vpf", index.len());
            write_vpf_file(dir.join(&name), &s.omega)?;
            index.push(IndexEntry { t: rec.t, file: name, energy: rec.energy, impulse: rec.impulse, mass: rec.mass });
        }
        Ok(())
    })?;
    if let Some(dir) = &o.out_dir {
        let path = dir.join("index.txt");
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_index(file, &index)?;
    }
    let last = traj.records.last().copied().expect("evolve records the initial state");
    let mut r = Report::new();
    r.set_f64("t_end", state.t)
        .set("steps", state.steps)
        .set("records", traj.records.len())
        .set_f64("energy_drift", traj.energy_drift())
        .set_f64("impulse_drift", traj.impulse_drift())
        .set_f64("mass_drift", traj.mass_drift())
        .set_f64("energy_final", last.energy)
        .set_f64("impulse_final", last.impulse)
        .set_f64("clamped_mass", state.clamped_mass)
        .set_f64("outflow_mass", state.outflow_mass)
        .set("cfl_warning", state.cfl_warning);
    Ok(Outcome { report: r, converged: true })
}

pub fn run_stability(cfg: &RunConfig, o: &StabilityOptions) -> Result<Outcome, Failure> {
    let mut r = Report::new();
    let rep = match &o.rep {
        Some(path) => load_field(cfg, path)?,
        None => {
            let zeta0 = load_profile(cfg)?;
            let mut sc = SolverConfig::new(o.impulse.unwrap_or_else(|| zeta0.impulse()));
            sc.p = cfg.p;
            sc.steiner = o.steiner;
            let sol = Solver::new(&zeta0, sc)?.run()?;
            r.set("rep_converged", sol.converged).set("rep_iterations", sol.state.iteration);
            if !sol.converged {
                return Ok(Outcome { report: r, converged: false });
            }
            sol.state.zeta
        }
    };
    rep.ensure_nonneg()?;
    let euler = euler_for(*rep.domain(), cfg.p, &o.time)?;
    let sc = StabilityConfig {
        euler: *euler.config(),
        t_end: o.time.t_end,
        record_every: o.time.record_every,
        noise: o.noise,
        seed: o.seed,
    };
    r.set_f64("rep_xp_norm", rep.xp_norm(cfg.p)?).set("runs", o.deltas.len());
    for (k, &delta) in o.deltas.iter().enumerate() {
        let s = stability_experiment(&euler, &rep, delta, &sc)?;
        r.set_f64(&format!("delta_{k}"), delta)
            .set_f64(&format!("initial_distance_{k}"), s.initial_distance)
            .set_f64(&format!("max_distance_{k}"), s.max_distance)
            .set_f64(&format!("max_distance_continuous_{k}"), s.max_distance_continuous)
            .set_f64(&format!("energy_drift_{k}"), s.trajectory.energy_drift())
            .set_f64(&format!("clamped_mass_{k}"), s.clamped_mass)
            .set(&format!("cfl_warning_{k}"), s.cfl_warning);
    }
    Ok(Outcome { report: r, converged: true })
}

/// VPF files under `input` in name order, or `input` itself.
fn vpf_inputs(input: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| io_err(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "vpf"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Config(format!("{}: no .vpf files", input.display())));
    }
    Ok(files)
}

pub fn run_diagnose(cfg: &RunConfig, o: &DiagnoseOptions) -> Result<Outcome, Failure> {
    let seq = vpf_inputs(&o.input)?
        .iter()
        .map(|p| load_field(cfg, p))
        .collect::<Result<Vec<_>, _>>()?;
    let cc = cc_classify(&seq, &o.radii, &CCThresholds::default())?;
    let mut r = Report::new();
    r.set("count", seq.len()).set("cc_label", cc.label).set("tail_start", cc.tail_start);
    if let Some(rs) = cc.compact_radius {
        r.set_f64("compact_radius", rs);
    }
    if let Some(split) = &cc.dichotomy {
        r.set_f64("dichotomy_radius", split.radius);
        if let (Some(a), Some(s)) = (split.alpha.last(), split.separation.last()) {
            r.set_f64("dichotomy_alpha", *a).set_f64("dichotomy_separation", *s);
        }
    }
    for (k, m) in cc.masses.iter().enumerate() {
        r.set_f64(&format!("mass_{k}"), *m);
    }

    let last = seq.last().expect("at least one input");
    let b = bound_report(&GreensOperator::new(*last.domain()), last, cfg.p)?;
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.16e}"));
    r.set("bound_high_altitude", opt(b.high_altitude))
        .set_f64("bound_growth", b.growth)
        .set_f64("bound_psi_over_x2", b.psi_over_x2)
        .set_f64("bound_grad_sup", b.grad_sup)
        .set_f64("bound_gradient", b.gradient)
        .set_f64("bound_steiner_tail_raw", b.steiner_tail_raw)
        .set_f64("bound_steiner_tail", b.steiner_tail)
        .set("tail_slope", opt(b.tail_slope))
        .set_f64("support_radius", b.support_radius);
    Ok(Outcome { report: r, converged: true })
}
