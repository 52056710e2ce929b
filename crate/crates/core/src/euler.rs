//! Semi-Lagrangian transport of nonnegative vorticity by its own half-plane
//! velocity, conservation bookkeeping, and the orbital stability experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::greens::{GreensOperator, VelocityField};
use crate::grid::{Domain, Field};

/// Interpolation used at departure points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Bilinear,
    /// Tensor-product four-point Lagrange.
    #[default]
    Cubic,
}

/// Velocity used along the backward characteristic within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityTime {
    /// The velocity at the start of the step.
    Frozen,
    /// Linear extrapolation from the two most recent velocities.
    #[default]
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerConfig {
    pub dt: f64,
    /// Exponent of the `𝔛ᵖ` norm in the recorded series.
    pub p: f64,
    pub interpolation: Interpolation,
    pub velocity_time: VelocityTime,
}

impl EulerConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, p: 3.0, interpolation: Interpolation::default(), velocity_time: VelocityTime::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be finite and > 2, got {}", self.p)));
        }
        Ok(())
    }
}

/// Vorticity at one time plus the invariants it started with.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub omega: Field,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub energy0: f64,
    pub impulse0: f64,
    pub mass0: f64,
    /// Set once any step ran with `max|u| dt > min(h1, h2)`.
    pub cfl_warning: bool,
    /// Total mass removed by clamping negative interpolants.
    pub clamped_mass: f64,
    /// Total mass removed from the outermost cells at the lateral and top edges.
    pub outflow_mass: f64,
    prev_velocity: Option<(VelocityField, f64)>,
}

/// Invariants at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationRecord {
    pub t: f64,
    pub energy: f64,
    pub impulse: f64,
    pub mass: f64,
    pub xp_norm: f64,
}

/// Recorded series of one run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<ConservationRecord>,
}

impl Trajectory {
    fn max_rel(&self, f: impl Fn(&ConservationRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let base = f(first);
        if base == 0.0 {
            return self.records.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
        }
        self.records.iter().map(|r| ((f(r) - base) / base).abs()).fold(0.0, f64::max)
    }

    /// `max_t |E(t) - E(0)| / E(0)`.
    pub fn energy_drift(&self) -> f64 {
        self.max_rel(|r| r.energy)
    }

    pub fn impulse_drift(&self) -> f64 {
        self.max_rel(|r| r.impulse)
    }

    pub fn mass_drift(&self) -> f64 {
        self.max_rel(|r| r.mass)
    }
}

/// Time stepper bound to one grid.
#[derive(Debug, Clone)]
pub struct Euler {
    op: GreensOperator,
    cfg: EulerConfig,
}

impl Euler {
    pub fn new(domain: Domain, cfg: EulerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { op: GreensOperator::new(domain), cfg })
    }

    pub fn with_operator(op: GreensOperator, cfg: EulerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { op, cfg })
    }

    pub fn operator(&self) -> &GreensOperator {
        &self.op
    }

    pub fn config(&self) -> &EulerConfig {
        &self.cfg
    }

    /// Starting state; rejects vorticity of either sign.
    pub fn init(&self, omega: Field) -> Result<EvolutionState> {
        if omega.domain() != self.op.domain() {
            return Err(Error::GridMismatch);
        }
        omega.ensure_nonneg()?;
        let energy0 = self.op.energy(&omega)?;
        Ok(EvolutionState {
            impulse0: omega.impulse(),
            mass0: omega.integrate(),
            energy0,
            omega,
            t: 0.0,
            dt: self.cfg.dt,
            steps: 0,
            cfl_warning: false,
            clamped_mass: 0.0,
            outflow_mass: 0.0,
            prev_velocity: None,
        })
    }

    pub fn record(&self, s: &EvolutionState) -> Result<ConservationRecord> {
        Ok(ConservationRecord {
            t: s.t,
            energy: self.op.energy(&s.omega)?,
            impulse: s.omega.impulse(),
            mass: s.omega.integrate(),
            xp_norm: s.omega.xp_norm(self.cfg.p)?,
        })
    }

    /// Advances by `s.dt`.
    pub fn step(&self, s: &mut EvolutionState) -> Result<()> {
        let dt = s.dt;
        self.step_by(s, dt)
    }

    fn step_by(&self, s: &mut EvolutionState, dt: f64) -> Result<()> {
        let d = *s.omega.domain();
        let vel = self.op.velocity(&s.omega)?;
        if vel.max_speed() * dt > d.h1().min(d.h2()) {
            s.cfl_warning = true;
        }
        // u(t_n + τ) = u_n + τ·slope; the trace runs from t_n + dt back to t_n.
        let slope = match (&s.prev_velocity, self.cfg.velocity_time) {
            (Some((prev, prev_dt)), VelocityTime::Extrapolated) => Some((prev, *prev_dt)),
            _ => None,
        };
        let sample = |x: [f64; 2], tau: f64| -> [f64; 2] {
            let u = vel.sample_linear(x);
            match slope {
                Some((prev, pdt)) => {
                    let v = prev.sample_linear(x);
                    let c = tau / pdt;
                    [u[0] + c * (u[0] - v[0]), u[1] + c * (u[1] - v[1])]
                }
                None => u,
            }
        };

        let omega = &s.omega;
        let mut next = Field::zeros(d);
        let mut clamped = 0.0;
        let area = d.cell_area();
        for j in 0..d.ny() {
            for i in 0..d.nx() {
                let x = d.center(i, j);
                let k1 = sample(x, dt);
                let k2 = sample(axpy(x, -0.5 * dt, k1), 0.5 * dt);
                let k3 = sample(axpy(x, -0.5 * dt, k2), 0.5 * dt);
                let k4 = sample(axpy(x, -dt, k3), 0.0);
                let mut foot = [
                    x[0] - dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    x[1] - dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
                foot[1] = foot[1].abs();
                let v = match self.cfg.interpolation {
                    Interpolation::Bilinear => interp_bilinear(omega, foot),
                    Interpolation::Cubic => interp_cubic(omega, foot),
                };
                if v < 0.0 {
                    clamped -= v * area;
                    next.set(i, j, 0.0);
                } else {
                    next.set(i, j, v);
                }
            }
        }

        let (nx, ny) = (d.nx(), d.ny());
        let mut outflow = 0.0;
        for k in 0..d.len() {
            let (i, j) = d.cell(k);
            if i == 0 || i == nx - 1 || j == ny - 1 {
                outflow += next.values()[k] * area;
                next.values_mut()[k] = 0.0;
            }
        }

        s.omega = next;
        s.t += dt;
        s.steps += 1;
        s.clamped_mass += clamped;
        s.outflow_mass += outflow;
        s.prev_velocity = Some((vel, dt));
        Ok(())
    }

    /// Steps until `t_end`, recording invariants at the start, every
    /// `record_every` steps, and at the end. The last step is shortened to
    /// land on `t_end`.
    pub fn evolve(
        &self,
        s: &mut EvolutionState,
        t_end: f64,
        record_every: usize,
        mut on_record: impl FnMut(&EvolutionState, &ConservationRecord) -> Result<()>,
    ) -> Result<Trajectory> {
        if !(t_end > s.t && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time {t_end} must exceed current time {}", s.t)));
        }
        let every = record_every.max(1);
        let mut traj = Trajectory::default();
        let first = self.record(s)?;
        on_record(s, &first)?;
        traj.records.push(first);
        let mut since = 0;
        loop {
            let remaining = t_end - s.t;
            if remaining <= 1e-9 * s.dt {
                break;
            }
            let dt = if remaining < s.dt * (1.0 + 1e-9) { remaining } else { s.dt };
            self.step_by(s, dt)?;
            since += 1;
            let done = t_end - s.t <= 1e-9 * s.dt;
            if since == every || done {
                since = 0;
                let r = self.record(s)?;
                on_record(s, &r)?;
                traj.records.push(r);
            }
        }
        Ok(traj)
    }
}

#[inline]
fn axpy(x: [f64; 2], a: f64, u: [f64; 2]) -> [f64; 2] {
    [x[0] + a * u[0], x[1] + a * u[1]]
}

/// Cell value with the even extension below the axis and zero beyond the
/// other edges.
#[inline]
fn ghost(f: &Field, i: isize, j: isize) -> f64 {
    let d = f.domain();
    let j = if j < 0 { -j - 1 } else { j };
    if i < 0 || i >= d.nx() as isize || j >= d.ny() as isize {
        return 0.0;
    }
    f.get(i as usize, j as usize)
}

#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Lattice coordinates of `x` relative to the cell centers.
#[inline]
fn lattice(d: &Domain, x: [f64; 2]) -> (isize, f64, isize, f64) {
    let s1 = (x[0] + d.half_width()) / d.h1() - 0.5;
    let s2 = x[1] / d.h2() - 0.5;
    let (i0, j0) = (s1.floor(), s2.floor());
    (i0 as isize, s1 - i0, j0 as isize, s2 - j0)
}

pub(crate) fn interp_bilinear(f: &Field, x: [f64; 2]) -> f64 {
    let (i0, t1, j0, t2) = lattice(f.domain(), x);
    (1.0 - t2) * ((1.0 - t1) * ghost(f, i0, j0) + t1 * ghost(f, i0 + 1, j0))
        + t2 * ((1.0 - t1) * ghost(f, i0, j0 + 1) + t1 * ghost(f, i0 + 1, j0 + 1))
}

pub(crate) fn interp_cubic(f: &Field, x: [f64; 2]) -> f64 {
    let (i0, t1, j0, t2) = lattice(f.domain(), x);
    let (w1, w2) = (cubic_weights(t1), cubic_weights(t2));
    let mut acc = 0.0;
    for (b, wb) in w2.iter().enumerate() {
        let mut row = 0.0;
        for (a, wa) in w1.iter().enumerate() {
            row += wa * ghost(f, i0 + a as isize - 1, j0 + b as isize - 1);
        }
        acc += wb * row;
    }
    acc
}

/// `min_k ‖ω - shift_k(rep)‖_𝔛ᵖ` over whole-cell shifts along `x1`.
pub fn orbit_distance(omega: &Field, rep: &Field, p: f64) -> Result<f64> {
    Ok(orbit_distance_with_shift(omega, rep, p)?.0)
}

/// The minimum of [`orbit_distance`] together with the minimizing shift.
pub fn orbit_distance_with_shift(omega: &Field, rep: &Field, p: f64) -> Result<(f64, isize)> {
    omega.same_grid(rep)?;
    let nx = omega.domain().nx() as isize;
    let mut best = (omega.sub(rep)?.xp_norm(p)?, 0);
    for k in 1..nx {
        for s in [k, -k] {
            let dist = omega.sub(&rep.shift_x1(s))?.xp_norm(p)?;
            if dist < best.0 {
                best = (dist, s);
            }
        }
    }
    Ok(best)
}

/// `rep` translated by `s` cells along `x1` (any real `s`), by four-point
/// Lagrange interpolation along each row with zero outside the grid. Negative
/// interpolants are clamped.
pub fn shift_x1_fractional(rep: &Field, s: f64) -> Field {
    let d = *rep.domain();
    let k = s.floor();
    let t = s - k;
    let k = k as isize;
    if t == 0.0 {
        return rep.shift_x1(k);
    }
    // Value at column i comes from source position i - s = (i - k - 1) + (1 - t).
    let w = cubic_weights(1.0 - t);
    let mut out = Field::zeros(d);
    for j in 0..d.ny() as isize {
        for i in 0..d.nx() as isize {
            let base = i - k - 1;
            let v: f64 = (0..4).map(|a| w[a] * ghost(rep, base + a as isize - 1, j)).sum();
            out.set(i as usize, j as usize, v.max(0.0));
        }
    }
    out
}

/// Orbit distance over all real `x1` shifts: the best whole-cell shift is
/// refined by golden-section search over fractional shifts within one cell.
pub fn orbit_distance_continuous(omega: &Field, rep: &Field, p: f64) -> Result<f64> {
    let (whole, k) = orbit_distance_with_shift(omega, rep, p)?;
    let dist = |s: f64| -> Result<f64> { omega.sub(&shift_x1_fractional(rep, s))?.xp_norm(p) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (k as f64 - 1.0, k as f64 + 1.0);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (dist(c)?, dist(e)?);
    for _ in 0..40 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = dist(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = dist(e)?;
        }
    }
    Ok(whole.min(fc).min(fe))
}

/// Settings for [`stability_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub euler: EulerConfig,
    pub t_end: f64,
    pub record_every: usize,
    /// Share of the perturbation taken by seeded nonnegative noise on the
    /// support of `rep`, in `[0, 1]`.
    pub noise: f64,
    pub seed: u64,
}

impl StabilityConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { euler: EulerConfig::new(dt), t_end, record_every: 1, noise: 0.0, seed: 0 }
    }
}

/// Orbit distances at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub whole_cell: f64,
    pub continuous: f64,
}

/// Orbit distance over one perturbed run.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub delta: f64,
    /// `‖ω(0) - rep‖_𝔛ᵖ`, equal to `delta` up to roundoff.
    pub initial_norm: f64,
    /// Orbit distance of `ω(0)` over whole-cell shifts.
    pub initial_distance: f64,
    /// Largest recorded orbit distance over whole-cell shifts.
    pub max_distance: f64,
    /// Largest recorded orbit distance over all real shifts.
    pub max_distance_continuous: f64,
    pub series: Vec<OrbitSample>,
    pub trajectory: Trajectory,
    pub clamped_mass: f64,
    pub outflow_mass: f64,
    pub cfl_warning: bool,
}

/// Nonnegative field at `𝔛ᵖ` distance `delta` from `rep`: a blend of `rep`
/// with its one-row upward shift, optionally mixed with seeded noise.
pub fn perturbation(rep: &Field, delta: f64, p: f64, noise: f64, seed: u64) -> Result<Field> {
    rep.ensure_nonneg()?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidParameter(format!("noise share must lie in [0, 1], got {noise}")));
    }
    if delta == 0.0 {
        return Ok(rep.clone());
    }
    let lift = rep.shift_x2(1).sub(rep)?;
    let lift_norm = lift.xp_norm(p)?;
    if lift_norm == 0.0 {
        return Err(Error::InvalidParameter("cannot perturb a zero field".into()));
    }
    let mut dir = lift.scaled(1.0 - noise);
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = Field::from_values(
            *rep.domain(),
            rep.values().iter().map(|&v| if v > 0.0 { rng.gen::<f64>() } else { 0.0 }).collect(),
        )?;
        let eta = eta.scaled(lift_norm / eta.xp_norm(p)?);
        dir = dir.combine(1.0, &eta, noise)?;
    }
    // rep + t·dir ≥ 0 as long as t·(1 - noise) ≤ 1.
    let t = delta / dir.xp_norm(p)?;
    if t * (1.0 - noise) > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} too large for a nonnegative row blend (limit {})",
            dir.xp_norm(p)? / (1.0 - noise)
        )));
    }
    Ok(rep.combine(1.0, &dir, t)?.map(|v| v.max(0.0)))
}

/// Evolves `omega0` and tracks its orbit distance to `rep`.
pub fn stability_run(euler: &Euler, rep: &Field, omega0: Field, t_end: f64, record_every: usize) -> Result<StabilityReport> {
    let p = euler.config().p;
    let initial_norm = omega0.sub(rep)?.xp_norm(p)?;
    let mut state = euler.init(omega0)?;
    let mut series = Vec::new();
    let trajectory = euler.evolve(&mut state, t_end, record_every, |s, r| {
        series.push(OrbitSample {
            t: r.t,
            whole_cell: orbit_distance(&s.omega, rep, p)?,
            continuous: orbit_distance_continuous(&s.omega, rep, p)?,
        });
        Ok(())
    })?;
    Ok(StabilityReport {
        delta: initial_norm,
        initial_norm,
        initial_distance: series[0].whole_cell,
        max_distance: series.iter().map(|s| s.whole_cell).fold(0.0, f64::max),
        max_distance_continuous: series.iter().map(|s| s.continuous).fold(0.0, f64::max),
        series,
        trajectory,
        clamped_mass: state.clamped_mass,
        outflow_mass: state.outflow_mass,
        cfl_warning: state.cfl_warning,
    })
}

/// Perturbs `rep` by `delta` and reports the largest orbit distance up to `cfg.t_end`.
pub fn stability_experiment(euler: &Euler, rep: &Field, delta: f64, cfg: &StabilityConfig) -> Result<StabilityReport> {
    let omega0 = perturbation(rep, delta, euler.config().p, cfg.noise, cfg.seed)?;
    let mut report = stability_run(euler, rep, omega0, cfg.t_end, cfg.record_every)?;
    report.delta = delta;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(d: Domain, c: [f64; 2], r: f64) -> Field {
        Field::from_fn(d, |x1, x2| {
            let q = ((x1 - c[0]).powi(2) + (x2 - c[1]).powi(2)) / (r * r);
            if q < 1.0 { (1.0 - q).powi(3) } else { 0.0 }
        })
    }

    #[test]
    fn zero_stays_zero() {
        let d = Domain::new(2.0, 2.0, 32, 16).unwrap();
        let e = Euler::new(d, EulerConfig::new(0.01)).unwrap();
        let mut s = e.init(Field::zeros(d)).unwrap();
        let traj = e.evolve(&mut s, 0.05, 1, |_, _| Ok(())).unwrap();
        assert!(s.omega.is_zero());
        assert!(traj.records.iter().all(|r| r.energy == 0.0 && r.mass == 0.0));
        assert_eq!(traj.records.len(), 6);
    }

    #[test]
    fn rejects_two_signed_vorticity() {
        let d = Domain::new(2.0, 2.0, 16, 8).unwrap();
        let e = Euler::new(d, EulerConfig::new(0.01)).unwrap();
        let mut w = bump(d, [0.0, 1.0], 0.5);
        w.set(3, 3, -1e-3);
        assert!(matches!(e.init(w), Err(Error::Negative { .. })));
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let d = Domain::new(2.0, 2.0, 16, 16).unwrap();
        let quad = Field::from_fn(d, |x1, x2| 1.0 + x1 * x2 + 0.5 * x1 * x1 * x1 - x2 * x2);
        let lin = Field::from_fn(d, |x1, x2| 2.0 + x1 - 3.0 * x2);
        for x in [[0.13f64, 0.77], [-1.01, 1.3], [0.5, 1.0]] {
            let exact = 1.0 + x[0] * x[1] + 0.5 * x[0].powi(3) - x[1] * x[1];
            assert!((interp_cubic(&quad, x) - exact).abs() < 1e-12);
            assert!((interp_bilinear(&lin, x) - (2.0 + x[0] - 3.0 * x[1])).abs() < 1e-12);
        }
        // Cell centers are reproduced exactly.
        let c = d.center(5, 7);
        assert_eq!(interp_cubic(&quad, c), quad.get(5, 7));
    }

    #[test]
    fn translation_equivariance() {
        let d = Domain::new(2.0, 2.0, 64, 32).unwrap();
        let w = bump(d, [0.0, 0.9], 0.5);
        let e = Euler::new(d, EulerConfig::new(0.02)).unwrap();
        let mut a = e.init(w.clone()).unwrap();
        let mut b = e.init(w.shift_x1(3)).unwrap();
        for _ in 0..5 {
            e.step(&mut a).unwrap();
            e.step(&mut b).unwrap();
        }
        let diff = b.omega.sub(&a.omega.shift_x1(3)).unwrap();
        let err = diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err <= 1e-10, "max difference {err}");
    }

    #[test]
    fn mass_drift_per_step_is_small() {
        let d = Domain::new(2.0, 2.0, 128, 64).unwrap();
        let e = Euler::new(d, EulerConfig::new(0.01)).unwrap();
        let mut s = e.init(bump(d, [0.0, 1.0], 0.5)).unwrap();
        let mut m = s.omega.integrate();
        for _ in 0..5 {
            e.step(&mut s).unwrap();
            let m2 = s.omega.integrate();
            assert!(((m2 - m) / m).abs() <= 1e-4);
            m = m2;
        }
    }

    #[test]
    fn cfl_flag() {
        let d = Domain::new(2.0, 2.0, 32, 16).unwrap();
        let w = bump(d, [0.0, 1.0], 0.5).scaled(200.0);
        let e = Euler::new(d, EulerConfig::new(0.5)).unwrap();
        let mut s = e.init(w).unwrap();
        e.step(&mut s).unwrap();
        assert!(s.cfl_warning);
    }

    #[test]
    fn orbit_distance_cases() {
        let d = Domain::new(2.0, 2.0, 32, 16).unwrap();
        let rep = bump(d, [0.0, 1.0], 0.5);
        assert_eq!(orbit_distance(&rep, &rep, 3.0).unwrap(), 0.0);
        assert_eq!(orbit_distance(&rep.shift_x1(4), &rep, 3.0).unwrap(), 0.0);
        assert_eq!(orbit_distance(&rep.shift_x1(-2), &rep, 3.0).unwrap(), 0.0);

        // One extra cell far from the support: |I| + ‖·‖₁ + ‖·‖_p of a single cell.
        let (i, j, m) = (1, 14, 0.01);
        let a = d.cell_area();
        let mut w = rep.clone();
        w.set(i, j, m / a);
        let y = d.x2(j);
        let p: f64 = 3.0;
        let expected = m * y + m + m * a.powf(1.0 / p - 1.0);
        let got = orbit_distance(&w, &rep, p).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn perturbation_has_requested_norm() {
        let d = Domain::new(2.0, 2.0, 32, 16).unwrap();
        let rep = bump(d, [0.0, 1.0], 0.5);
        for (delta, noise) in [(1e-2, 0.0), (5e-3, 0.3), (0.0, 0.0)] {
            let w = perturbation(&rep, delta, 3.0, noise, 7).unwrap();
            assert!(w.is_nonneg());
            let n = w.sub(&rep).unwrap().xp_norm(3.0).unwrap();
            assert!((n - delta).abs() <= 1e-12 + 1e-10 * delta);
        }
        assert_eq!(perturbation(&rep, 1e-2, 3.0, 0.3, 7).unwrap(), perturbation(&rep, 1e-2, 3.0, 0.3, 7).unwrap());
    }

    #[test]
    fn stability_rejects_two_signed_start() {
        let d = Domain::new(2.0, 2.0, 16, 8).unwrap();
        let rep = bump(d, [0.0, 1.0], 0.5);
        let e = Euler::new(d, EulerConfig::new(0.01)).unwrap();
        let w = rep.combine(1.0, &Field::from_fn(d, |_, _| 1.0), -0.01).unwrap();
        assert!(stability_run(&e, &rep, w, 0.02, 1).is_err());
    }
}
