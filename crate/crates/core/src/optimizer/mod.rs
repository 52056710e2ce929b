//! Rearrangement ascent for the energy over nonnegative fields dominated by a
//! profile `ζ₀` with impulse at most `i₀`.
//!
//! Each iteration maximizes the linearization `∫ψξ - λI(ξ)` at the current
//! iterate, which cannot decrease the energy because the energy is convex.

mod fit;
mod linear;

pub use fit::{first_variation_residual, FirstVariationFit};
pub use linear::{linearized_max, shifted_stream, solve_lambda, LambdaOptions, LambdaSolution};

use std::fmt;

use crate::error::{Error, Result};
use crate::greens::{GreensOperator, StreamMethod};
use crate::grid::Field;
use crate::rearrange::{
    decreasing_rearrangement, rearrange_onto, rearrangement_defect, steiner_symmetrize, Profile, SteinerSpec,
};

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    /// Target impulse `i₀`.
    pub impulse: f64,
    /// Stop once the relative energy change of one iteration falls below this.
    pub tol_energy: f64,
    /// Relative impulse tolerance.
    pub tol_impulse: f64,
    /// Relative width of the final multiplier bracket.
    pub tol_lambda: f64,
    pub max_iter: usize,
    /// Steiner-symmetrize every iterate about the central column.
    pub steiner: bool,
    /// Blend bracketing solutions so the impulse constraint holds with equality.
    pub blend: bool,
    pub method: StreamMethod,
}

impl SolverConfig {
    pub fn new(impulse: f64) -> Self {
        Self {
            p: 3.0,
            impulse,
            tol_energy: 1e-8,
            tol_impulse: 1e-10,
            tol_lambda: 1e-15,
            max_iter: 500,
            steiner: true,
            blend: true,
            method: StreamMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.p > 2.0 && self.p.is_finite()) {
            bad.push(format!("p must be finite and > 2, got {}", self.p));
        }
        if !(self.impulse > 0.0 && self.impulse.is_finite()) {
            bad.push(format!("impulse must be > 0, got {}", self.impulse));
        }
        for (name, v) in [("tol_energy", self.tol_energy), ("tol_impulse", self.tol_impulse), ("tol_lambda", self.tol_lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.max_iter == 0 {
            bad.push("max_iter must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }

    fn lambda_options(&self) -> LambdaOptions {
        LambdaOptions { tol_lambda: self.tol_lambda, tol_impulse: self.tol_impulse, blend: self.blend, ..Default::default() }
    }
}

/// One iterate of the ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub zeta: Field,
    pub psi: Field,
    pub lambda: f64,
    pub energy: f64,
    pub impulse: f64,
    pub iteration: usize,
    pub last_rel_change: f64,
    /// Largest energy seen so far.
    pub best_energy: f64,
}

impl SolverState {
    /// `ψ - λ x2` for this state.
    pub fn shifted_stream(&self) -> Field {
        shifted_stream(&self.psi, self.lambda)
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub energy: f64,
    pub impulse: f64,
    pub lambda: f64,
    pub delta_energy: f64,
    pub residual: f64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iteration={} energy={:.16e} impulse={:.16e} lambda={:.16e} delta_e={:.16e} residual={:.16e}",
            self.iteration, self.energy, self.impulse, self.lambda, self.delta_energy, self.residual
        )
    }
}

/// How the final iterate relates to `ζ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// Same value distribution as `ζ₀`.
    Rearrangement,
    /// A rearrangement except for the cells touched by the final impulse blend.
    BlendedRearrangement,
    /// Strictly dominated by `ζ₀` (curtailed or blended over many cells).
    Relaxed,
}

impl SolutionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionKind::Rearrangement => "rearrangement",
            SolutionKind::BlendedRearrangement => "blended_rearrangement",
            SolutionKind::Relaxed => "relaxed",
        }
    }
}

/// Output of [`Solver::run`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub state: SolverState,
    pub fit: FirstVariationFit,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
    pub kind: SolutionKind,
    /// Number of sorted profile entries differing from `ζ₀`.
    pub defect: usize,
}

impl Solution {
    pub fn virial_gap(&self) -> Result<f64> {
        virial_gap(&self.fit, &self.state)
    }
}

/// `|2 ∫ Φ̂(Ψ) - λ I| / (λ I)`.
pub fn virial_gap(fit: &FirstVariationFit, state: &SolverState) -> Result<f64> {
    fit.virial_gap(state.lambda, state.impulse)
}

/// Default relative step for [`Solver::secant_multiplier`].
pub const SECANT_STEP: f64 = 0.1;

/// Output of [`Solver::virial_check`].
#[derive(Debug, Clone)]
pub struct VirialCheck {
    /// Secant estimate of the multiplier.
    pub lambda: f64,
    /// Gap with the secant multiplier.
    pub gap: f64,
    /// Gap with the solver's own multiplier, `None` when it is zero.
    pub exact_gap: Option<f64>,
    /// Fit of `ζ` against `ψ - λ x2` with the secant multiplier.
    pub fit: FirstVariationFit,
}

/// Tolerance used to decide whether two sorted profiles agree entrywise.
const PROFILE_TOL: f64 = 1e-9;

/// Ascent driver bound to a grid, a profile and a configuration.
#[derive(Debug)]
pub struct Solver {
    op: GreensOperator,
    profile: Profile,
    cfg: SolverConfig,
    spec: SteinerSpec,
}

impl Solver {
    pub fn new(zeta0: &Field, cfg: SolverConfig) -> Result<Self> {
        let op = GreensOperator::new(*zeta0.domain()).with_method(cfg.method);
        Self::with_operator(zeta0, cfg, op)
    }

    /// Reuses an existing operator, which must live on the same grid as `zeta0`.
    pub fn with_operator(zeta0: &Field, cfg: SolverConfig, op: GreensOperator) -> Result<Self> {
        cfg.validate()?;
        if op.domain() != zeta0.domain() {
            return Err(Error::GridMismatch);
        }
        zeta0.ensure_nonneg()?;
        if zeta0.is_zero() {
            return Err(Error::InvalidParameter("initial profile is identically zero".into()));
        }
        Ok(Self {
            profile: decreasing_rearrangement(zeta0)?,
            spec: SteinerSpec::centered(zeta0.domain()),
            op: op.with_method(cfg.method),
            cfg,
        })
    }

    pub fn operator(&self) -> &GreensOperator {
        &self.op
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// The profile packed around `(x1 of the center column, h)`, nearest cells
    /// first, then Steiner-symmetrized.
    pub fn placement_at(&self, h: f64) -> Result<Field> {
        let d = *self.op.domain();
        let c = d.x1(self.spec.center);
        let order = Field::from_fn(d, |x1, x2| -((x1 - c).powi(2) + (x2 - h).powi(2)));
        let placed = rearrange_onto(&self.profile, &order, &vec![true; d.len()])?;
        steiner_symmetrize(&placed, self.spec)
    }

    /// Impulse of the profile packed as low as possible.
    pub fn base_impulse(&self) -> Result<f64> {
        Ok(self.placement_at(self.op.domain().x2(0))?.impulse())
    }

    /// Packed placement whose impulse is as large as possible without
    /// exceeding `i₀`; scaled down when even the lowest placement exceeds it.
    pub fn initial_guess(&self) -> Result<Field> {
        self.initial_guess_for(self.cfg.impulse)
    }

    fn initial_guess_for(&self, i0: f64) -> Result<Field> {
        let d = *self.op.domain();
        let low = self.placement_at(d.x2(0))?;
        let i_low = low.impulse();
        if i_low > i0 {
            return Ok(low.scaled(i0 / i_low));
        }
        let top = d.x2(d.ny() - 1);
        let high = self.placement_at(top)?;
        if high.impulse() <= i0 {
            return Ok(high);
        }
        let (mut lo, mut hi) = (d.x2(0), top);
        let mut best = low;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let f = self.placement_at(mid)?;
            if f.impulse() <= i0 {
                lo = mid;
                best = f;
            } else {
                hi = mid;
            }
        }
        Ok(best)
    }

    /// Builds a state from a field, computing `ψ`, `E` and `I`.
    pub fn state_from(&self, zeta: Field, lambda: f64, iteration: usize) -> Result<SolverState> {
        let psi = self.op.stream(&zeta)?;
        let energy = self.op.energy_with(&zeta, &psi);
        let impulse = zeta.impulse();
        Ok(SolverState { zeta, psi, lambda, energy, impulse, iteration, last_rel_change: f64::INFINITY, best_energy: energy })
    }

    pub fn initial_state(&self) -> Result<SolverState> {
        self.state_from(self.initial_guess()?, 0.0, 0)
    }

    /// One ascent step from `s`.
    pub fn ascent_iterate(&self, s: &SolverState) -> Result<SolverState> {
        self.iterate(s, self.cfg.impulse)
    }

    fn iterate(&self, s: &SolverState, i0: f64) -> Result<SolverState> {
        let sol = solve_lambda(&self.profile, &s.psi, i0, &self.cfg.lambda_options())?;
        let zeta = if self.cfg.steiner { steiner_symmetrize(&sol.field, self.spec)? } else { sol.field };
        let mut next = self.state_from(zeta, sol.lambda, s.iteration + 1)?;
        next.last_rel_change = (next.energy - s.energy).abs() / next.energy.abs().max(f64::MIN_POSITIVE);
        next.best_energy = s.best_energy.max(next.energy);
        Ok(next)
    }

    /// Multiplier and fit for a fixed iterate: the multiplier of the
    /// linearized problem at `ψ(ζ)`, so that `Ψ = ψ(ζ) - λ x2` matches `ζ`.
    pub fn fit(&self, s: &SolverState) -> Result<FirstVariationFit> {
        first_variation_residual(&s.zeta, &s.shifted_stream())
    }

    /// Iterates from `start` until the relative energy change drops below
    /// `tol_energy` or the iteration budget runs out.
    pub fn run_from(&self, start: SolverState, on_step: impl FnMut(&TraceRecord)) -> Result<Solution> {
        self.run_target(start, self.cfg.impulse, on_step)
    }

    fn run_target(&self, start: SolverState, i0: f64, mut on_step: impl FnMut(&TraceRecord)) -> Result<Solution> {
        let mut trace = Vec::new();
        let mut state = start;
        let mut best = state.clone();
        let mut converged = false;
        while state.iteration < self.cfg.max_iter {
            let next = self.iterate(&state, i0)?;
            let fit = self.fit(&next)?;
            let rec = TraceRecord {
                iteration: next.iteration,
                energy: next.energy,
                impulse: next.impulse,
                lambda: next.lambda,
                delta_energy: next.energy - state.energy,
                residual: fit.residual,
            };
            on_step(&rec);
            trace.push(rec);
            state = next;
            if state.energy >= best.energy {
                best = state.clone();
            }
            if state.last_rel_change < self.cfg.tol_energy {
                converged = true;
                break;
            }
        }
        let final_state = if converged { state } else { best };
        let fit = self.fit(&final_state)?;
        let current = decreasing_rearrangement(&final_state.zeta)?;
        let defect = rearrangement_defect(&current, &self.profile, PROFILE_TOL);
        let kind = match defect {
            0 => SolutionKind::Rearrangement,
            1 | 2 => SolutionKind::BlendedRearrangement,
            _ => SolutionKind::Relaxed,
        };
        Ok(Solution { state: final_state, fit, converged, trace, kind, defect })
    }

    pub fn run(&self) -> Result<Solution> {
        self.run_from(self.initial_state()?, |_| {})
    }

    /// Converged solution for target impulse `i0` with all other settings unchanged.
    pub fn run_at(&self, i0: f64) -> Result<Solution> {
        if !(i0 > 0.0 && i0.is_finite()) {
            return Err(Error::InvalidParameter(format!("impulse must be > 0, got {i0}")));
        }
        let start = self.state_from(self.initial_guess_for(i0)?, 0.0, 0)?;
        self.run_target(start, i0, |_| {})
    }

    /// Central secant slope of the maximal energy as a function of the impulse
    /// bound, over `i₀(1 ± rel_step)`.
    ///
    /// On a grid the exact multiplier of a single solve is set by whichever
    /// pair of cells is exchanged by the final blend and jumps by O(h) between
    /// neighbouring targets; the secant averages over many such exchanges.
    pub fn secant_multiplier(&self, rel_step: f64) -> Result<f64> {
        if !(rel_step > 0.0 && rel_step < 1.0) {
            return Err(Error::InvalidParameter(format!("relative step must lie in (0, 1), got {rel_step}")));
        }
        let i0 = self.cfg.impulse;
        let lo = self.run_at(i0 * (1.0 - rel_step))?;
        let hi = self.run_at(i0 * (1.0 + rel_step))?;
        let di = hi.state.impulse - lo.state.impulse;
        if di.is_nan() || di <= 0.0 {
            return Ok(0.0);
        }
        Ok(((hi.state.energy - lo.state.energy) / di).max(0.0))
    }

    /// Virial identity evaluated with both the exact and the secant multiplier.
    pub fn virial_check(&self, sol: &Solution, rel_step: f64) -> Result<VirialCheck> {
        let lambda = self.secant_multiplier(rel_step)?;
        let fit = first_variation_residual(&sol.state.zeta, &shifted_stream(&sol.state.psi, lambda))?;
        Ok(VirialCheck {
            lambda,
            gap: fit.virial_gap(lambda, sol.state.impulse)?,
            exact_gap: sol.virial_gap().ok(),
            fit,
        })
    }
}

/// Maximizes the energy for the profile of `zeta0` at impulse at most `cfg.impulse`.
pub fn solve(zeta0: &Field, cfg: SolverConfig) -> Result<Solution> {
    Solver::new(zeta0, cfg)?.run()
}
