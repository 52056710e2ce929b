//! The linearized subproblem: maximize `∫(ψ - λ x2) ξ` over curtailed
//! rearrangements of a profile, and the bisection on `λ` that enforces the
//! impulse constraint.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::rearrange::{rearrange_onto, Profile};

/// `ψ - λ x2`.
pub fn shifted_stream(psi: &Field, lambda: f64) -> Field {
    let d = *psi.domain();
    let mut out = psi.clone();
    let nx = d.nx();
    for (k, v) in out.values_mut().iter_mut().enumerate() {
        *v -= lambda * d.x2(k / nx);
    }
    out
}

/// Places `p0` on the cells where `Ψ = ψ - λ x2 > 0`, largest values where `Ψ`
/// is largest. The result maximizes `Σ Ψ ξ` over all discrete curtailed
/// rearrangements of `p0`.
pub fn linearized_max(p0: &Profile, psi: &Field, lambda: f64) -> Result<Field> {
    if let Some(k) = psi.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    let order = shifted_stream(psi, lambda);
    let active: Vec<bool> = order.values().iter().map(|&v| v > 0.0).collect();
    rearrange_onto(p0, &order, &active)
}

/// Options for [`solve_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptions {
    /// Relative width of the final `λ` bracket.
    pub tol_lambda: f64,
    /// Relative impulse tolerance.
    pub tol_impulse: f64,
    pub max_bisections: usize,
    /// Blend the two bracketing solutions to hit the target impulse exactly.
    pub blend: bool,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self { tol_lambda: 1e-15, tol_impulse: 1e-10, max_bisections: 200, blend: true }
    }
}

/// Result of the multiplier search.
#[derive(Debug, Clone)]
pub struct LambdaSolution {
    /// Multiplier reported for the returned field: the lower end of the final
    /// bracket, so the field vanishes wherever `ψ - λ x2 <= 0`.
    pub lambda: f64,
    pub field: Field,
    pub impulse: f64,
    /// Final bracket `(λ-, λ+)`; both zero when the constraint is inactive.
    pub bracket: (f64, f64),
    /// Weight on the `λ-` solution when blending, `None` otherwise.
    pub theta: Option<f64>,
    pub bisections: usize,
}

/// Finds `λ >= 0` such that the linearized maximizer has impulse `i0`.
///
/// When the unconstrained maximizer already satisfies `I <= i0` the answer is
/// `λ = 0`. Otherwise `λ` is bisected on `[0, max ψ/x2]`; at the top of that
/// interval no cell is active, so the impulse is zero there. The impulse of the
/// linearized maximizer is a nonincreasing step function of `λ`, so the search
/// ends with two solutions straddling `i0`, which are blended.
pub fn solve_lambda(p0: &Profile, psi: &Field, i0: f64, opts: &LambdaOptions) -> Result<LambdaSolution> {
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::InvalidParameter(format!("target impulse must be > 0, got {i0}")));
    }
    let free = linearized_max(p0, psi, 0.0)?;
    let free_impulse = free.impulse();
    if free_impulse <= i0 {
        return Ok(LambdaSolution {
            lambda: 0.0,
            field: free,
            impulse: free_impulse,
            bracket: (0.0, 0.0),
            theta: None,
            bisections: 0,
        });
    }

    let d = *psi.domain();
    let nx = d.nx();
    let lambda_max = psi
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| v / d.x2(k / nx))
        .fold(0.0, f64::max);

    // The ratio is rounded, so the cell attaining it may keep Ψ > 0 by an ulp.
    let mut hi = lambda_max;
    while shifted_stream(psi, hi).values().iter().any(|&v| v > 0.0) {
        hi *= 1.0 + 2.0 * f64::EPSILON;
    }
    let (mut lo, mut lo_field, mut lo_imp) = (0.0, free, free_impulse);
    let mut hi_field = linearized_max(p0, psi, hi)?;
    let mut hi_imp = hi_field.impulse();
    let mut trace = vec![(lo, lo_imp), (hi, hi_imp)];
    if hi_imp > i0 {
        return Err(Error::Bracket(format!(
            "impulse {hi_imp} at λ = {hi} still exceeds target {i0}; trace {trace:?}"
        )));
    }

    let mut bisections = 0;
    while bisections < opts.max_bisections && hi - lo > opts.tol_lambda * hi {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        bisections += 1;
        let f = linearized_max(p0, psi, mid)?;
        let imp = f.impulse();
        trace.push((mid, imp));
        let slack = opts.tol_impulse * i0;
        if imp > lo_imp + slack || imp < hi_imp - slack {
            return Err(Error::Bracket(format!("impulse not monotone in λ; trace {trace:?}")));
        }
        if imp > i0 {
            (lo, lo_field, lo_imp) = (mid, f, imp);
        } else {
            (hi, hi_field, hi_imp) = (mid, f, imp);
            if (i0 - imp).abs() <= 1e-15 * i0 {
                break;
            }
        }
    }

    if !opts.blend || (i0 - hi_imp).abs() <= opts.tol_impulse * i0 * 1e-3 {
        return Ok(LambdaSolution {
            lambda: hi,
            field: hi_field,
            impulse: hi_imp,
            bracket: (lo, hi),
            theta: None,
            bisections,
        });
    }
    let theta = (i0 - hi_imp) / (lo_imp - hi_imp);
    let field = lo_field.combine(theta, &hi_field, 1.0 - theta)?;
    let impulse = field.impulse();
    Ok(LambdaSolution { lambda: lo, field, impulse, bracket: (lo, hi), theta: Some(theta), bisections })
}
