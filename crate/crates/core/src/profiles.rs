//! Builtin initial vorticity profiles.

use crate::error::{Error, Result};
use crate::grid::{Domain, Field};

/// First positive zero of `J1`.
pub const J1_FIRST_ZERO: f64 = 3.8317059702075125;

pub const BUILTIN_NAMES: [&str; 4] = ["patch", "annulus", "bump", "lamb"];

/// Value 1 on the disc of radius 0.5 centered at `(0, 0.75)`.
pub fn patch(d: Domain) -> Field {
    Field::from_fn(d, |x1, x2| if x1.hypot(x2 - 0.75) < 0.5 { 1.0 } else { 0.0 })
}

/// Value 1 on `0.25 <= r <= 0.5` around `(0, 0.75)`.
pub fn annulus(d: Domain) -> Field {
    Field::from_fn(d, |x1, x2| {
        let r = x1.hypot(x2 - 0.75);
        if (0.25..=0.5).contains(&r) { 1.0 } else { 0.0 }
    })
}

/// `(1 - q)^3` with `q = |x - c|^2 / r^2`, zero outside the disc.
pub fn smooth_bump(d: Domain, center: [f64; 2], radius: f64) -> Field {
    Field::from_fn(d, |x1, x2| {
        let q = ((x1 - center[0]).powi(2) + (x2 - center[1]).powi(2)) / (radius * radius);
        if q < 1.0 { (1.0 - q).powi(3) } else { 0.0 }
    })
}

/// [`smooth_bump`] of radius 0.5 at `(0, 1)`.
pub fn bump(d: Domain) -> Field {
    smooth_bump(d, [0.0, 1.0], 0.5)
}

/// Upper half of the Lamb–Chaplygin dipole of radius 1 on the axis:
/// `J1(k r) x2 / r` inside the unit disc, `k` the first zero of `J1`.
pub fn lamb(d: Domain) -> Field {
    Field::from_fn(d, |x1, x2| {
        let r = x1.hypot(x2);
        if r < 1.0 { (bessel_j1(J1_FIRST_ZERO * r) * x2 / r).max(0.0) } else { 0.0 }
    })
}

/// Builtin by name.
pub fn builtin(name: &str, d: Domain) -> Result<Field> {
    match name {
        "patch" => Ok(patch(d)),
        "annulus" => Ok(annulus(d)),
        "bump" => Ok(bump(d)),
        "lamb" => Ok(lamb(d)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown builtin profile {name:?} (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// Power series for `J1`; accurate to rounding for `|x| <= 8`.
pub fn bessel_j1(x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h;
    let mut sum = 0.0;
    for m in 0..40 {
        sum += term;
        term *= -h * h / ((m as f64 + 1.0) * (m as f64 + 2.0));
    }
    sum
}
