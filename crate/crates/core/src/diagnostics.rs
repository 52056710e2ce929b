//! Concentration profiles, the compactness / vanishing / dichotomy
//! classification of field sequences, and empirical constants for the decay
//! bounds on the stream function.

use std::fmt;

use crate::error::{Error, Result};
use crate::greens::{velocity_from_stream, GreensOperator};
use crate::grid::{Domain, Field};
use crate::rearrange::{is_steiner_symmetric, SteinerSpec};

/// Largest disc mass and where it sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
    pub mass: f64,
}

/// Row prefix sums: `prefix[j][i]` is the mass of cells `0..i` of row `j`.
struct RowPrefix {
    domain: Domain,
    prefix: Vec<Vec<f64>>,
}

impl RowPrefix {
    fn new(f: &Field) -> Self {
        let d = *f.domain();
        let a = d.cell_area();
        let prefix = (0..d.ny())
            .map(|j| {
                let mut acc = 0.0;
                let mut p = Vec::with_capacity(d.nx() + 1);
                p.push(0.0);
                for &v in f.row(j) {
                    acc += v * a;
                    p.push(acc);
                }
                p
            })
            .collect();
        Self { domain: d, prefix }
    }

    /// Mass of the cells whose centers lie in the closed disc `D(c, r)`.
    fn disc_mass(&self, c: [f64; 2], r: f64) -> f64 {
        let d = &self.domain;
        let (h1, h2) = (d.h1(), d.h2());
        let j_lo = (((c[1] - r) / h2 - 0.5).ceil().max(0.0)) as usize;
        let j_hi = ((c[1] + r) / h2 - 0.5).floor();
        if j_hi < 0.0 {
            return 0.0;
        }
        let j_hi = (j_hi as usize).min(d.ny() - 1);
        let mut total = 0.0;
        for j in j_lo..=j_hi {
            let dy = d.x2(j) - c[1];
            let w2 = r * r - dy * dy;
            if w2 < 0.0 {
                continue;
            }
            let w = w2.sqrt();
            let s_lo = ((c[0] - w + d.half_width()) / h1 - 0.5).ceil().max(0.0);
            let s_hi = ((c[0] + w + d.half_width()) / h1 - 0.5).floor().min((d.nx() - 1) as f64);
            if s_hi < s_lo {
                continue;
            }
            let p = &self.prefix[j];
            total += p[s_hi as usize + 1] - p[s_lo as usize];
        }
        total
    }
}

/// Cell centers plus the axis points below each column.
fn candidate_centers(d: &Domain) -> impl Iterator<Item = [f64; 2]> + '_ {
    let cells = (0..d.len()).map(|k| {
        let (i, j) = d.cell(k);
        d.center(i, j)
    });
    let axis = (0..d.nx()).map(|i| [d.x1(i), 0.0]);
    cells.chain(axis)
}

/// Heaviest disc of radius `r` over all candidate centers. Ties keep the first
/// center in row-major order, axis points last.
pub fn best_disc(f: &Field, r: f64) -> Result<Disc> {
    f.ensure_nonneg()?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {r}")));
    }
    Ok(best_disc_in(&RowPrefix::new(f), r, f.integrate()))
}

fn best_disc_in(rp: &RowPrefix, r: f64, total: f64) -> Disc {
    let mut best = Disc { center: rp.domain.center(0, 0), radius: r, mass: f64::NEG_INFINITY };
    for c in candidate_centers(&rp.domain) {
        let m = rp.disc_mass(c, r);
        if m > best.mass {
            best = Disc { center: c, radius: r, mass: m };
        }
    }
    best.mass = best.mass.clamp(0.0, total);
    best
}

/// `Q(R)` for each radius, with the radii taken in the given order. `Q` is
/// the supremum over discs of radius at most `R`, so it is nondecreasing in
/// `R` by construction.
pub fn concentration_profile(f: &Field, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    f.ensure_nonneg()?;
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {r}")));
    }
    let rp = RowPrefix::new(f);
    let total = f.integrate();
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut q = vec![0.0; radii.len()];
    let mut running = 0.0f64;
    for k in order {
        running = running.max(best_disc_in(&rp, radii[k], total).mass);
        q[k] = running;
    }
    Ok(radii.iter().copied().zip(q).collect())
}

/// Outcome of [`cc_classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CCLabel {
    Compactness,
    Vanishing,
    Dichotomy,
    Undetermined,
}

impl CCLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CCLabel::Compactness => "compactness",
            CCLabel::Vanishing => "vanishing",
            CCLabel::Dichotomy => "dichotomy",
            CCLabel::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for CCLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifier thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CCThresholds {
    /// Vanishing when `Q(R_max)/β` stays below this on the tail.
    pub vanishing: f64,
    /// Compactness when `Q(R*)/β` stays at or above this on the tail.
    pub compactness: f64,
    /// Dichotomy needs `θβ <= α <= (1-θ)β` for both pieces.
    pub theta: f64,
    /// Fraction of the sequence, counted from the end, treated as "large n".
    pub tail_fraction: f64,
}

impl Default for CCThresholds {
    fn default() -> Self {
        Self { vanishing: 0.05, compactness: 0.95, theta: 0.1, tail_fraction: 1.0 / 3.0 }
    }
}

/// Split found for a dichotomy.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomySplit {
    pub radius: f64,
    /// Mass in the heaviest disc, per tail element.
    pub alpha: Vec<f64>,
    /// Mass in the heaviest disc of what remains, per tail element.
    pub second: Vec<f64>,
    /// Distance between the two disc centers, per tail element.
    pub separation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CCReport {
    pub radii: Vec<f64>,
    /// `β_n`.
    pub masses: Vec<f64>,
    /// `Q_n(R)` in the order of `radii`.
    pub profiles: Vec<Vec<f64>>,
    pub label: CCLabel,
    /// First index of the tail used for the decision.
    pub tail_start: usize,
    /// `R*` for compactness.
    pub compact_radius: Option<f64>,
    pub dichotomy: Option<DichotomySplit>,
}

/// Labels a sequence of nonnegative fields by how its mass concentrates.
///
/// Checked in order on the tail of the sequence: vanishing, dichotomy (two
/// pieces with a fixed split of the mass moving apart), compactness at a
/// fixed radius. Sequences shorter than three are undetermined.
pub fn cc_classify(seq: &[Field], radii: &[f64], th: &CCThresholds) -> Result<CCReport> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("radius ladder is empty".into()));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let masses: Vec<f64> = seq.iter().map(Field::integrate).collect();
    let profiles = seq
        .iter()
        .map(|f| concentration_profile(f, &sorted).map(|q| q.into_iter().map(|(_, v)| v).collect::<Vec<f64>>()))
        .collect::<Result<Vec<_>>>()?;
    let n = seq.len();
    let tail_len = ((n as f64 * th.tail_fraction).ceil() as usize).clamp(2.min(n), n);
    let tail_start = n - tail_len;
    let mut report = CCReport {
        radii: sorted.clone(),
        masses: masses.clone(),
        profiles: profiles.clone(),
        label: CCLabel::Undetermined,
        tail_start,
        compact_radius: None,
        dichotomy: None,
    };
    if n < 3 || masses.iter().any(|&b| b.is_nan() || b <= 0.0) {
        return Ok(report);
    }
    let tail = tail_start..n;
    let last = sorted.len() - 1;

    if tail.clone().all(|k| profiles[k][last] / masses[k] < th.vanishing) {
        report.label = CCLabel::Vanishing;
        return Ok(report);
    }

    for (ri, &r) in sorted.iter().enumerate() {
        let split_ok = |m: f64, b: f64| m >= th.theta * b && m <= (1.0 - th.theta) * b;
        if !tail.clone().all(|k| split_ok(profiles[k][ri], masses[k])) {
            continue;
        }
        let mut split = DichotomySplit { radius: r, alpha: vec![], second: vec![], separation: vec![] };
        let mut ok = true;
        for k in tail.clone() {
            let first = best_disc(&seq[k], r)?;
            let rest = remove_disc(&seq[k], first.center, r);
            let second = best_disc(&rest, r)?;
            if !split_ok(second.mass, masses[k]) {
                ok = false;
                break;
            }
            split.alpha.push(first.mass);
            split.second.push(second.mass);
            split.separation.push((first.center[0] - second.center[0]).hypot(first.center[1] - second.center[1]));
        }
        let s = &split.separation;
        let growing = s.windows(2).all(|w| w[1] > w[0]) && s.last().copied().unwrap_or(0.0) - s[0] >= r;
        if ok && growing {
            report.label = CCLabel::Dichotomy;
            report.dichotomy = Some(split);
            return Ok(report);
        }
    }

    if let Some(ri) = (0..sorted.len()).find(|&ri| tail.clone().all(|k| profiles[k][ri] >= th.compactness * masses[k])) {
        report.label = CCLabel::Compactness;
        report.compact_radius = Some(sorted[ri]);
    }
    Ok(report)
}

/// `f` with the cells whose centers lie in `D(c, r)` set to zero.
fn remove_disc(f: &Field, c: [f64; 2], r: f64) -> Field {
    let d = *f.domain();
    let mut out = f.clone();
    for k in 0..d.len() {
        let (i, j) = d.cell(k);
        let x = d.center(i, j);
        if (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= r * r {
            out.values_mut()[k] = 0.0;
        }
    }
    out
}

/// Empirical constants for the stream-function bounds. "Raw" ratios are
/// linear in `ζ`; "normalized" ones divide by the matching norms and are
/// scale invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub p: f64,
    /// `sup_{x2 >= 1} ψ / (x2⁻¹(1 + ln x2) I + x2^{-1/2} ‖ζ‖_p^{1/2} I^{1/2})`;
    /// `None` when no row lies at `x2 >= 1`.
    pub high_altitude: Option<f64>,
    /// `sup ψ / ((‖ζ‖₁ + ‖ζ‖_p)(x2^{1/q} + x2²))`.
    pub growth: f64,
    /// `sup ψ / x2`.
    pub psi_over_x2: f64,
    /// `sup |∇ψ|`.
    pub grad_sup: f64,
    /// `max(sup |∇ψ|, sup ψ/x2) / (‖ζ‖_p + ‖ζ‖₁)`.
    pub gradient: f64,
    /// `sup_{|x1| > 1} ψ |x1|^{1/(2p)} / x2`, `x1` measured from the symmetry axis.
    pub steiner_tail_raw: f64,
    /// `sup ψ / ((I + ‖ζ‖₁ + ‖ζ‖_p) x2 min(1, |x1|^{-1/(2p)}))`.
    pub steiner_tail: f64,
    /// Least-squares slope of `ln sup_{x2} ψ/x2` against `ln |x1|` beyond
    /// twice the support half-width; `None` unless `ζ` is Steiner-symmetric
    /// about the central column and at least three columns qualify.
    pub tail_slope: Option<f64>,
    /// Support half-width in `x1` about the symmetry axis.
    pub support_radius: f64,
}

impl BoundReport {
    /// Constants that must be finite and positive for nontrivial input.
    pub fn constants(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("high_altitude", self.high_altitude),
            ("growth", Some(self.growth)),
            ("gradient", Some(self.gradient)),
            ("steiner_tail", Some(self.steiner_tail)),
        ]
    }
}

/// Fits the bound constants for `ζ`, measuring `x1` from the central column.
pub fn bound_report(op: &GreensOperator, zeta: &Field, p: f64) -> Result<BoundReport> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be finite and > 2, got {p}")));
    }
    zeta.ensure_nonneg()?;
    let d = *zeta.domain();
    let psi = op.stream(zeta)?;
    let vel = velocity_from_stream(&psi);
    let spec = SteinerSpec::centered(&d);
    let axis = d.x1(spec.center);

    let impulse = zeta.impulse();
    let l1 = zeta.lp_norm(1.0)?;
    let lp = zeta.lp_norm(p)?;
    let q = p / (p - 1.0);
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };

    let mut high: Option<f64> = None;
    let (mut growth, mut over_x2, mut tail_raw, mut tail) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..d.len() {
        let (i, j) = d.cell(k);
        let (x1, x2) = (d.x1(i) - axis, d.x2(j));
        let s = psi.values()[k];
        if x2 >= 1.0 {
            let den = (1.0 + x2.ln()) * impulse / x2 + x2.powf(-0.5) * (lp * impulse).sqrt();
            high = Some(high.unwrap_or(0.0).max(ratio(s, den)));
        }
        growth = growth.max(ratio(s, (l1 + lp) * (x2.powf(1.0 / q) + x2 * x2)));
        over_x2 = over_x2.max(s / x2);
        let decay = if x1.abs() > 1.0 { x1.abs().powf(-1.0 / (2.0 * p)) } else { 1.0 };
        if x1.abs() > 1.0 {
            tail_raw = tail_raw.max(s / (x2 * decay));
        }
        tail = tail.max(ratio(s, (impulse + l1 + lp) * x2 * decay));
    }
    let grad_sup = vel.max_speed();
    let gradient = ratio(grad_sup.max(over_x2), lp + l1);

    let support_radius = (0..d.len())
        .filter(|&k| zeta.values()[k] > 0.0)
        .map(|k| (d.x1(d.cell(k).0) - axis).abs())
        .fold(0.0, f64::max);
    let tail_slope = if is_steiner_symmetric(zeta, spec) && !zeta.is_zero() {
        fit_tail_slope(&psi, axis, 2.0 * support_radius)
    } else {
        None
    };

    Ok(BoundReport {
        p,
        high_altitude: high,
        growth,
        psi_over_x2: over_x2,
        grad_sup,
        gradient,
        steiner_tail_raw: tail_raw,
        steiner_tail: tail,
        tail_slope,
        support_radius,
    })
}

/// Slope of `ln g` against `ln |x1 - axis|` over columns with
/// `|x1 - axis| > r0`, where `g` is the column maximum of `ψ / x2`.
fn fit_tail_slope(psi: &Field, axis: f64, r0: f64) -> Option<f64> {
    let d = psi.domain();
    let pts: Vec<(f64, f64)> = (0..d.nx())
        .filter_map(|i| {
            let r = (d.x1(i) - axis).abs();
            if r <= r0 || r == 0.0 {
                return None;
            }
            let g = (0..d.ny()).map(|j| psi.get(i, j) / d.x2(j)).fold(0.0, f64::max);
            (g > 0.0).then(|| (r.ln(), g.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
