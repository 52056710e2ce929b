//! Discrete rearrangement algebra on equal-area cells.
//!
//! A [`Profile`] is the decreasing rearrangement of a field: its cell values
//! sorted descending, read as a step function on `(0, n * cell_area)`. The
//! order `f ≼ g` compares `∫(f - α)+` with `∫(g - α)+` for every `α > 0`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field};

/// Values of a nonnegative function sorted descending, with the area each value occupies.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    cell_area: f64,
}

impl Profile {
    pub fn new(mut values: Vec<f64>, cell_area: f64) -> Result<Self> {
        if !(cell_area > 0.0 && cell_area.is_finite()) {
            return Err(Error::InvalidParameter(format!("cell area must be > 0, got {cell_area}")));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        if let Some(index) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::Negative { index, value: values[index] });
        }
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(Self { values, cell_area })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of strictly positive entries.
    pub fn support_cells(&self) -> usize {
        self.values.partition_point(|&v| v > 0.0)
    }

    /// Measure of the support, `support_cells * cell_area`.
    pub fn support_measure(&self) -> f64 {
        self.support_cells() as f64 * self.cell_area
    }

    pub fn mass(&self) -> f64 {
        self.cell_area * self.values.iter().rev().sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().rev().map(|v| v.powf(p)).sum();
        (self.cell_area * s).powf(1.0 / p)
    }

    /// The increasing rearrangement, `f∇(s) = fΔ(-s)`, as ascending values.
    pub fn increasing(&self) -> Vec<f64> {
        self.values.iter().rev().copied().collect()
    }

    /// `||fΔ - gΔ||_p` for two profiles of the same length and cell area.
    pub fn lp_distance(&self, other: &Profile, p: f64) -> Result<f64> {
        if self.len() != other.len() || self.cell_area != other.cell_area {
            return Err(Error::InvalidParameter("profiles must share length and cell area".into()));
        }
        let s: f64 =
            self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs().powf(p)).sum();
        Ok((self.cell_area * s).powf(1.0 / p))
    }

    /// `∫ (f - α)+` evaluated through the sorted values.
    fn excess_above(&self, alpha: f64, prefix: &[f64]) -> f64 {
        let k = self.values.partition_point(|&v| v > alpha);
        self.cell_area * (prefix[k] - k as f64 * alpha)
    }

    fn prefix_sums(&self) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(self.values.len() + 1);
        let mut s = 0.0;
        prefix.push(0.0);
        for &v in &self.values {
            s += v;
            prefix.push(s);
        }
        prefix
    }
}

impl TryFrom<&Field> for Profile {
    type Error = Error;

    fn try_from(f: &Field) -> Result<Self> {
        Profile::new(f.values().to_vec(), f.domain().cell_area())
    }
}

/// `fΔ`: the field's values sorted descending.
pub fn decreasing_rearrangement(f: &Field) -> Result<Profile> {
    Profile::try_from(f)
}

/// `f ≼ g`, checked exactly at every breakpoint (each distinct value of either
/// function) and at `α → 0+`. Both sides are piecewise linear in `α` between
/// breakpoints, so this is the full condition.
pub fn precedes(f: &Profile, g: &Profile) -> bool {
    precedes_within(f, g, 0.0)
}

/// [`precedes`] with slack `tol * ∫g` on each comparison.
pub fn precedes_within(f: &Profile, g: &Profile, tol: f64) -> bool {
    let (pf, pg) = (f.prefix_sums(), g.prefix_sums());
    let slack = tol * g.cell_area * pg[g.len()];
    let mut alphas: Vec<f64> = f.values.iter().chain(&g.values).copied().filter(|&v| v > 0.0).collect();
    alphas.push(0.0);
    alphas.sort_unstable_by(f64::total_cmp);
    alphas.dedup();
    alphas.iter().all(|&a| f.excess_above(a, &pf) <= g.excess_above(a, &pg) + slack)
}

/// Same value multiset (on equal cell areas), otherwise `≼` both ways.
pub fn is_rearrangement(f: &Profile, g: &Profile) -> bool {
    if f.cell_area == g.cell_area {
        let nf = f.support_cells();
        nf == g.support_cells() && f.values[..nf] == g.values[..nf]
    } else {
        precedes(f, g) && precedes(g, f)
    }
}

/// Equal cell areas and sorted values agreeing to `tol * max(g)`.
pub fn is_rearrangement_within(f: &Profile, g: &Profile, tol: f64) -> bool {
    if f.cell_area != g.cell_area {
        return false;
    }
    let scale = g.values.first().copied().unwrap_or(0.0).max(f.values.first().copied().unwrap_or(0.0));
    let n = f.len().max(g.len());
    (0..n).all(|k| {
        let a = f.values.get(k).copied().unwrap_or(0.0);
        let b = g.values.get(k).copied().unwrap_or(0.0);
        (a - b).abs() <= tol * scale
    })
}

/// Number of sorted positions where `f` and `g` differ by more than `tol * max`.
pub fn rearrangement_defect(f: &Profile, g: &Profile, tol: f64) -> usize {
    let scale = g.values.first().copied().unwrap_or(0.0).max(f.values.first().copied().unwrap_or(0.0));
    let n = f.len().max(g.len());
    (0..n)
        .filter(|&k| {
            let a = f.values.get(k).copied().unwrap_or(0.0);
            let b = g.values.get(k).copied().unwrap_or(0.0);
            (a - b).abs() > tol * scale
        })
        .count()
}

/// Which side of the center receives the next value in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Offsets 0, +1, -1, +2, -2, ...
    #[default]
    RightFirst,
    /// Offsets 0, -1, +1, -2, +2, ...
    LeftFirst,
}

/// Steiner symmetrization about the vertical line through a column center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SteinerSpec {
    pub center: usize,
    pub placement: Placement,
}

impl SteinerSpec {
    /// Center column nearest `x1 = 0` (the right one of the middle pair when `nx` is even).
    pub fn centered(domain: &Domain) -> Self {
        Self { center: domain.nx() / 2, placement: Placement::RightFirst }
    }

    /// Column offsets in placement order, restricted to the grid.
    fn columns(&self, nx: usize) -> Vec<usize> {
        let c = self.center as isize;
        let mut cols = Vec::with_capacity(nx);
        cols.push(self.center);
        let sign = match self.placement {
            Placement::RightFirst => 1,
            Placement::LeftFirst => -1,
        };
        for k in 1..nx as isize {
            for off in [sign * k, -sign * k] {
                let col = c + off;
                if (0..nx as isize).contains(&col) {
                    cols.push(col as usize);
                }
            }
        }
        cols
    }
}

/// Rearranges each row symmetric-decreasing about `spec.center`; every row
/// keeps its value multiset.
pub fn steiner_symmetrize(f: &Field, spec: SteinerSpec) -> Result<Field> {
    let d = *f.domain();
    if spec.center >= d.nx() {
        return Err(Error::InvalidParameter(format!(
            "Steiner center column {} outside grid of width {}",
            spec.center,
            d.nx()
        )));
    }
    let cols = spec.columns(d.nx());
    let mut out = Field::zeros(d);
    let mut row = Vec::with_capacity(d.nx());
    for j in 0..d.ny() {
        row.clear();
        row.extend_from_slice(f.row(j));
        row.sort_unstable_by(|a, b| b.total_cmp(a));
        for (&v, &i) in row.iter().zip(&cols) {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Whether every row is already in the symmetric-decreasing arrangement about `spec.center`.
pub fn is_steiner_symmetric(f: &Field, spec: SteinerSpec) -> bool {
    steiner_symmetrize(f, spec).map(|g| g == *f).unwrap_or(false)
}

/// `pΔ · 1_(0, ell)` on the cell lattice: the `⌊ell/area⌋` largest entries,
/// the next entry scaled by the fractional remainder, zeros after.
pub fn curtail(p: &Profile, ell: f64) -> Result<Profile> {
    if ell.is_nan() || ell < 0.0 {
        return Err(Error::InvalidParameter(format!("curtailment length must be >= 0, got {ell}")));
    }
    let cells = ell / p.cell_area;
    if cells >= p.support_cells() as f64 {
        return Ok(p.clone());
    }
    let whole = cells.floor() as usize;
    let frac = cells - whole as f64;
    let mut values = p.values.clone();
    values[whole] *= frac;
    values[whole + 1..].iter_mut().for_each(|v| *v = 0.0);
    Ok(Profile { values, cell_area: p.cell_area })
}

/// Places the profile's values, largest first, on the active cells ordered by
/// `order` descending with ties broken by row then column ascending. Values
/// left over when there are fewer active cells than entries are dropped.
pub fn rearrange_onto(p: &Profile, order: &Field, active: &[bool]) -> Result<Field> {
    let d = *order.domain();
    if active.len() != d.len() {
        return Err(Error::LengthMismatch { expected: d.len(), got: active.len() });
    }
    let mut cells: Vec<usize> = (0..d.len()).filter(|&k| active[k]).collect();
    let ov = order.values();
    // Index order is row-major from the bottom, so comparing indices breaks ties by (x2, x1).
    cells.sort_unstable_by(|&a, &b| match ov[b].total_cmp(&ov[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut out = Field::zeros(d);
    let vals = out.values_mut();
    for (&k, &v) in cells.iter().zip(p.values()) {
        vals[k] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(v: &[f64]) -> Profile {
        Profile::new(v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn sorts_descending() {
        let d = Domain::new(1.5, 1.0, 3, 2).unwrap();
        let f = Field::from_values(d, vec![3.0, 1.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        let p = decreasing_rearrangement(&f).unwrap();
        assert_eq!(&p.values()[..3], &[3.0, 2.0, 1.0]);
        assert_eq!(p.support_cells(), 3);
        let again = Profile::new(p.values().to_vec(), p.cell_area()).unwrap();
        assert_eq!(again, p);
        assert_eq!(p.increasing()[5], 3.0);
    }

    #[test]
    fn negative_values_rejected() {
        assert!(Profile::new(vec![1.0, -0.5], 1.0).is_err());
    }

    #[test]
    fn precedes_hand_example() {
        let f = prof(&[2.0, 0.0]);
        let g = prof(&[1.0, 1.0]);
        assert!(precedes(&g, &f));
        assert!(!precedes(&f, &g));
        assert!(precedes(&f, &f));
        assert!(precedes(&prof(&[0.0, 0.0]), &g));
        assert!(!is_rearrangement(&f, &g));
    }

    #[test]
    fn scaling_breaks_equimeasurability() {
        let f = prof(&[3.0, 1.5, 0.25]);
        let g = prof(&[3.0 * (1.0 + 1e-9), 1.5 * (1.0 + 1e-9), 0.25 * (1.0 + 1e-9)]);
        assert!(!is_rearrangement(&f, &g));
        assert!(is_rearrangement_within(&f, &g, 1e-8));
    }

    #[test]
    fn different_cell_areas_compare_as_step_functions() {
        // (2, 2) on cells of area 0.5 is the same step function as (2) on area 1.
        let a = Profile::new(vec![2.0, 2.0], 0.5).unwrap();
        let b = Profile::new(vec![2.0, 0.0], 1.0).unwrap();
        assert!(is_rearrangement(&a, &b));
    }

    #[test]
    fn steiner_row_placement() {
        let d = Domain::new(1.5, 1.0, 3, 2).unwrap();
        let f = Field::from_values(d, vec![0.0, 2.0, 1.0, 1.0, 0.0, 2.0]).unwrap();
        let spec = SteinerSpec { center: 1, placement: Placement::RightFirst };
        let s = steiner_symmetrize(&f, spec).unwrap();
        assert_eq!(s.row(0), &[0.0, 2.0, 1.0]);
        assert_eq!(s.row(1), &[0.0, 2.0, 1.0]);
        assert!(is_steiner_symmetric(&s, spec));
        assert!(steiner_symmetrize(&f, SteinerSpec { center: 3, ..spec }).is_err());
    }

    #[test]
    fn steiner_off_center_fills_available_side() {
        let d = Domain::new(2.0, 1.0, 4, 2).unwrap();
        let f = Field::from_values(d, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let s = steiner_symmetrize(&f, SteinerSpec { center: 0, placement: Placement::RightFirst })
            .unwrap();
        assert_eq!(s.row(0), &[4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn curtail_cases() {
        let p = prof(&[3.0, 2.0, 1.0]);
        assert_eq!(curtail(&p, 10.0).unwrap(), p);
        assert_eq!(curtail(&p, 3.0).unwrap(), p);
        assert_eq!(curtail(&p, 0.0).unwrap().values(), &[0.0, 0.0, 0.0]);
        let c = curtail(&p, 1.5).unwrap();
        assert_eq!(c.values(), &[3.0, 1.0, 0.0]);
        assert!(precedes(&c, &p));
        assert!(!precedes(&p, &c));
        assert!(curtail(&p, -1.0).is_err());
    }

    #[test]
    fn rearrange_onto_hand_examples() {
        let d = Domain::new(1.5, 1.0, 3, 2).unwrap();
        let p = prof(&[3.0, 2.0, 1.0]);
        let order = Field::from_values(d, vec![0.1, 0.9, 0.5, -1.0, -1.0, -1.0]).unwrap();
        let active = [true, true, true, false, false, false];
        let out = rearrange_onto(&p, &order, &active).unwrap();
        assert_eq!(out.values(), &[1.0, 3.0, 2.0, 0.0, 0.0, 0.0]);

        let active = [false, true, true, false, false, false];
        let out = rearrange_onto(&p, &order, &active).unwrap();
        assert_eq!(out.values(), &[0.0, 3.0, 2.0, 0.0, 0.0, 0.0]);
        let placed = Profile::new(out.values().to_vec(), 1.0).unwrap();
        let full = Profile::new(vec![3.0, 2.0, 1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(precedes(&placed, &full));
    }

    #[test]
    fn rearrange_onto_ties_prefer_low_rows() {
        let d = Domain::new(1.0, 1.0, 2, 2).unwrap();
        let p = prof(&[5.0, 0.0, 0.0, 0.0]);
        let order = Field::from_values(d, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let out = rearrange_onto(&p, &order, &[true; 4]).unwrap();
        assert_eq!(out.values(), &[5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rearrange_onto_self_order_is_fixed_point() {
        let d = Domain::new(1.0, 1.0, 3, 3).unwrap();
        let f = Field::from_values(d, (0..9).map(|k| ((k * 7) % 9) as f64 + 0.5).collect()).unwrap();
        let p = decreasing_rearrangement(&f).unwrap();
        assert_eq!(rearrange_onto(&p, &f, &[true; 9]).unwrap(), f);
    }
}
