//! Uniform discretization of the truncated half-plane strip `[-L, L] x (0, Z)`.
//!
//! Every cell has the same area, so a discrete rearrangement of a field is
//! exactly a permutation of its values. Cells are stored row-major starting
//! from the bottom row (smallest `x2`), left to right.
//!
//! Reductions sum their terms in sorted order. The result is deterministic and
//! bit-for-bit invariant under any permutation of the summands, which makes
//! integrals exactly invariant under whole-cell `x1` translations and
//! reflections of the grid.

use crate::error::{Error, Result};

/// Truncated strip `[-half_width, half_width] x (0, strip_height)` split into
/// `nx * ny` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    half_width: f64,
    strip_height: f64,
    nx: usize,
    ny: usize,
}

impl Domain {
    pub fn new(half_width: f64, strip_height: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidDomain(format!("half width must be > 0, got {half_width}")));
        }
        if !(strip_height.is_finite() && strip_height > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "strip height must be > 0, got {strip_height}"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidDomain(format!("need at least 2x2 cells, got {nx}x{ny}")));
        }
        Ok(Self { half_width, strip_height, nx, ny })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn strip_height(&self) -> f64 {
        self.strip_height
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width along `x1`.
    pub fn h1(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    /// Cell height along `x2`.
    pub fn h2(&self) -> f64 {
        self.strip_height / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn x1(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h1()
    }

    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h2()
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x1(i), self.x2(j)]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Inverse of [`Domain::index`]: `(column, row)`.
    #[inline]
    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// Column whose center is closest to `x1` (clamped to the grid).
    pub fn column_of(&self, x1: f64) -> usize {
        let s = (x1 + self.half_width) / self.h1() - 0.5;
        (s.round().max(0.0) as usize).min(self.nx - 1)
    }

    /// Row whose center is closest to `x2` (clamped to the grid).
    pub fn row_of(&self, x2: f64) -> usize {
        let s = x2 / self.h2() - 0.5;
        (s.round().max(0.0) as usize).min(self.ny - 1)
    }
}

/// Samples of a scalar (vorticity-like) function at the cell centers of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: Domain) -> Self {
        Self { domain, values: vec![0.0; domain.len()] }
    }

    pub fn from_values(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::LengthMismatch { expected: domain.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { domain, values })
    }

    /// Samples `f(x1, x2)` at every cell center.
    pub fn from_fn(domain: Domain, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.ny() {
            for i in 0..domain.nx() {
                values.push(f(domain.x1(i), domain.x2(j)));
            }
        }
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.domain.index(i, j);
        self.values[k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.domain.nx();
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn is_nonneg(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn ensure_nonneg(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::Negative { index, value: self.values[index] }),
            None => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Field { domain: self.domain, values })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    /// Translate by `k` whole columns (positive `k` moves mass towards `+x1`);
    /// cells shifted in from outside the grid are zero.
    pub fn shift_x1(&self, k: isize) -> Field {
        let nx = self.domain.nx() as isize;
        let mut out = Field::zeros(self.domain);
        for j in 0..self.domain.ny() {
            for i in 0..nx {
                let src = i - k;
                if (0..nx).contains(&src) {
                    out.set(i as usize, j, self.get(src as usize, j));
                }
            }
        }
        out
    }

    /// Translate by `k` whole rows (positive `k` moves mass upward); zero fill.
    pub fn shift_x2(&self, k: isize) -> Field {
        let ny = self.domain.ny() as isize;
        let mut out = Field::zeros(self.domain);
        for j in 0..ny {
            let src = j - k;
            if (0..ny).contains(&src) {
                for i in 0..self.domain.nx() {
                    out.set(i, j as usize, self.get(i, src as usize));
                }
            }
        }
        out
    }

    /// Mirror image under `x1 -> -x1`.
    pub fn reflect_x1(&self) -> Field {
        let nx = self.domain.nx();
        let mut out = Field::zeros(self.domain);
        for j in 0..self.domain.ny() {
            for i in 0..nx {
                out.set(nx - 1 - i, j, self.get(i, j));
            }
        }
        out
    }

    /// Total mass `h1 h2 sum(v)`.
    pub fn integrate(&self) -> f64 {
        self.domain.cell_area() * sorted_sum(self.values.iter().copied())
    }

    /// Impulse `h1 h2 sum(v x2)`.
    pub fn impulse(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.domain.ny() {
            let row = sorted_sum(self.row(j).iter().copied());
            total += row * self.domain.x2(j);
        }
        self.domain.cell_area() * total
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
        }
        let s = if p == 1.0 {
            sorted_sum(self.values.iter().map(|v| v.abs()))
        } else {
            sorted_sum(self.values.iter().map(|v| v.abs().powf(p)))
        };
        Ok((self.domain.cell_area() * s).powf(1.0 / p))
    }

    /// `|I(f)| + ||f||_1 + ||f||_p`, the perturbation norm of the stability problem.
    pub fn xp_norm(&self, p: f64) -> Result<f64> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("X^p norm needs p > 2, got {p}")));
        }
        Ok(self.impulse().abs() + self.lp_norm(1.0)? + self.lp_norm(p)?)
    }
}

/// Deterministic sum that does not depend on the order of its terms: the
/// terms are sorted, then added pairwise.
pub fn sorted_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_unstable_by(f64::total_cmp);
    pairwise_sum(&v)
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if v.len() <= BLOCK {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}
