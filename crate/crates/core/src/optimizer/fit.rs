//! Checks of the relation `ζ = φ(ψ - λ x2)` with `φ` nondecreasing: a
//! discordant-pair count, an isotonic fit of `φ`, and the virial identity
//! `2 ∫ Φ(Ψ) = λ I` with `Φ` the antiderivative of `φ`.

use crate::error::{Error, Result};
use crate::grid::{sorted_sum, Field};

/// Isotonic fit of `ζ` against `Ψ` plus agreement statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstVariationFit {
    /// Pooled blocks as `(mean Ψ, fitted ζ)`, `Ψ` ascending, `ζ` nondecreasing.
    pub breakpoints: Vec<(f64, f64)>,
    /// Jump locations of the step function `φ̂`; `knots.len() + 1 == levels.len()`.
    pub knots: Vec<f64>,
    pub levels: Vec<f64>,
    /// `Φ̂` at each knot.
    pub antiderivative: Vec<f64>,
    /// Discordant pairs over all pairs of support cells, in `[0, 1]`.
    pub residual: f64,
    pub discordant_pairs: u64,
    pub support_pairs: u64,
    /// Cells with `ζ > 0` where `Ψ <= 0`.
    pub support_violations: usize,
    /// `∫ Φ̂(Ψ)` over the grid.
    pub phi_integral: f64,
}

impl FirstVariationFit {
    /// `φ̂(s)`: zero for `s <= 0`, right-continuous steps above.
    pub fn phi(&self, s: f64) -> f64 {
        if s <= 0.0 || self.levels.is_empty() {
            return 0.0;
        }
        self.levels[self.knots.partition_point(|&t| t < s)]
    }

    /// `Φ̂(s) = ∫_0^s φ̂`.
    pub fn big_phi(&self, s: f64) -> f64 {
        if s <= 0.0 || self.levels.is_empty() {
            return 0.0;
        }
        let b = self.knots.partition_point(|&t| t < s);
        let (base, start) = if b == 0 { (0.0, 0.0) } else { (self.antiderivative[b - 1], self.knots[b - 1]) };
        base + self.levels[b] * (s - start)
    }

    /// `|2 ∫ Φ̂(Ψ) - λ I| / (λ I)`; zero for a zero field.
    pub fn virial_gap(&self, lambda: f64, impulse: f64) -> Result<f64> {
        if impulse == 0.0 && self.phi_integral == 0.0 {
            return Ok(0.0);
        }
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "virial gap needs a positive multiplier, got λ = {lambda}"
            )));
        }
        let rhs = lambda * impulse;
        Ok((2.0 * self.phi_integral - rhs).abs() / rhs)
    }

    /// Whether `ζ` is an exact nondecreasing function of `Ψ` vanishing where `Ψ <= 0`.
    pub fn is_exact(&self) -> bool {
        self.discordant_pairs == 0 && self.support_violations == 0
    }
}

/// Fits `ζ ≈ φ̂(Ψ)` and measures how far `ζ` is from a nondecreasing function
/// of `Ψ` on its support.
pub fn first_variation_residual(zeta: &Field, big_psi: &Field) -> Result<FirstVariationFit> {
    zeta.same_grid(big_psi)?;
    let z = zeta.values();
    let s = big_psi.values();

    let mut support: Vec<(f64, f64)> = (0..z.len()).filter(|&k| z[k] > 0.0).map(|k| (s[k], z[k])).collect();
    let support_violations = support.iter().filter(|&&(psi, _)| psi <= 0.0).count();
    support.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut seq: Vec<f64> = support.iter().map(|&(_, v)| v).collect();
    let n = seq.len() as u64;
    let support_pairs = n * n.saturating_sub(1) / 2;
    let discordant_pairs = count_inversions(&mut seq);
    let residual = if support_pairs == 0 { 0.0 } else { discordant_pairs as f64 / support_pairs as f64 };

    let mut pos: Vec<(f64, f64)> = (0..z.len()).filter(|&k| s[k] > 0.0).map(|k| (s[k], z[k])).collect();
    pos.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let blocks = pava(&pos);

    let breakpoints: Vec<(f64, f64)> = blocks.iter().map(|b| (b.psi_sum / b.count as f64, b.mean())).collect();
    let levels: Vec<f64> = blocks.iter().map(Block::mean).collect();
    let knots: Vec<f64> = blocks.windows(2).map(|w| 0.5 * (w[0].psi_max + w[1].psi_min)).collect();
    let mut antiderivative = Vec::with_capacity(knots.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (t, &v) in knots.iter().zip(&levels) {
        acc += v * (t - prev);
        antiderivative.push(acc);
        prev = *t;
    }

    let mut fit = FirstVariationFit {
        breakpoints,
        knots,
        levels,
        antiderivative,
        residual,
        discordant_pairs,
        support_pairs,
        support_violations,
        phi_integral: 0.0,
    };
    let area = zeta.domain().cell_area();
    fit.phi_integral = area * sorted_sum(s.iter().map(|&v| fit.big_phi(v)));
    Ok(fit)
}

#[derive(Debug, Clone, Copy)]
struct Block {
    sum: f64,
    count: usize,
    psi_sum: f64,
    psi_min: f64,
    psi_max: f64,
}

impl Block {
    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Pool-adjacent-violators on points already sorted by abscissa. Points with
/// equal abscissa always share a block, so the fit is a function of `Ψ`.
fn pava(points: &[(f64, f64)]) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    for &(psi, v) in points {
        let mut cur = Block { sum: v, count: 1, psi_sum: psi, psi_min: psi, psi_max: psi };
        while let Some(last) = blocks.last() {
            if last.mean() >= cur.mean() || last.psi_max == cur.psi_min {
                cur = Block {
                    sum: last.sum + cur.sum,
                    count: last.count + cur.count,
                    psi_sum: last.psi_sum + cur.psi_sum,
                    psi_min: last.psi_min,
                    psi_max: cur.psi_max,
                };
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
    blocks
}

/// Number of pairs `i < j` with `v[i] > v[j]`; sorts `v` as a side effect.
fn count_inversions(v: &mut [f64]) -> u64 {
    let mut buf = v.to_vec();
    merge_count(v, &mut buf)
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}
