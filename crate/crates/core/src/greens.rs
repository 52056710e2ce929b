//! Green's function of `-Δ` in the upper half-plane, the stream-function
//! operator built from it, the induced velocity, and the kinetic energy.
//!
//! The discrete operator maps cell values to cell values:
//!
//! ```text
//! psi(t) = h1 h2 * sum_s W(t, s) f(s)
//! ```
//!
//! Far pairs use the point kernel at the two cell centers. Pairs within
//! [`NEAR_RADIUS`] cells (Chebyshev distance), and the self-cell, use the
//! kernel averaged over a `SUBCELLS x SUBCELLS` midpoint grid of the source
//! cell, symmetrized over the two roles so that `W(t, s) = W(s, t)`.
//!
//! The weights only depend on the column offset and the two rows, so the
//! table is stored per row pair and applied either by direct summation (the
//! reference path) or as a row-wise circular convolution through the FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Domain, Field};

/// Chebyshev cell distance below which the subcell quadrature is used.
pub const NEAR_RADIUS: usize = 2;
/// Midpoint subcells per direction for near pairs and the self-cell.
pub const SUBCELLS: usize = 16;

/// `G(x, y) = (1/4π) log(1 + 4 x2 y2 / |x - y|^2)`, unchecked.
#[inline]
pub fn kernel(x: [f64; 2], y: [f64; 2]) -> f64 {
    let d1 = x[0] - y[0];
    let d2 = x[1] - y[1];
    let r2 = d1 * d1 + d2 * d2;
    (4.0 * x[1] * y[1] / r2).ln_1p() / (4.0 * PI)
}

/// Half-plane Green's function between two distinct points of the open upper half-plane.
pub fn green_point(x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    if !(x[1] > 0.0 && y[1] > 0.0) {
        return Err(Error::InvalidParameter("both points must satisfy x2 > 0".into()));
    }
    if x == y {
        return Err(Error::InvalidParameter("kernel is singular at coincident points".into()));
    }
    Ok(kernel(x, y))
}

/// Average of `G(target, .)` over the cell centered at `source`.
fn cell_average(target: [f64; 2], source: [f64; 2], h1: f64, h2: f64) -> f64 {
    let n = SUBCELLS as f64;
    let mut acc = Vec::with_capacity(SUBCELLS * SUBCELLS);
    for b in 0..SUBCELLS {
        let y2 = source[1] + ((b as f64 + 0.5) / n - 0.5) * h2;
        for a in 0..SUBCELLS {
            let y1 = source[0] + ((a as f64 + 0.5) / n - 0.5) * h1;
            acc.push(kernel(target, [y1, y2]));
        }
    }
    pairwise_sum(&acc) / (n * n)
}

/// Precomputed interaction weights for one [`Domain`].
#[derive(Clone)]
pub struct KernelTable {
    domain: Domain,
    /// `weights[pair(j, jp) * nx + d]`, `j <= jp`, `d = |i - ip|`.
    weights: Vec<f64>,
    /// Real spectra of the circularly embedded rows, length `2 nx` per pair.
    spectra: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl KernelTable {
    pub fn new(domain: Domain) -> Self {
        let (nx, ny) = (domain.nx(), domain.ny());
        let (h1, h2) = (domain.h1(), domain.h2());
        let npairs = ny * (ny + 1) / 2;
        let mut weights = vec![0.0; npairs * nx];
        for j in 0..ny {
            for jp in j..ny {
                let base = pair_index(ny, j, jp) * nx;
                for d in 0..nx {
                    let t = [0.0, domain.x2(j)];
                    let s = [d as f64 * h1, domain.x2(jp)];
                    weights[base + d] = if d <= NEAR_RADIUS && jp - j <= NEAR_RADIUS {
                        if d == 0 && j == jp {
                            cell_average(t, s, h1, h2)
                        } else {
                            0.5 * (cell_average(t, s, h1, h2) + cell_average(s, t, h1, h2))
                        }
                    } else {
                        kernel(t, s)
                    };
                }
            }
        }

        let m = 2 * nx;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let mut spectra = vec![0.0; npairs * m];
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for p in 0..npairs {
            let w = &weights[p * nx..(p + 1) * nx];
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            buf[0] = Complex64::new(w[0], 0.0);
            for d in 1..nx {
                buf[d] = Complex64::new(w[d], 0.0);
                buf[m - d] = Complex64::new(w[d], 0.0);
            }
            fft.process(&mut buf);
            for (k, c) in buf.iter().enumerate() {
                spectra[p * m + k] = c.re;
            }
        }
        Self { domain, weights, spectra, fft, ifft }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn near_radius(&self) -> usize {
        NEAR_RADIUS
    }

    /// Weight between a target in row `j` and a source in row `jp`, `d` columns apart.
    #[inline]
    pub fn weight(&self, d: usize, j: usize, jp: usize) -> f64 {
        let (a, b) = if j <= jp { (j, jp) } else { (jp, j) };
        self.weights[pair_index(self.domain.ny(), a, b) * self.domain.nx() + d]
    }

    pub fn self_weight(&self, j: usize) -> f64 {
        self.weight(0, j, j)
    }

    fn pair_weights(&self, j: usize, jp: usize) -> &[f64] {
        let (a, b) = if j <= jp { (j, jp) } else { (jp, j) };
        let nx = self.domain.nx();
        let p = pair_index(self.domain.ny(), a, b);
        &self.weights[p * nx..(p + 1) * nx]
    }

    fn pair_spectrum(&self, j: usize, jp: usize) -> &[f64] {
        let (a, b) = if j <= jp { (j, jp) } else { (jp, j) };
        let m = 2 * self.domain.nx();
        let p = pair_index(self.domain.ny(), a, b);
        &self.spectra[p * m..(p + 1) * m]
    }
}

#[inline]
fn pair_index(ny: usize, j: usize, jp: usize) -> usize {
    j * (2 * ny - j + 1) / 2 + (jp - j)
}

/// How [`GreensOperator::stream`] applies the kernel table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamMethod {
    /// O(N^2) direct summation.
    Direct,
    /// Row-pair circular convolution via the FFT along `x1`.
    #[default]
    Fft,
}

/// Discrete velocity `u = (∂2 ψ, -∂1 ψ)` at the cell centers.
#[derive(Debug, Clone)]
pub struct VelocityField {
    domain: Domain,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl VelocityField {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_speed(&self) -> f64 {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// Component values with the image extension below the axis: `u1` is even
    /// and `u2` odd in `x2`. Indices outside the strip otherwise clamp.
    #[inline]
    pub fn extended(&self, i: isize, j: isize) -> [f64; 2] {
        let (nx, ny) = (self.domain.nx() as isize, self.domain.ny() as isize);
        let i = i.clamp(0, nx - 1) as usize;
        let (jj, sign) = if j < 0 { (-j - 1, -1.0) } else { (j, 1.0) };
        let jj = jj.min(ny - 1) as usize;
        let k = self.domain.index(i, jj);
        [self.u1[k], sign * self.u2[k]]
    }

    /// Bilinear sample at an arbitrary point, using the image extension.
    pub fn sample_linear(&self, x: [f64; 2]) -> [f64; 2] {
        let d = &self.domain;
        let s1 = (x[0] + d.half_width()) / d.h1() - 0.5;
        let s2 = x[1] / d.h2() - 0.5;
        let (i0, j0) = (s1.floor(), s2.floor());
        let (t1, t2) = (s1 - i0, s2 - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let mut out = [0.0; 2];
        for (dj, w2) in [(0, 1.0 - t2), (1, t2)] {
            for (di, w1) in [(0, 1.0 - t1), (1, t1)] {
                let u = self.extended(i0 + di, j0 + dj);
                out[0] += w1 * w2 * u[0];
                out[1] += w1 * w2 * u[1];
            }
        }
        out
    }

}

/// The operator `𝒢` on one grid, with energy and velocity built on top of it.
#[derive(Debug, Clone)]
pub struct GreensOperator {
    table: Arc<KernelTable>,
    method: StreamMethod,
}

impl GreensOperator {
    pub fn new(domain: Domain) -> Self {
        Self { table: Arc::new(KernelTable::new(domain)), method: StreamMethod::default() }
    }

    pub fn with_method(mut self, method: StreamMethod) -> Self {
        self.method = method;
        self
    }

    pub fn method(&self) -> StreamMethod {
        self.method
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn domain(&self) -> &Domain {
        self.table.domain()
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.domain() != self.domain() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `ψ = 𝒢 f` at the cell centers.
    pub fn stream(&self, f: &Field) -> Result<Field> {
        match self.method {
            StreamMethod::Direct => self.stream_direct(f),
            StreamMethod::Fft => self.stream_fft(f),
        }
    }

    /// Reference path: direct summation in a fixed order per target cell.
    pub fn stream_direct(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let d = *self.domain();
        let (nx, ny) = (d.nx(), d.ny());
        let sources: Vec<(usize, usize, f64)> = (0..ny)
            .flat_map(|jp| (0..nx).map(move |ip| (ip, jp)))
            .map(|(ip, jp)| (ip, jp, f.get(ip, jp)))
            .filter(|s| s.2 != 0.0)
            .collect();
        let mut out = Field::zeros(d);
        let area = d.cell_area();
        for j in 0..ny {
            for i in 0..nx {
                let mut acc = 0.0;
                for &(ip, jp, v) in &sources {
                    let w = self.table.pair_weights(j, jp)[i.abs_diff(ip)];
                    acc += w * v;
                }
                out.set(i, j, area * acc);
            }
        }
        Ok(out)
    }

    /// Accelerated path: per target row, `sum_jp K̂(j, jp) · F̂(jp)` followed by one inverse FFT.
    pub fn stream_fft(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let d = *self.domain();
        let (nx, ny) = (d.nx(), d.ny());
        let m = 2 * nx;
        let zero = Complex64::new(0.0, 0.0);

        let active: Vec<usize> = (0..ny).filter(|&jp| f.row(jp).iter().any(|&v| v != 0.0)).collect();
        let mut rows = vec![zero; active.len() * m];
        for (slot, &jp) in active.iter().enumerate() {
            let buf = &mut rows[slot * m..(slot + 1) * m];
            for (c, &v) in buf.iter_mut().zip(f.row(jp)) {
                *c = Complex64::new(v, 0.0);
            }
            self.table.fft.process(buf);
        }

        let mut out = Field::zeros(d);
        let scale = d.cell_area() / m as f64;
        let mut acc = vec![zero; m];
        for j in 0..ny {
            acc.iter_mut().for_each(|c| *c = zero);
            for (slot, &jp) in active.iter().enumerate() {
                let spec = self.table.pair_spectrum(j, jp);
                let src = &rows[slot * m..(slot + 1) * m];
                for ((a, s), &k) in acc.iter_mut().zip(src).zip(spec) {
                    *a += s * k;
                }
            }
            self.table.ifft.process(&mut acc);
            for (i, a) in acc.iter().take(nx).enumerate() {
                // The exact result is nonnegative; clip roundoff.
                out.set(i, j, (scale * a.re).max(0.0));
            }
        }
        Ok(out)
    }

    /// `h1 h2 sum f · 𝒢g`.
    pub fn bilinear(&self, f: &Field, g: &Field) -> Result<f64> {
        let psi = self.stream(g)?;
        Ok(inner(f, &psi))
    }

    /// `E(f) = ½ ⟨f, 𝒢f⟩`.
    pub fn energy(&self, f: &Field) -> Result<f64> {
        let psi = self.stream(f)?;
        Ok(0.5 * inner(f, &psi))
    }

    /// Energy when `ψ = 𝒢f` is already known.
    pub fn energy_with(&self, f: &Field, psi: &Field) -> f64 {
        0.5 * inner(f, psi)
    }

    /// `𝒢f` at an arbitrary point of the half-plane. Cells within the near
    /// radius of `x` are integrated with the subcell rule.
    pub fn stream_at(&self, f: &Field, x: [f64; 2]) -> Result<f64> {
        self.check(f)?;
        if x[1] <= 0.0 {
            return Err(Error::InvalidParameter("evaluation point must have x2 > 0".into()));
        }
        let d = self.domain();
        let (h1, h2) = (d.h1(), d.h2());
        let reach = NEAR_RADIUS as f64 + 0.5;
        let mut terms = Vec::new();
        for j in 0..d.ny() {
            for i in 0..d.nx() {
                let v = f.get(i, j);
                if v == 0.0 {
                    continue;
                }
                let c = d.center(i, j);
                let near = ((x[0] - c[0]) / h1).abs() <= reach && ((x[1] - c[1]) / h2).abs() <= reach;
                let w = if near { cell_average(x, c, h1, h2) } else { kernel(x, c) };
                terms.push(w * v);
            }
        }
        Ok(d.cell_area() * pairwise_sum(&terms))
    }

    /// `u = ∇⊥ψ = (∂2ψ, -∂1ψ)` by finite differences of `ψ = 𝒢f`.
    pub fn velocity(&self, f: &Field) -> Result<VelocityField> {
        let psi = self.stream(f)?;
        Ok(velocity_from_stream(&psi))
    }
}

/// Centered differences in the interior, second-order one-sided differences at
/// the lateral and top edges, and the odd image `ψ(x1, -x2) = -ψ(x1, x2)` for
/// `∂2ψ` on the bottom row.
pub fn velocity_from_stream(psi: &Field) -> VelocityField {
    let d = *psi.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let (h1, h2) = (d.h1(), d.h2());
    let mut u1 = vec![0.0; d.len()];
    let mut u2 = vec![0.0; d.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = d.index(i, j);
            let dpsi2 = if j == 0 {
                (psi.get(i, 1) + psi.get(i, 0)) / (2.0 * h2)
            } else if j == ny - 1 {
                if ny >= 3 {
                    (3.0 * psi.get(i, j) - 4.0 * psi.get(i, j - 1) + psi.get(i, j - 2)) / (2.0 * h2)
                } else {
                    (psi.get(i, j) - psi.get(i, j - 1)) / h2
                }
            } else {
                (psi.get(i, j + 1) - psi.get(i, j - 1)) / (2.0 * h2)
            };
            let dpsi1 = if nx < 3 {
                (psi.get(1, j) - psi.get(0, j)) / h1
            } else if i == 0 {
                (-3.0 * psi.get(0, j) + 4.0 * psi.get(1, j) - psi.get(2, j)) / (2.0 * h1)
            } else if i == nx - 1 {
                (3.0 * psi.get(i, j) - 4.0 * psi.get(i - 1, j) + psi.get(i - 2, j)) / (2.0 * h1)
            } else {
                (psi.get(i + 1, j) - psi.get(i - 1, j)) / (2.0 * h1)
            };
            u1[k] = dpsi2;
            u2[k] = -dpsi1;
        }
    }
    VelocityField { domain: d, u1, u2 }
}

/// `h1 h2 sum f g` with a fixed pairwise summation order.
pub fn inner(f: &Field, g: &Field) -> f64 {
    let prods: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    f.domain().cell_area() * pairwise_sum(&prods)
}
