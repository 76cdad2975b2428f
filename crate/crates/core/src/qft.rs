//! Discrete two-sided quaternionic Fourier transform and its windowed variant.
//!
//! The forward transform of a field on `t_k = min + k h` is evaluated on the
//! dual grid `ω_l = (l - ⌊n/2⌋) / L` (`L = n h`), i.e. frequencies centred on
//! zero with spacing `1/L`:
//!
//! ```text
//! f̂(ω) = Σ_x exp(-2πi x1 ω1) f(x) exp(-2πj x2 ω2) h1 h2
//! ```
//!
//! The sum is computed with two complex 2-D FFTs (see `spectral`), and the
//! discrete transform is exactly unitary up to the quadrature weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, QField};
use crate::quaternion::{exp_i, exp_j, Carrier, CarrierTerm, Quaternion};
use crate::spectral::{merge_all, neumaier_sum, neumaier_sum_q, split_all, transform_axis, AxisMap};

/// Fraction of each frequency axis (at the high end) treated as the
/// leakage shell by [`Spectrum::leakage`].
const LEAKAGE_SHELL: f64 = 0.1;

/// Two-sided QFT of a field, sampled on the dual grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    field: QField,
    spatial: GridSpec,
}

impl Spectrum {
    /// Frequency samples as a field over the dual grid.
    pub fn field(&self) -> &QField {
        &self.field
    }

    /// Grid of the signal this spectrum came from.
    pub fn spatial(&self) -> &GridSpec {
        &self.spatial
    }

    pub fn l2_norm(&self) -> f64 {
        self.field.l2_norm()
    }

    pub fn real_inner(&self, other: &Spectrum) -> Result<f64> {
        self.field.real_inner(&other.field)
    }

    /// Frequency value at a dual-grid point.
    pub fn at(&self, omega: [f64; 2]) -> Result<Quaternion> {
        self.field.at(omega)
    }

    /// Share of the spectral energy in the outer shell `|ω_a| > 0.9 ω_max`
    /// on either axis. Signals with a non-negligible share are not resolved
    /// by the grid.
    pub fn leakage(&self) -> f64 {
        let s = self.field.spec();
        let lim1 = (1.0 - LEAKAGE_SHELL) * s.x1_min.abs();
        let lim2 = (1.0 - LEAKAGE_SHELL) * s.x2_min.abs();
        let mut shell = Vec::new();
        let mut total = Vec::new();
        for k1 in 0..s.n1 {
            for k2 in 0..s.n2 {
                let e = self.field.get(k1, k2).norm_sqr();
                total.push(e);
                let [w1, w2] = s.point(k1, k2);
                if w1.abs() > lim1 || w2.abs() > lim2 {
                    shell.push(e);
                }
            }
        }
        let t = neumaier_sum(total);
        if t == 0.0 {
            0.0
        } else {
            neumaier_sum(shell) / t
        }
    }

    /// Rebuilds a spectrum from frequency samples and the spatial grid.
    pub fn from_parts(field: QField, spatial: GridSpec) -> Result<Self> {
        let dual = dual_grid(&spatial)?;
        field.spec().check_same(&dual)?;
        Ok(Self { field, spatial })
    }
}

/// Dual grid of `spec`: same sample counts, spacing `1/L`, centred on zero.
pub fn dual_grid(spec: &GridSpec) -> Result<GridSpec> {
    let [l1, l2] = spec.extent();
    let c1 = (spec.n1 / 2) as f64;
    let c2 = (spec.n2 / 2) as f64;
    GridSpec::new(spec.n1, spec.n2, (-c1 / l1, (spec.n1 as f64 - c1) / l1), (-c2 / l2, (spec.n2 as f64 - c2) / l2))
}

/// `Σ exp(s1 2πi x1 y1) q exp(s2 2πj x2 y2)` from grid `from` onto grid `to`.
fn two_sided(data: &[Quaternion], from: &GridSpec, to: &GridSpec, s1: f64, s2: f64) -> Vec<Quaternion> {
    let shape = [from.n1, from.n2];
    let map1 = AxisMap { t0: from.x1_min, dt: from.h1(), s0: to.x1_min, ds: to.h1() };
    let map2 = AxisMap { t0: from.x2_min, dt: from.h2(), s0: to.x2_min, ds: to.h2() };
    let (mut p, mut m) = split_all(data);
    // P carries e^{i(φ+ψ)}, M carries e^{i(φ-ψ)}.
    transform_axis(&mut p, &shape, 0, map1, s1);
    transform_axis(&mut p, &shape, 1, map2, s2);
    transform_axis(&mut m, &shape, 0, map1, s1);
    transform_axis(&mut m, &shape, 1, map2, -s2);
    merge_all(&p, &m)
}

pub fn qft_forward(f: &QField) -> Result<Spectrum> {
    let spatial = *f.spec();
    let dual = dual_grid(&spatial)?;
    let w = spatial.cell_area();
    let data = two_sided(f.data(), &spatial, &dual, -1.0, -1.0).into_iter().map(|q| q * w).collect();
    Ok(Spectrum { field: QField::new(dual, data)?, spatial })
}

/// `f(x) = Σ_ω exp(2πi x1 ω1) F(ω) exp(2πj x2 ω2) Δω1 Δω2`.
pub fn qft_inverse(spectrum: &Spectrum) -> Result<QField> {
    let dual = *spectrum.field.spec();
    let w = dual.cell_area();
    let data =
        two_sided(spectrum.field.data(), &dual, &spectrum.spatial, 1.0, 1.0).into_iter().map(|q| q * w).collect();
    QField::new(spectrum.spatial, data)
}

/// `(⟨f, g⟩, ⟨f̂, ĝ⟩)`.
pub fn parseval_check(f: &QField, g: &QField) -> Result<(f64, f64)> {
    let lhs = f.real_inner(g)?;
    let rhs = qft_forward(f)?.real_inner(&qft_forward(g)?)?;
    Ok((lhs, rhs))
}

/// A real-valued window function sampled on the signal grid, centred at the
/// origin; translates `g(x - b)` are index shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    field: QField,
    origin: [i64; 2],
}

impl Window {
    pub fn new(field: QField) -> Result<Self> {
        if let Some(index) = field.data().iter().position(|q| q.vec() != Quaternion::ZERO) {
            return Err(Error::WindowNotReal { index });
        }
        if field.data().iter().all(|q| q.q0 == 0.0) {
            return Err(Error::InvalidParameter("window is identically zero".into()));
        }
        let origin = field.spec().grid_index([0.0, 0.0])?;
        Ok(Self { field, origin })
    }

    /// `exp(-π |x|²)` on `spec`.
    pub fn gaussian(spec: GridSpec) -> Result<Self> {
        let pi = std::f64::consts::PI;
        Self::new(QField::from_fn(spec, |x| Quaternion::real((-pi * (x[0] * x[0] + x[1] * x[1])).exp()))?)
    }

    pub fn field(&self) -> &QField {
        &self.field
    }

    pub fn norm_sqr(&self) -> f64 {
        self.field.l2_norm_sqr()
    }

    /// Index shift of a translation by `b`.
    fn shift(&self, b: [f64; 2]) -> Result<[i64; 2]> {
        let s = self.field.spec();
        let [a1, a2] = s.grid_index([s.x1_min + b[0], s.x2_min + b[1]])?;
        Ok([a1, a2])
    }

    /// `g(x_k - b)` for grid index `k`, given the shift of `b`.
    #[inline]
    fn translated(&self, k1: usize, k2: usize, shift: [i64; 2]) -> f64 {
        self.field.get_or_zero(k1 as i64 - shift[0], k2 as i64 - shift[1]).q0
    }

    /// The analysis kernel `M_ω T_b g` at `x`: `exp(2πj ω2 x2) g(x-b) C_r(exp(2πi ω1 x1))`.
    fn kernel(&self, k1: usize, k2: usize, shift: [f64; 2], omega: [f64; 2]) -> Result<CarrierTerm> {
        let s = self.field.spec();
        let x = s.point(k1, k2);
        let sh = self.shift(shift)?;
        let g = self.translated(k1, k2, sh);
        Ok(CarrierTerm { head: exp_j(omega[1] * x[1]) * g, carrier: Carrier::right(exp_i(omega[0] * x[0])) })
    }

    #[allow(dead_code)]
    fn origin(&self) -> [i64; 2] {
        self.origin
    }
}

/// Equispaced 1-D sample positions `start + k step`, `k < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl AxisGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Self {
        Self { start, step, count }
    }

    /// Default WQFT quadrature axis: `[-4, 4]` with step `1/4`.
    pub fn default_box() -> Self {
        Self::new(-4.0, 0.25, 33)
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

/// `G_g f(b, ω)` on a 4-D grid, layout `[b1][b2][ω1][ω2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WqftCoefficients {
    pub b_grid: [AxisGrid; 2],
    pub omega_grid: [AxisGrid; 2],
    data: Vec<Quaternion>,
}

impl WqftCoefficients {
    pub fn zeros(b_grid: [AxisGrid; 2], omega_grid: [AxisGrid; 2]) -> Self {
        let n = b_grid[0].count * b_grid[1].count * omega_grid[0].count * omega_grid[1].count;
        Self { b_grid, omega_grid, data: vec![Quaternion::ZERO; n] }
    }

    fn omega_len(&self) -> usize {
        self.omega_grid[0].count * self.omega_grid[1].count
    }

    #[inline]
    pub fn get(&self, b: [usize; 2], w: [usize; 2]) -> Quaternion {
        let bi = b[0] * self.b_grid[1].count + b[1];
        self.data[bi * self.omega_len() + w[0] * self.omega_grid[1].count + w[1]]
    }

    pub fn data(&self) -> &[Quaternion] {
        &self.data
    }

    /// Quadrature weight `Δb1 Δb2 Δω1 Δω2`.
    pub fn weight(&self) -> f64 {
        self.b_grid[0].step * self.b_grid[1].step * self.omega_grid[0].step * self.omega_grid[1].step
    }

    /// `ΣΣ |G|² Δb Δω`.
    pub fn energy(&self) -> f64 {
        neumaier_sum(self.data.chunks(self.omega_len()).map(|c| c.iter().map(|q| q.norm_sqr()).sum::<f64>()))
            * self.weight()
    }

    /// `ΣΣ |Sc G|² Δb Δω`.
    pub fn scalar_energy(&self) -> f64 {
        neumaier_sum(self.data.chunks(self.omega_len()).map(|c| c.iter().map(|q| q.q0 * q.q0).sum::<f64>()))
            * self.weight()
    }
}

/// Dual-grid indices of the ω grid; errors if a sample is off the dual grid.
fn omega_indices(dual: &GridSpec, grid: &[AxisGrid; 2]) -> Result<(Vec<usize>, Vec<usize>)> {
    let idx = |axis: usize| -> Result<Vec<usize>> {
        (0..grid[axis].count)
            .map(|k| {
                let mut w = [dual.x1_min, dual.x2_min];
                w[axis] = grid[axis].at(k);
                let i = dual.grid_index(w)?[axis];
                let n = if axis == 0 { dual.n1 } else { dual.n2 };
                if i < 0 || i as usize >= n {
                    return Err(Error::InvalidParameter(format!(
                        "frequency {} outside the dual grid",
                        grid[axis].at(k)
                    )));
                }
                Ok(i as usize)
            })
            .collect()
    };
    Ok((idx(0)?, idx(1)?))
}

fn check_window(f: &QField, window: &Window) -> Result<()> {
    f.spec().check_same(window.field.spec())
}

/// Windowed QFT `G_g f(b, ω) = Σ_x exp(-2πi x1 ω1) f(x) g(x-b) exp(-2πj x2 ω2) h1 h2`,
/// computed as the QFT of `f · T_b g` for every `b`.
pub fn wqft(f: &QField, window: &Window, b_grid: [AxisGrid; 2], omega_grid: [AxisGrid; 2]) -> Result<WqftCoefficients> {
    check_window(f, window)?;
    let spec = *f.spec();
    let dual = dual_grid(&spec)?;
    let (wi1, wi2) = omega_indices(&dual, &omega_grid)?;
    let bs: Vec<[f64; 2]> = (0..b_grid[0].count)
        .flat_map(|a| (0..b_grid[1].count).map(move |b| [b_grid[0].at(a), b_grid[1].at(b)]))
        .collect();
    let shifts = bs.iter().map(|&b| window.shift(b)).collect::<Result<Vec<_>>>()?;

    let blocks: Vec<Vec<Quaternion>> = shifts
        .par_iter()
        .map(|&sh| -> Result<Vec<Quaternion>> {
            let product: Vec<Quaternion> = (0..spec.len())
                .map(|idx| {
                    let (k1, k2) = (idx / spec.n2, idx % spec.n2);
                    f.data()[idx] * window.translated(k1, k2, sh)
                })
                .collect();
            let spectrum = qft_forward(&QField::new(spec, product)?)?;
            let mut out = Vec::with_capacity(wi1.len() * wi2.len());
            for &l1 in &wi1 {
                for &l2 in &wi2 {
                    out.push(spectrum.field.get(l1, l2));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(WqftCoefficients { b_grid, omega_grid, data: blocks.concat() })
}

/// One WQFT value through the quaternion-valued inner product
/// `(f, M_ω T_b g) = Σ_x f(x) conj(M_ω T_b g (x)) h1 h2`, using carriers.
pub fn wqft_direct(f: &QField, window: &Window, b: [f64; 2], omega: [f64; 2]) -> Result<Quaternion> {
    check_window(f, window)?;
    let s = *f.spec();
    let rows: Vec<Quaternion> = (0..s.n1)
        .into_par_iter()
        .map(|k1| -> Result<Quaternion> {
            let mut acc = Quaternion::ZERO;
            for k2 in 0..s.n2 {
                let kernel = window.kernel(k1, k2, b, omega)?;
                acc += kernel.mul_conj(f.get(k1, k2));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(neumaier_sum_q(rows) * s.cell_area())
}

/// `f(x) ≈ ‖g‖⁻² ΣΣ exp(2πi x1 ω1) G(b,ω) g(x-b) exp(2πj x2 ω2) Δω Δb`
/// on the window's grid.
pub fn wqft_reconstruct(coeffs: &WqftCoefficients, window: &Window) -> Result<QField> {
    let spec = *window.field.spec();
    let dual = dual_grid(&spec)?;
    let (wi1, wi2) = omega_indices(&dual, &coeffs.omega_grid)?;
    let dw = coeffs.omega_grid[0].step * coeffs.omega_grid[1].step;
    let db = coeffs.b_grid[0].step * coeffs.b_grid[1].step;
    let scale = dw / dual.cell_area();
    let norm = window.norm_sqr();

    let nb2 = coeffs.b_grid[1].count;
    let n_b = coeffs.b_grid[0].count * nb2;
    let mut acc = vec![Quaternion::ZERO; spec.len()];
    // Fixed chunking with in-order accumulation keeps the result independent
    // of the thread count.
    const CHUNK: usize = 16;
    let indices: Vec<usize> = (0..n_b).collect();
    for chunk in indices.chunks(CHUNK) {
        let parts: Vec<Vec<Quaternion>> = chunk
            .par_iter()
            .map(|&bi| -> Result<Vec<Quaternion>> {
                let b = [coeffs.b_grid[0].at(bi / nb2), coeffs.b_grid[1].at(bi % nb2)];
                let sh = window.shift(b)?;
                let mut spectrum = vec![Quaternion::ZERO; dual.len()];
                for (a, &l1) in wi1.iter().enumerate() {
                    for (c, &l2) in wi2.iter().enumerate() {
                        spectrum[dual.index(l1, l2)] = coeffs.get([bi / nb2, bi % nb2], [a, c]);
                    }
                }
                let inv = qft_inverse(&Spectrum { field: QField::new(dual, spectrum)?, spatial: spec })?;
                Ok(inv
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(idx, &q)| q * (window.translated(idx / spec.n2, idx % spec.n2, sh) * scale))
                    .collect())
            })
            .collect::<Result<_>>()?;
        for part in parts {
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
        }
    }
    let w = db / norm;
    QField::new(spec, acc.into_iter().map(|q| q * w).collect())
}

/// Energies of the Gabor transform `λ ↦ (f, e_λ)` with the Gaussian window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaborEnergy {
    /// `∫∫ |⟨f, e_λ⟩|² dλ` (real scalar product).
    pub scalar: f64,
    /// `∫∫ |(f, e_λ)|² dλ` (quaternion-valued product).
    pub full: f64,
    /// `‖f‖₂²`.
    pub norm_sqr: f64,
}

impl GaborEnergy {
    pub fn scalar_ratio(&self) -> f64 {
        self.scalar / self.norm_sqr
    }

    pub fn full_ratio(&self) -> f64 {
        self.full / self.norm_sqr
    }
}

/// Gabor energies by quadrature over the default `(b, ω)` box.
pub fn gabor_energy(f: &QField) -> Result<GaborEnergy> {
    gabor_energy_on(f, [AxisGrid::default_box(); 2], [AxisGrid::default_box(); 2])
}

pub fn gabor_energy_on(f: &QField, b_grid: [AxisGrid; 2], omega_grid: [AxisGrid; 2]) -> Result<GaborEnergy> {
    let norm_sqr = f.l2_norm_sqr();
    if norm_sqr == 0.0 {
        return Ok(GaborEnergy { scalar: 0.0, full: 0.0, norm_sqr });
    }
    let window = Window::gaussian(*f.spec())?;
    let c = wqft(f, &window, b_grid, omega_grid)?;
    Ok(GaborEnergy { scalar: c.scalar_energy(), full: c.energy(), norm_sqr })
}
