//! Quaternion-valued signals sampled on a uniform 2-D grid.
//!
//! Samples sit at cell lower-left corners, `t_k = min + k h`, with the first
//! axis (`x1`) slow in the row-major data layout. Integrals use the rectangle
//! rule with weight `h1 h2`.

mod io;
mod signal;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use crate::spectral::{neumaier_sum, neumaier_sum_q};

pub use io::{export_csv, import_ppm, load_qf2, read_qf2, save_qf2, write_qf2, Qf2Header};
pub use signal::{MixtureTerm, Signal};

/// Tolerance (in units of the step) for deciding that a coordinate is a grid sample.
const ON_GRID_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, x1: (f64, f64), x2: (f64, f64)) -> Result<Self> {
        let spec = Self { n1, n2, x1_min: x1.0, x1_max: x1.1, x2_min: x2.0, x2_max: x2.1 };
        spec.validate()?;
        Ok(spec)
    }

    /// Square grid `[lo, hi)²` with `resolution` samples per unit length.
    pub fn per_unit(resolution: usize, lo: i64, hi: i64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::InvalidGrid(format!("empty extent [{lo}, {hi})")));
        }
        let n = resolution * (hi - lo) as usize;
        Self::new(n, n, (lo as f64, hi as f64), (lo as f64, hi as f64))
    }

    /// Square grid on the unit cube `Q = [0, 1)²`.
    pub fn unit_cube(samples: usize) -> Result<Self> {
        Self::new(samples, samples, (0.0, 1.0), (0.0, 1.0))
    }

    fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidGrid(format!("need n1, n2 >= 2, got {}x{}", self.n1, self.n2)));
        }
        let finite = [self.x1_min, self.x1_max, self.x2_min, self.x2_max].iter().all(|v| v.is_finite());
        if !finite || self.x1_max <= self.x1_min || self.x2_max <= self.x2_min {
            return Err(Error::InvalidGrid(format!("bad extent {self:?}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        (self.x1_max - self.x1_min) / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        (self.x2_max - self.x2_min) / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.x1_max - self.x1_min, self.x2_max - self.x2_min]
    }

    #[inline]
    pub fn x1(&self, k: usize) -> f64 {
        self.x1_min + k as f64 * self.h1()
    }

    #[inline]
    pub fn x2(&self, k: usize) -> f64 {
        self.x2_min + k as f64 * self.h2()
    }

    #[inline]
    pub fn point(&self, k1: usize, k2: usize) -> [f64; 2] {
        [self.x1(k1), self.x2(k2)]
    }

    #[inline]
    pub fn index(&self, k1: usize, k2: usize) -> usize {
        k1 * self.n2 + k2
    }

    /// Signed grid index of coordinate `x` on an axis, if `x` is a sample
    /// position of the (infinitely extended) grid.
    fn axis_index(x: f64, min: f64, h: f64) -> Option<i64> {
        let t = (x - min) / h;
        let k = t.round();
        ((t - k).abs() < ON_GRID_TOL).then_some(k as i64)
    }

    /// Signed indices of `x` on the infinitely extended grid.
    pub fn grid_index(&self, x: [f64; 2]) -> Result<[i64; 2]> {
        match (Self::axis_index(x[0], self.x1_min, self.h1()), Self::axis_index(x[1], self.x2_min, self.h2())) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(Error::OffGrid(x)),
        }
    }

    /// Samples per unit length, when that is the same integer on both axes.
    pub fn samples_per_unit(&self) -> Option<usize> {
        let r1 = 1.0 / self.h1();
        let r2 = 1.0 / self.h2();
        let r = r1.round();
        ((r1 - r).abs() < 1e-9 && (r2 - r).abs() < 1e-9 && r >= 1.0).then_some(r as usize)
    }

    /// `(r, o1, o2)` such that the sample with index `k` on axis `a` sits at
    /// `(o_a + k) / r`, i.e. the grid is a sub-grid of `ℤ/r` on both axes.
    pub(crate) fn lattice_alignment(&self) -> Result<(usize, i64, i64)> {
        let r = self.samples_per_unit().ok_or_else(|| {
            Error::ExtentNotIntegral(format!("step {}x{} is not 1/r for an integer r", self.h1(), self.h2()))
        })?;
        let rf = r as f64;
        let o1 = (self.x1_min * rf).round();
        let o2 = (self.x2_min * rf).round();
        if (self.x1_min * rf - o1).abs() > 1e-9 || (self.x2_min * rf - o2).abs() > 1e-9 {
            return Err(Error::ExtentNotIntegral(format!(
                "origin ({}, {}) is not a multiple of 1/{r}",
                self.x1_min, self.x2_min
            )));
        }
        Ok((r, o1 as i64, o2 as i64))
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// A quaternion-valued signal sampled on a [`GridSpec`]. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct QField {
    spec: GridSpec,
    data: Vec<Quaternion>,
}

impl QField {
    pub fn new(spec: GridSpec, data: Vec<Quaternion>) -> Result<Self> {
        spec.validate()?;
        if data.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!("data length {} for a {}x{} grid", data.len(), spec.n1, spec.n2)));
        }
        if let Some(i) = data.iter().position(|q| !q.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite sample at index {i}")));
        }
        Ok(Self { spec, data })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, data: vec![Quaternion::ZERO; spec.len()] }
    }

    /// Samples `f` at every grid point (rows in parallel).
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Quaternion + Sync,
    {
        let data: Vec<Quaternion> =
            (0..spec.len()).into_par_iter().map(|idx| f(spec.point(idx / spec.n2, idx % spec.n2))).collect();
        Self::new(spec, data)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Quaternion> {
        self.data
    }

    #[inline]
    pub fn get(&self, k1: usize, k2: usize) -> Quaternion {
        self.data[self.spec.index(k1, k2)]
    }

    /// Sample at signed indices, zero outside the grid.
    #[inline]
    pub fn get_or_zero(&self, k1: i64, k2: i64) -> Quaternion {
        if k1 < 0 || k2 < 0 || k1 as usize >= self.spec.n1 || k2 as usize >= self.spec.n2 {
            Quaternion::ZERO
        } else {
            self.get(k1 as usize, k2 as usize)
        }
    }

    /// Sample at an on-grid coordinate, zero outside the extent.
    pub fn at(&self, x: [f64; 2]) -> Result<Quaternion> {
        let [a, b] = self.spec.grid_index(x)?;
        Ok(self.get_or_zero(a, b))
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Quaternion) -> Quaternion + Sync,
    {
        Self { spec: self.spec, data: self.data.par_iter().map(|&q| f(q)).collect() }
    }

    pub fn zip_with<F>(&self, other: &QField, f: F) -> Result<Self>
    where
        F: Fn(Quaternion, Quaternion) -> Quaternion + Sync,
    {
        self.spec.check_same(&other.spec)?;
        let data = self.data.par_iter().zip(other.data.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { spec: self.spec, data })
    }

    pub fn add(&self, other: &QField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &QField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `x ↦ p f(x)`.
    pub fn left_mul(&self, p: Quaternion) -> Self {
        self.map(|q| p * q)
    }

    /// `x ↦ f(x) p`.
    pub fn right_mul(&self, p: Quaternion) -> Self {
        self.map(|q| q * p)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|q| q * s)
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|q| q.modulus()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &QField) -> Result<f64> {
        self.spec.check_same(&other.spec)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.max_abs_diff(*b)).fold(0.0, f64::max))
    }

    /// Row-wise partial sums reduced in row order, so results do not depend
    /// on the number of worker threads.
    fn reduce_rows<F>(&self, f: F) -> f64
    where
        F: Fn(&[Quaternion], usize) -> f64 + Sync,
    {
        let n2 = self.spec.n2;
        let rows: Vec<f64> = self.data.par_chunks(n2).enumerate().map(|(r, row)| f(row, r)).collect();
        neumaier_sum(rows)
    }

    /// `‖f‖₂ = (Σ |f|² h1 h2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.reduce_rows(|row, _| row.iter().map(|q| q.norm_sqr()).sum()) * self.spec.cell_area()
    }

    /// Symmetric real scalar product `Sc ∫ f ḡ`.
    pub fn real_inner(&self, g: &QField) -> Result<f64> {
        self.spec.check_same(&g.spec)?;
        let n2 = self.spec.n2;
        let s = self.reduce_rows(|row, r| {
            let grow = &g.data[r * n2..(r + 1) * n2];
            row.iter().zip(grow).map(|(a, b)| (*a * b.conj()).sc()).sum()
        });
        Ok(s * self.spec.cell_area())
    }

    /// Quaternion-valued inner product `∫ f ḡ` (left Hilbert module):
    /// `(p f, g) = p (f, g)` and `(f, p g) = (f, g) p̄`.
    pub fn h_inner(&self, g: &QField) -> Result<Quaternion> {
        self.spec.check_same(&g.spec)?;
        let n2 = self.spec.n2;
        let rows: Vec<Quaternion> = self
            .data
            .par_chunks(n2)
            .zip(g.data.par_chunks(n2))
            .map(|(a, b)| a.iter().zip(b).map(|(a, b)| *a * b.conj()).sum())
            .collect();
        Ok(neumaier_sum_q(rows) * self.spec.cell_area())
    }

    /// Wiener amalgam norm `Σ_n ‖f · T_n X_Q‖_∞` over the unit cells `n + [0,1)²`.
    pub fn wiener_norm(&self) -> Result<WienerReport> {
        let s = &self.spec;
        let (r, o1, o2) = s.lattice_alignment()?;
        let ri = r as i64;
        if o1 % ri != 0 || o2 % ri != 0 || !s.n1.is_multiple_of(r) || !s.n2.is_multiple_of(r) {
            return Err(Error::ExtentNotIntegral(format!(
                "extent [{}, {}) x [{}, {}) does not tile unit cells",
                s.x1_min, s.x1_max, s.x2_min, s.x2_max
            )));
        }
        let mut per_cell = BTreeMap::new();
        for k1 in 0..s.n1 {
            let c1 = (o1 + k1 as i64).div_euclid(ri);
            for k2 in 0..s.n2 {
                let c2 = (o2 + k2 as i64).div_euclid(ri);
                let m = self.get(k1, k2).modulus();
                let e = per_cell.entry([c1, c2]).or_insert(0.0_f64);
                if m > *e {
                    *e = m;
                }
            }
        }
        let norm_w = neumaier_sum(per_cell.values().copied());
        Ok(WienerReport { norm_w, per_cell })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WienerReport {
    pub norm_w: f64,
    /// Sup-norm of the field on each translated cube `n + [0,1)²`.
    pub per_cell: BTreeMap<[i64; 2], f64>,
}

impl WienerReport {
    /// Sum of cell suprema over cells `n` outside the box `lo ≤ n ≤ hi`.
    pub fn tail_outside(&self, lo: [i64; 2], hi: [i64; 2]) -> f64 {
        neumaier_sum(
            self.per_cell
                .iter()
                .filter(|(n, _)| n[0] < lo[0] || n[0] > hi[0] || n[1] < lo[1] || n[1] > hi[1])
                .map(|(_, v)| *v),
        )
    }
}
