//! Quaternionic Zak transform and the theta series of its Gaussian atoms.
//!
//! ```text
//! Z f(x, ω) = Σ_m exp(2πi m1 ω1) f(x - m) exp(2πj m2 ω2)
//! ```
//!
//! For on-grid `x` the translates `f(x - m)` are exact grid lookups, so the
//! transform needs a field whose step is `1/r` for an integer `r` and whose
//! origin is a multiple of `1/r`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{read_qf2, write_qf2, GridSpec, QField, Qf2Header};
use crate::quaternion::{cis_turns, exp_i, exp_j, Axis, Quaternion};
use crate::spectral::neumaier_sum;

pub const DEFAULT_THETA_TERMS: usize = 8;
pub const DEFAULT_ZAK_RADIUS: usize = 6;
pub const DEFAULT_ZAK_GRID: usize = 16;
/// Wiener tail allowed outside the summation box, relative to `‖f‖_W`.
pub const DEFAULT_DECAY_TOL: f64 = 1e-10;

/// Truncated theta series `Θ(u + axis·v) = Σ_{|m|≤M} exp(2π axis m (u + axis v) - π m²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaEval {
    pub axis: Axis,
    pub terms: usize,
    pub value: Quaternion,
    /// Bound on the omitted terms `|m| > M`.
    pub tail: f64,
    /// `Σ |term|`, the scale of the rounding error.
    pub abs_sum: f64,
}

impl ThetaEval {
    /// Truncation tail plus a rounding allowance.
    pub fn error_bound(&self) -> f64 {
        self.tail + 64.0 * f64::EPSILON * self.abs_sum
    }
}

pub(crate) fn theta_c(u: f64, v: f64, terms: usize) -> (Complex64, f64, f64) {
    let m_max = terms as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for m in -m_max..=m_max {
        let mf = m as f64;
        let mag = (-PI * mf * mf - 2.0 * PI * mf * v).exp();
        // argument reduction keeps u -> u + 1 exact
        acc += cis_turns(mf * u) * mag;
        abs_sum += mag;
    }
    let tail = 2.0
        * ((m_max + 1)..(m_max + 40))
            .map(|m| {
                let m = m as f64;
                (-PI * m * m + 2.0 * PI * m * v.abs()).exp()
            })
            .sum::<f64>();
    (acc, tail, abs_sum)
}

pub fn theta(axis: Axis, u: f64, v: f64, terms: usize) -> ThetaEval {
    let (z, tail, abs_sum) = theta_c(u, v, terms);
    ThetaEval { axis, terms, value: axis.embed(z), tail, abs_sum }
}

/// Order in which [`zak_atom`] multiplies its plane factors. Only
/// `Displayed` is correct; `Swapped` exists as a negative control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FactorOrder {
    #[default]
    Displayed,
    Swapped,
}

/// i-plane factor `exp(2πi x1 θ1) e^{-π(x1-p1)²} Θ_i(ω1 - θ1 - i(x1 - p1))`
/// and j-plane factor `Θ_j(ω2 - θ2 - j(x2 - p2)) e^{-π(x2-p2)²} exp(2πj x2 θ2)`
/// of the Zak transform of the atom with shift `p` and frequency `θ`.
pub fn zak_atom_factors(
    shift: [f64; 2],
    freq: [f64; 2],
    x: [f64; 2],
    omega: [f64; 2],
    terms: usize,
) -> (Quaternion, Quaternion) {
    let y1 = x[0] - shift[0];
    let y2 = x[1] - shift[1];
    let (t1, _, _) = theta_c(omega[0] - freq[0], -y1, terms);
    let (t2, _, _) = theta_c(omega[1] - freq[1], -y2, terms);
    let left = exp_i(x[0] * freq[0]) * Axis::I.embed(t1 * (-PI * y1 * y1).exp());
    let right = Axis::J.embed(t2 * (-PI * y2 * y2).exp()) * exp_j(x[1] * freq[1]);
    (left, right)
}

/// Closed form of `Z e'_μ(x, ω)` for the unit-coefficient atom
/// `exp(2πi x1 θ1) e^{-π|x-p|²} exp(2πj x2 θ2)`.
///
/// For integer `(p, θ)` this is
///
/// ```text
/// exp(2πi(θ1 x1 - p1 ω1)) e^{-π x1²} Θ_i(ω1 - i x1) · Θ_j(ω2 - j x2) e^{-π x2²} exp(2πj(θ2 x2 - p2 ω2))
/// ```
///
/// and at `x = ω = (½, ½)` every integer atom vanishes.
pub fn zak_atom(
    shift: [f64; 2],
    freq: [f64; 2],
    x: [f64; 2],
    omega: [f64; 2],
    terms: usize,
    order: FactorOrder,
) -> Quaternion {
    let (l, r) = zak_atom_factors(shift, freq, x, omega, terms);
    match order {
        FactorOrder::Displayed => l * r,
        FactorOrder::Swapped => r * l,
    }
}

/// Grid lookups for the lattice sum.
struct Lattice<'a> {
    f: &'a QField,
    r: i64,
}

impl<'a> Lattice<'a> {
    fn new(f: &'a QField) -> Result<Self> {
        let (r, _, _) = f.spec().lattice_alignment()?;
        Ok(Self { f, r: r as i64 })
    }

    /// Checks the Wiener tail outside the cells reached from `cell` by `|m| ≤ n`.
    fn check_decay(&self, cells: ([i64; 2], [i64; 2]), n: i64, tol: f64) -> Result<f64> {
        let report = self.f.wiener_norm()?;
        let lo = [cells.0[0] - n, cells.0[1] - n];
        let hi = [cells.1[0] + n, cells.1[1] + n];
        let tail = report.tail_outside(lo, hi);
        let tolerance = tol * report.norm_w.max(f64::MIN_POSITIVE);
        if tail > tolerance {
            return Err(Error::InsufficientDecay { tail, tolerance });
        }
        Ok(tail)
    }

    /// `Σ_{m2} (Σ_{m1} e_i[m1] f(k - m r)) e_j[m2]` for a grid index `k`.
    fn sum(&self, k: [i64; 2], n: i64, ei: &[Quaternion], ej: &[Quaternion]) -> Quaternion {
        let mut acc = Quaternion::ZERO;
        for (b, m2) in (-n..=n).enumerate() {
            let mut inner = Quaternion::ZERO;
            for (a, m1) in (-n..=n).enumerate() {
                let q = self.f.get_or_zero(k[0] - m1 * self.r, k[1] - m2 * self.r);
                inner += ei[a] * q;
            }
            acc += inner * ej[b];
        }
        acc
    }
}

fn phases(n: i64, omega: f64, axis: Axis) -> Vec<Quaternion> {
    (-n..=n)
        .map(|m| match axis {
            Axis::I => exp_i(m as f64 * omega),
            Axis::J => exp_j(m as f64 * omega),
        })
        .collect()
}

/// `Z f(x, ω)` truncated to `|m|∞ ≤ n_zak`, for an on-grid `x`.
pub fn zak(f: &QField, x: [f64; 2], omega: [f64; 2], n_zak: usize) -> Result<Quaternion> {
    let lat = Lattice::new(f)?;
    let n = n_zak as i64;
    let cell = [x[0].floor() as i64, x[1].floor() as i64];
    lat.check_decay((cell, cell), n, DEFAULT_DECAY_TOL)?;
    let k = f.spec().grid_index(x)?;
    Ok(lat.sum(k, n, &phases(n, omega[0], Axis::I), &phases(n, omega[1], Axis::J)))
}

/// Samples of `Z f` on `Q × Q`: `x = a/K`, `ω = (b + offset)/K`, layout
/// `[x1][x2][ω1][ω2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZakGrid {
    k: usize,
    n_zak: usize,
    omega_offset: f64,
    /// Wiener tail of the input outside the summation box.
    pub tail: f64,
    data: Vec<Quaternion>,
}

impl ZakGrid {
    pub fn from_data(k: usize, n_zak: usize, omega_offset: f64, data: Vec<Quaternion>) -> Result<Self> {
        if data.len() != k.pow(4) {
            return Err(Error::ShapeMismatch(format!("{} samples for K = {k}", data.len())));
        }
        Ok(Self { k, n_zak, omega_offset, tail: 0.0, data })
    }

    /// A grid with every sample equal to `q`.
    pub fn constant(k: usize, q: Quaternion) -> Self {
        Self { k, n_zak: 0, omega_offset: 0.0, tail: 0.0, data: vec![q; k.pow(4)] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_zak(&self) -> usize {
        self.n_zak
    }

    pub fn omega_offset(&self) -> f64 {
        self.omega_offset
    }

    pub fn data(&self) -> &[Quaternion] {
        &self.data
    }

    #[inline]
    pub fn index(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.k + i[1]) * self.k + i[2]) * self.k + i[3]
    }

    #[inline]
    pub fn get(&self, i: [usize; 4]) -> Quaternion {
        self.data[self.index(i)]
    }

    #[inline]
    pub fn x(&self, a: usize) -> f64 {
        a as f64 / self.k as f64
    }

    #[inline]
    pub fn omega(&self, b: usize) -> f64 {
        (b as f64 + self.omega_offset) / self.k as f64
    }

    pub fn add(&self, other: &ZakGrid) -> Result<ZakGrid> {
        if self.k != other.k || self.omega_offset != other.omega_offset {
            return Err(Error::ShapeMismatch("Zak grids differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Ok(Self { data, tail: self.tail + other.tail, ..*self })
    }

    /// `∫_{Q×Q} |Z|²` by the rectangle rule.
    pub fn energy(&self) -> f64 {
        let w = (self.k as f64).powi(4).recip();
        neumaier_sum(
            self.data
                .par_chunks(self.k.pow(2))
                .map(|c| c.iter().map(|q| q.norm_sqr()).sum::<f64>())
                .collect::<Vec<_>>(),
        ) * w
    }

    /// Largest jump between neighbouring samples along any of the four axes.
    pub fn continuity_modulus(&self) -> f64 {
        let k = self.k;
        (0..k)
            .into_par_iter()
            .map(|a1| {
                let mut worst = 0.0_f64;
                for a2 in 0..k {
                    for b1 in 0..k {
                        for b2 in 0..k {
                            let i = [a1, a2, b1, b2];
                            let here = self.get(i);
                            for axis in 0..4 {
                                if i[axis] + 1 < k {
                                    let mut j = i;
                                    j[axis] += 1;
                                    worst = worst.max((self.get(j) - here).modulus());
                                }
                            }
                        }
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn write_qf2<W: Write>(&self, w: W) -> Result<()> {
        let mut h = Qf2Header::default();
        h.set("dims", 4);
        for d in 1..=4 {
            h.set(&format!("n{d}"), self.k);
        }
        h.set("layout", "x1,x2,w1,w2");
        h.set("zak_radius", self.n_zak);
        h.set("omega_offset", format!("{:e}", self.omega_offset));
        write_qf2(w, &h, &self.data)
    }

    pub fn read_qf2<R: Read>(r: R) -> Result<Self> {
        let (h, data) = read_qf2(r)?;
        if h.get_usize("dims")? != 4 {
            return Err(Error::Format("expected a 4-D QF2 payload".into()));
        }
        let k = h.get_usize("n1")?;
        if (2..=4).any(|d| h.get_usize(&format!("n{d}")).ok() != Some(k)) {
            return Err(Error::Format("Zak grid must be K x K x K x K".into()));
        }
        let mut z = Self::from_data(k, h.get_usize("zak_radius")?, h.get_f64("omega_offset")?, data)?;
        z.tail = 0.0;
        Ok(z)
    }

    /// CSV of the `x`-slice at fixed frequency indices: `x1,x2,q0,q1,q2,q3,modulus`.
    pub fn export_slice_csv<W: Write>(&self, w: W, omega: [usize; 2]) -> Result<()> {
        if omega[0] >= self.k || omega[1] >= self.k {
            return Err(Error::InvalidParameter(format!("frequency index {omega:?} outside K = {}", self.k)));
        }
        let spec = GridSpec::unit_cube(self.k)?;
        let data = (0..self.k * self.k).map(|i| self.get([i / self.k, i % self.k, omega[0], omega[1]])).collect();
        crate::field::export_csv(&QField::new(spec, data)?, w)
    }
}

/// `Z f` on the `K⁴` grid. `omega_offset` shifts the frequency samples by a
/// fraction of a step; `0.5` keeps them off `ω = ½` for even `K`.
pub fn zak_grid(f: &QField, k: usize, n_zak: usize, omega_offset: f64) -> Result<ZakGrid> {
    let lat = Lattice::new(f)?;
    let r = lat.r as usize;
    if k < 2 || !r.is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!("Zak grid K = {k} must divide the {r} samples per unit")));
    }
    let n = n_zak as i64;
    let tail = lat.check_decay(([0, 0], [0, 0]), n, DEFAULT_DECAY_TOL)?;
    let origin = f.spec().grid_index([0.0, 0.0])?;
    let stride = (r / k) as i64;
    let kf = k as f64;
    let ei: Vec<Vec<Quaternion>> = (0..k).map(|b| phases(n, (b as f64 + omega_offset) / kf, Axis::I)).collect();
    let ej: Vec<Vec<Quaternion>> = (0..k).map(|b| phases(n, (b as f64 + omega_offset) / kf, Axis::J)).collect();
    let width = (2 * n + 1) as usize;

    let blocks: Vec<Vec<Quaternion>> = (0..k * k)
        .into_par_iter()
        .map(|ax| {
            let (a1, a2) = (ax / k, ax % k);
            let base = [origin[0] + a1 as i64 * stride, origin[1] + a2 as i64 * stride];
            // inner[w1][m2] = Σ_{m1} e_i(m1 ω1) f(x - m)
            let mut inner = vec![Quaternion::ZERO; k * width];
            for (w1, e) in ei.iter().enumerate() {
                for (b, m2) in (-n..=n).enumerate() {
                    let mut s = Quaternion::ZERO;
                    for (a, m1) in (-n..=n).enumerate() {
                        s += e[a] * f.get_or_zero(base[0] - m1 * lat.r, base[1] - m2 * lat.r);
                    }
                    inner[w1 * width + b] = s;
                }
            }
            let mut out = Vec::with_capacity(k * k);
            for w1 in 0..k {
                for e in &ej {
                    let mut s = Quaternion::ZERO;
                    for b in 0..width {
                        s += inner[w1 * width + b] * e[b];
                    }
                    out.push(s);
                }
            }
            out
        })
        .collect();
    Ok(ZakGrid { k, n_zak, omega_offset, tail, data: blocks.concat() })
}

/// `f(x) = ∫_Q Z f(x, ω) dω` on `Q`, by the rectangle rule over the ω samples.
pub fn zak_inverse(z: &ZakGrid) -> Result<QField> {
    zak_inverse_cells(z, 0, 1)
}

/// `f` on `[lo, hi)²`, extended from `Q` by quasiperiodicity:
/// `f(x + n) = ∫_Q exp(2πi n1 ω1) Z f(x, ω) exp(2πj n2 ω2) dω`.
pub fn zak_inverse_cells(z: &ZakGrid, lo: i64, hi: i64) -> Result<QField> {
    let spec = GridSpec::per_unit(z.k, lo, hi)?;
    let k = z.k;
    let w = ((k * k) as f64).recip();
    QField::from_fn(spec, |x| {
        let n = [x[0].floor(), x[1].floor()];
        let a = [((x[0] - n[0]) * k as f64).round() as usize, ((x[1] - n[1]) * k as f64).round() as usize];
        let mut acc = Quaternion::ZERO;
        for b1 in 0..k {
            let li = exp_i(n[0] * z.omega(b1));
            let mut row = Quaternion::ZERO;
            for b2 in 0..k {
                row += z.get([a[0], a[1], b1, b2]) * exp_j(n[1] * z.omega(b2));
            }
            acc += li * row;
        }
        acc * w
    })
}

/// `(‖f‖₂², ∫_{Q×Q} |Z f|²)`.
pub fn zak_unitarity_check(f: &QField, k: usize, n_zak: usize) -> Result<(f64, f64)> {
    Ok((f.l2_norm_sqr(), zak_grid(f, k, n_zak, 0.0)?.energy()))
}
