//! Real quaternions `q0 + i q1 + j q2 + k q3` with the Hamilton product.
//!
//! There is deliberately no division operator: `p⁻¹q` and `qp⁻¹` differ, so
//! every call site multiplies by [`Quaternion::inverse`] on an explicit side.

use std::f64::consts::TAU;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which [`Quaternion::inverse`] refuses to divide.
pub const DEFAULT_EPS_DIV: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q0, q1, q2, q3 }
    }

    #[inline]
    pub const fn real(r: f64) -> Self {
        Self::new(r, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    /// Scalar part `Sc[q]`.
    #[inline]
    pub fn sc(self) -> f64 {
        self.q0
    }

    /// Vector (pure) part `Vec[q] = i q1 + j q2 + k q3`.
    #[inline]
    pub fn vec(self) -> Self {
        Self::new(0.0, self.q1, self.q2, self.q3)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    /// `|q| = sqrt(q q̄)`, computed with `hypot` to avoid overflow.
    #[inline]
    pub fn modulus(self) -> f64 {
        self.q0.hypot(self.q1).hypot(self.q2.hypot(self.q3))
    }

    /// `q̄ / |q|²`, refusing moduli below [`DEFAULT_EPS_DIV`].
    pub fn inverse(self) -> Result<Self> {
        self.inverse_with(DEFAULT_EPS_DIV)
    }

    pub fn inverse_with(self, eps_div: f64) -> Result<Self> {
        let modulus = self.modulus();
        if modulus.is_nan() || modulus < eps_div || modulus == 0.0 {
            return Err(Error::DegenerateInput { modulus });
        }
        // Scale first so |q|² cannot underflow for tiny but admissible moduli.
        let s = self * (1.0 / modulus);
        Ok(s.conj() * (1.0 / modulus))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.q0.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        let d = self - other;
        d.q0.abs().max(d.q1.abs()).max(d.q2.abs()).max(d.q3.abs())
    }
}

impl Add for Quaternion {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self::new(self.q0 + r.q0, self.q1 + r.q1, self.q2 + r.q2, self.q3 + r.q3)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self::new(self.q0 - r.q0, self.q1 - r.q1, self.q2 - r.q2, self.q3 - r.q3)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.q0, -self.q1, -self.q2, -self.q3)
    }
}

/// Hamilton product: `ij = -ji = k`, `i² = j² = k² = ijk = -1`.
impl Mul for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        let (a0, a1, a2, a3) = (self.q0, self.q1, self.q2, self.q3);
        let (b0, b1, b2, b3) = (r.q0, r.q1, r.q2, r.q3);
        Self::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.q0 * s, self.q1 * s, self.q2 * s, self.q3 * s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    #[inline]
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl SubAssign for Quaternion {
    #[inline]
    fn sub_assign(&mut self, r: Self) {
        *self = *self - r;
    }
}

impl MulAssign<f64> for Quaternion {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Sum for Quaternion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl From<f64> for Quaternion {
    fn from(r: f64) -> Self {
        Self::real(r)
    }
}

/// One of the two complex subplanes `C_i = span{1, i}` and `C_j = span{1, j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    I,
    J,
}

impl Axis {
    /// Embeds `re + (axis) im` into the quaternions.
    #[inline]
    pub fn embed(self, z: Complex64) -> Quaternion {
        match self {
            Axis::I => Quaternion::new(z.re, z.im, 0.0, 0.0),
            Axis::J => Quaternion::new(z.re, 0.0, z.im, 0.0),
        }
    }

    #[inline]
    pub fn unit(self) -> Quaternion {
        match self {
            Axis::I => Quaternion::I,
            Axis::J => Quaternion::J,
        }
    }
}

/// `(cos 2πt, sin 2πt)` with the argument reduced to `[-1/2, 1/2)` first, so
/// phases that differ by an exactly representable integer give identical bits.
#[inline]
pub fn cis_turns(t: f64) -> Complex64 {
    let r = t.rem_euclid(1.0);
    let r = if r >= 0.5 { r - 1.0 } else { r };
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `exp(2πi t)`.
#[inline]
pub fn exp_i(t: f64) -> Quaternion {
    Axis::I.embed(cis_turns(t))
}

/// `exp(2πj t)`.
#[inline]
pub fn exp_j(t: f64) -> Quaternion {
    Axis::J.embed(cis_turns(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Left or right multiplication by a fixed quaternion, kept as an operator so
/// kernels such as `M_ω` can carry their modulation to the correct side.
///
/// `Carrier::right(p).apply(q) = q p` and `Carrier::left(p).apply(q) = p q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub side: Side,
    pub value: Quaternion,
}

impl Carrier {
    pub fn left(value: Quaternion) -> Self {
        Self { side: Side::Left, value }
    }

    pub fn right(value: Quaternion) -> Self {
        Self { side: Side::Right, value }
    }

    #[inline]
    pub fn apply(&self, q: Quaternion) -> Quaternion {
        match self.side {
            Side::Left => self.value * q,
            Side::Right => q * self.value,
        }
    }

    /// `conj(C_r(p)) = C_l(p̄)` and `conj(C_l(p)) = C_r(p̄)`.
    pub fn conj(&self) -> Self {
        let value = self.value.conj();
        match self.side {
            Side::Left => Self::right(value),
            Side::Right => Self::left(value),
        }
    }

    /// Value of the carrier acting on 1: `C_r(p) 1 = 1 C_l(p) = p`.
    pub fn resolve(&self) -> Quaternion {
        self.value
    }
}

/// A quaternion followed by a carrier, `head ∘ C(p)`, as produced by the
/// modulation operator `M_ω` whose i-modulation is a right carrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarrierTerm {
    pub head: Quaternion,
    pub carrier: Carrier,
}

impl CarrierTerm {
    /// Value of the term acting on 1: `head · p` for a right carrier.
    pub fn resolve(&self) -> Quaternion {
        match self.carrier.side {
            Side::Right => self.head * self.carrier.value,
            Side::Left => self.carrier.value * self.head,
        }
    }

    /// `f · conj(self)`, where `conj(head ∘ C) = conj(C) ∘ conj(head)` and a
    /// left carrier standing to the right of `f` acts as `f C_l(p) = p f`.
    pub fn mul_conj(&self, f: Quaternion) -> Quaternion {
        let c = self.carrier.conj();
        let carried = match c.side {
            Side::Left => c.value * f,
            Side::Right => f * c.value,
        };
        carried * self.head.conj()
    }
}

/// `(Sc[qrs], Sc[rsq], Sc[sqr])`, equal in exact arithmetic.
pub fn cyclic_sc_check(q: Quaternion, r: Quaternion, s: Quaternion) -> (f64, f64, f64) {
    ((q * r * s).sc(), (r * s * q).sc(), (s * q * r).sc())
}
