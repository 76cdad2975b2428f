//! Gabor atoms on the integer lattice, series synthesis, and the relaxed
//! expansion over `Λ ∪ {#}` with `# = (½, ½, ½, ½)`.
//!
//! A coefficient `c` sits between the two kernels of its atom:
//!
//! ```text
//! c e'_λ(x) = exp(2πi x1 ω1) c e^{-π|x-b|²} exp(2πj x2 ω2),   λ = (b, ω)
//! ```
//!
//! Coefficient extraction divides the Zak transform of the residual
//! `f_# = f - γ^#(f) e'_#` by the Zak transform of the base Gaussian,
//! `F = L⁻¹ · Z f_# · R⁻¹` with `Z e'_0 = L · R`, and reads `c_λ` off the
//! four-dimensional Fourier series in the Zak variables `(x, ξ)`
//!
//! ```text
//! F(x, ξ) = Σ_λ exp(2πi(ω1 x1 - b1 ξ1)) c_λ exp(2πj(ω2 x2 - b2 ξ2))
//! ```
//!
//! so `x` pairs with the frequency index of `λ` and `ξ` with minus its
//! space index.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, QField, Signal};
use crate::quaternion::{cis_turns, exp_i, exp_j, Axis, Quaternion};
use crate::spectral::{merge, merge_all, neumaier_sum, split, transform_axis, AxisMap};
use crate::zak::{self, theta, theta_c, ZakGrid, DEFAULT_THETA_TERMS, DEFAULT_ZAK_GRID, DEFAULT_ZAK_RADIUS};

pub const DEFAULT_LATTICE_RADIUS: usize = 3;
pub const DEFAULT_EPS_THETA: f64 = 1e-8;
pub const SIGMA0_TERMS: usize = 8;

/// A point `λ = (b, ω)` of the critical-density lattice `ℤ² × ℤ²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub b: [i64; 2],
    pub omega: [i64; 2],
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { b: [0, 0], omega: [0, 0] };

    pub const fn new(b1: i64, b2: i64, w1: i64, w2: i64) -> Self {
        Self { b: [b1, b2], omega: [w1, w2] }
    }

    pub fn norm_inf(&self) -> i64 {
        self.b.iter().chain(&self.omega).map(|v| v.abs()).max().unwrap_or(0)
    }

    /// The i-plane pair `λ_i = (b1, ω1)`.
    pub fn lambda_i(&self) -> [i64; 2] {
        [self.b[0], self.omega[0]]
    }

    /// The j-plane pair `λ_j = (b2, ω2)`.
    pub fn lambda_j(&self) -> [i64; 2] {
        [self.b[1], self.omega[1]]
    }

    /// All points with `|λ|∞ ≤ radius`, in lexicographic order.
    pub fn window(radius: usize) -> Vec<LatticePoint> {
        let r = radius as i64;
        let mut out = Vec::new();
        for b1 in -r..=r {
            for b2 in -r..=r {
                for w1 in -r..=r {
                    for w2 in -r..=r {
                        out.push(LatticePoint::new(b1, b2, w1, w2));
                    }
                }
            }
        }
        out
    }
}

/// A point of the relaxed lattice `Λ ∪ {#}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxedPoint {
    Lattice(LatticePoint),
    Sharp,
}

impl RelaxedPoint {
    pub fn shift(&self) -> [f64; 2] {
        match self {
            RelaxedPoint::Lattice(p) => [p.b[0] as f64, p.b[1] as f64],
            RelaxedPoint::Sharp => [0.5, 0.5],
        }
    }

    pub fn freq(&self) -> [f64; 2] {
        match self {
            RelaxedPoint::Lattice(p) => [p.omega[0] as f64, p.omega[1] as f64],
            RelaxedPoint::Sharp => [0.5, 0.5],
        }
    }
}

impl From<LatticePoint> for RelaxedPoint {
    fn from(p: LatticePoint) -> Self {
        RelaxedPoint::Lattice(p)
    }
}

/// The two atom families: `e_λ = M_ω T_b g` with the i-modulation as a right
/// carrier, and `e'_λ` with it on the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomSide {
    /// `e_λ(x) = exp(2πj x2 ω2) e^{-π|x-b|²} exp(2πi x1 ω1)`.
    Analysis,
    /// `e'_λ(x) = exp(2πi x1 ω1) e^{-π|x-b|²} exp(2πj x2 ω2)`.
    Synthesis,
}

pub fn atom_eval(point: RelaxedPoint, side: AtomSide, x: [f64; 2]) -> Quaternion {
    let b = point.shift();
    let w = point.freq();
    let g = (-PI * ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2))).exp();
    let (ei, ej) = (exp_i(x[0] * w[0]), exp_j(x[1] * w[1]));
    match side {
        AtomSide::Analysis => ej * g * ei,
        AtomSide::Synthesis => ei * g * ej,
    }
}

/// `c e'_λ` as an analytic signal.
pub fn atom_signal(point: RelaxedPoint, coefficient: Quaternion) -> Signal {
    Signal::ModulatedGaussian { center: point.shift(), frequency: point.freq(), coefficient }
}

/// `σ0 = Σ_n exp(-π n² / 2)`, truncated to `|n| ≤ terms`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma0 {
    pub value: f64,
    pub terms: usize,
    /// Bound on the omitted terms.
    pub tail: f64,
}

pub fn sigma0(terms: usize) -> Sigma0 {
    let term = |n: usize| (-PI * (n * n) as f64 / 2.0).exp();
    // Smallest terms first.
    let value = (1..=terms).rev().map(|n| 2.0 * term(n)).sum::<f64>() + 1.0;
    let tail = 2.0 * (terms + 1..terms + 40).map(term).sum::<f64>();
    Sigma0 { value, terms, tail }
}

pub type CoefficientMap = BTreeMap<LatticePoint, Quaternion>;

/// `Σ_λ c_λ e'_λ` on `spec`.
pub fn synthesize(coeffs: &CoefficientMap, spec: GridSpec) -> Result<QField> {
    synthesize_relaxed(Quaternion::ZERO, coeffs, spec)
}

/// `u e'_# + Σ_λ c_λ e'_λ` on `spec`.
///
/// In split coordinates each atom is a rank-one product `u(x1) P_c ṽ(x2)`,
/// so the sum runs row by row over the atoms in map order.
pub fn synthesize_relaxed(sharp: Quaternion, coeffs: &CoefficientMap, spec: GridSpec) -> Result<QField> {
    let mut atoms: Vec<(RelaxedPoint, Quaternion)> =
        coeffs.iter().filter(|(_, c)| **c != Quaternion::ZERO).map(|(p, c)| ((*p).into(), *c)).collect();
    if sharp != Quaternion::ZERO {
        atoms.push((RelaxedPoint::Sharp, sharp));
    }
    let factor = |t: f64, b: f64, w: f64| cis_turns(t * w) * (-PI * (t - b) * (t - b)).exp();
    let cols: Vec<Vec<Complex64>> = atoms
        .iter()
        .map(|(p, _)| (0..spec.n2).map(|k| factor(spec.x2(k), p.shift()[1], p.freq()[1])).collect())
        .collect();
    let split_c: Vec<(Complex64, Complex64)> = atoms.iter().map(|(_, c)| split(*c)).collect();

    let rows: Vec<Vec<Quaternion>> = (0..spec.n1)
        .into_par_iter()
        .map(|k1| {
            let x1 = spec.x1(k1);
            let mut p = vec![Complex64::new(0.0, 0.0); spec.n2];
            let mut m = p.clone();
            for (a, (pt, _)) in atoms.iter().enumerate() {
                let u = factor(x1, pt.shift()[0], pt.freq()[0]);
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (cp, cm) = split_c[a];
                let (up, um) = (u * cp, u * cm);
                for (k2, v) in cols[a].iter().enumerate() {
                    p[k2] += up * v;
                    m[k2] += um * v.conj();
                }
            }
            p.iter().zip(&m).map(|(p, m)| merge(*p, *m)).collect()
        })
        .collect();
    QField::new(spec, rows.concat())
}

pub fn coefficient_norm(c: &CoefficientMap) -> f64 {
    neumaier_sum(c.values().map(|q| q.norm_sqr())).sqrt()
}

/// Coefficients factored as `c_λ = c_i(λ_i) · c_j(λ_j)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparableCoefficients {
    pub ci: BTreeMap<[i64; 2], Quaternion>,
    pub cj: BTreeMap<[i64; 2], Quaternion>,
}

impl SeparableCoefficients {
    pub fn to_map(&self) -> CoefficientMap {
        let mut out = CoefficientMap::new();
        for (li, a) in &self.ci {
            for (lj, b) in &self.cj {
                out.insert(LatticePoint::new(li[0], lj[0], li[1], lj[1]), *a * *b);
            }
        }
        out
    }

    /// `σ0² (Σ|c_j|²)^{1/2} (Σ|c_i|²)^{1/2}`.
    pub fn bound(&self, sigma0: f64) -> f64 {
        let n = |m: &BTreeMap<[i64; 2], Quaternion>| neumaier_sum(m.values().map(|q| q.norm_sqr())).sqrt();
        sigma0 * sigma0 * n(&self.cj) * n(&self.ci)
    }
}

/// Uniform random components in `[-1, 1]`.
pub fn random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

/// Uniform random components in `[-1, 1]` on `|λ|∞ ≤ radius`.
pub fn random_coefficients<R: Rng + ?Sized>(rng: &mut R, radius: usize) -> CoefficientMap {
    LatticePoint::window(radius).into_iter().map(|p| (p, random_quaternion(rng))).collect()
}

pub fn random_separable<R: Rng + ?Sized>(rng: &mut R, radius: usize) -> SeparableCoefficients {
    let r = radius as i64;
    let mut plane = || {
        let mut m = BTreeMap::new();
        for b in -r..=r {
            for w in -r..=r {
                m.insert([b, w], random_quaternion(rng));
            }
        }
        m
    };
    let ci = plane();
    let cj = plane();
    SeparableCoefficients { ci, cj }
}

/// Parameters of the relaxed expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Zak grid samples per axis of `Q`.
    pub k: usize,
    /// Lattice window `|λ|∞ ≤ n_lat`.
    pub n_lat: usize,
    pub n_zak: usize,
    pub theta_terms: usize,
    pub eps_theta: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_ZAK_GRID,
            n_lat: DEFAULT_LATTICE_RADIUS,
            n_zak: DEFAULT_ZAK_RADIUS,
            theta_terms: DEFAULT_THETA_TERMS,
            eps_theta: DEFAULT_EPS_THETA,
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || !self.k.is_multiple_of(2) || 2 * self.n_lat >= self.k {
            return Err(Error::NyquistViolation { n_lat: self.n_lat, k: self.k });
        }
        if self.theta_terms == 0 {
            return Err(Error::InvalidParameter("theta truncation must be at least 1".into()));
        }
        Ok(())
    }
}

/// `γ^#(f) = (i Θ_i(0))⁻¹ · Z f(#) · (j Θ_j(0))⁻¹`.
pub fn sharp_functional(f: &QField, cfg: &ExpansionConfig) -> Result<Quaternion> {
    let z = zak::zak(f, [0.5, 0.5], [0.5, 0.5], cfg.n_zak)?;
    let left = (Quaternion::I * theta(Axis::I, 0.0, 0.0, cfg.theta_terms).value).inverse()?;
    let right = (Quaternion::J * theta(Axis::J, 0.0, 0.0, cfg.theta_terms).value).inverse()?;
    Ok(left * z * right)
}

/// `f_# = f - exp(πi x1) γ e^{-π|x-½|²} exp(πj x2)` for a given `γ`.
pub fn residual_with(f: &QField, gamma: Quaternion) -> Result<QField> {
    f.sub(&atom_signal(RelaxedPoint::Sharp, gamma).sample(*f.spec())?)
}

pub fn residual(f: &QField, cfg: &ExpansionConfig) -> Result<QField> {
    residual_with(f, sharp_functional(f, cfg)?)
}

/// `e^{-π x²} Θ(ω - axis·x)` on the `K x K` grid `(x, ω) = (a/K, (b+½)/K)`,
/// layout `[a][b]`.
fn base_factor(cfg: &ExpansionConfig) -> Result<(Vec<Complex64>, f64)> {
    let k = cfg.k;
    let kf = k as f64;
    let mut out = Vec::with_capacity(k * k);
    let mut min_theta = f64::INFINITY;
    for a in 0..k {
        let x = a as f64 / kf;
        for b in 0..k {
            let w = (b as f64 + 0.5) / kf;
            let (t, _, _) = theta_c(w, -x, cfg.theta_terms);
            let m = t.norm();
            min_theta = min_theta.min(m);
            if m < cfg.eps_theta {
                return Err(Error::NearSingularTheta { value: m, threshold: cfg.eps_theta, index: a * k + b });
            }
            out.push(t * (-PI * x * x).exp());
        }
    }
    Ok((out, min_theta))
}

/// `F = L⁻¹ · Z f_# · R⁻¹` on the `K⁴` grid (ω offset by half a step), with
/// the smallest theta modulus met.
pub fn quotient_grid(f: &QField, cfg: &ExpansionConfig) -> Result<(ZakGrid, f64, Quaternion)> {
    cfg.validate()?;
    let gamma = sharp_functional(f, cfg)?;
    let fs = residual_with(f, gamma)?;
    let z = zak::zak_grid(&fs, cfg.k, cfg.n_zak, 0.5)?;
    let (base, min_theta) = base_factor(cfg)?;
    let k = cfg.k;
    let data: Vec<Quaternion> = z
        .data()
        .par_iter()
        .enumerate()
        .map(|(idx, q)| {
            let (a1, a2, b1, b2) = (idx / (k * k * k), (idx / (k * k)) % k, (idx / k) % k, idx % k);
            let l = Axis::I.embed(base[a1 * k + b1].inv());
            let r = Axis::J.embed(base[a2 * k + b2].inv());
            l * *q * r
        })
        .collect();
    let mut out = ZakGrid::from_data(k, cfg.n_zak, 0.5, data)?;
    out.tail = z.tail;
    Ok((out, min_theta, gamma))
}

/// Coefficients of the relaxed expansion on `|λ|∞ ≤ n_lat`, with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedCoefficients {
    pub gamma_sharp: Quaternion,
    pub gamma: CoefficientMap,
    pub n_lat: usize,
    pub k: usize,
    /// `Σ |γ^λ|` over the boundary shell `|λ|∞ = n_lat`.
    pub tail_estimate: f64,
    /// `max |F|` over the grid.
    pub f_sup: f64,
    /// Smallest theta modulus divided by.
    pub min_theta: f64,
    /// Wiener tail of the residual outside the Zak summation box.
    pub zak_tail: f64,
}

impl RelaxedCoefficients {
    pub fn get(&self, p: RelaxedPoint) -> Quaternion {
        match p {
            RelaxedPoint::Sharp => self.gamma_sharp,
            RelaxedPoint::Lattice(l) => self.gamma.get(&l).copied().unwrap_or(Quaternion::ZERO),
        }
    }

    /// `Σ |γ^λ|` over each shell `|λ|∞ = r`, `r = 0..=n_lat`.
    pub fn shell_sums(&self) -> Vec<f64> {
        let mut shells = vec![Vec::new(); self.n_lat + 1];
        for (p, q) in &self.gamma {
            shells[p.norm_inf() as usize].push(q.modulus());
        }
        shells.into_iter().map(neumaier_sum).collect()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        neumaier_sum(self.gamma.values().map(|q| q.norm_sqr()))
    }

    pub fn coefficient_set(&self) -> CoefficientSet {
        CoefficientSet { sharp: self.gamma_sharp, lattice: self.gamma.clone() }
    }

    pub fn synthesize(&self, spec: GridSpec) -> Result<QField> {
        synthesize_relaxed(self.gamma_sharp, &self.gamma, spec)
    }
}

/// `c_λ = ∫∫ exp(-2πi(θ1 x1 - p1 ω1)) F exp(-2πj(θ2 x2 - p2 ω2))` for
/// `λ = (p, θ)`, as four axis transforms in split coordinates.
fn fourier_coefficients(f: &ZakGrid, n_lat: usize) -> CoefficientMap {
    let k = f.k();
    let shape = [k; 4];
    let (mut p, mut m): (Vec<Complex64>, Vec<Complex64>) = f.data().par_iter().map(|q| split(*q)).unzip();
    let s0 = -((k / 2) as f64);
    let dt = 1.0 / k as f64;
    let x_map = AxisMap { t0: 0.0, dt, s0, ds: 1.0 };
    let w_map = AxisMap { t0: f.omega_offset() * dt, dt, s0, ds: 1.0 };
    // axes: x1, x2, ω1, ω2
    let maps = [x_map, x_map, w_map, w_map];
    let p_signs = [-1.0, -1.0, 1.0, 1.0];
    let m_signs = [-1.0, 1.0, 1.0, -1.0];
    for axis in 0..4 {
        transform_axis(&mut p, &shape, axis, maps[axis], p_signs[axis]);
        transform_axis(&mut m, &shape, axis, maps[axis], m_signs[axis]);
    }
    let w = (k as f64).powi(4).recip();
    let all = merge_all(&p, &m);
    let n = n_lat as i64;
    let half = (k / 2) as i64;
    let mut out = CoefficientMap::new();
    for t1 in -n..=n {
        for t2 in -n..=n {
            for p1 in -n..=n {
                for p2 in -n..=n {
                    let i = [t1, t2, p1, p2].map(|v| (v + half) as usize);
                    let idx = ((i[0] * k + i[1]) * k + i[2]) * k + i[3];
                    out.insert(LatticePoint::new(p1, p2, t1, t2), all[idx] * w);
                }
            }
        }
    }
    out
}

pub fn extract_coefficients(f: &QField, cfg: &ExpansionConfig) -> Result<RelaxedCoefficients> {
    let (fgrid, min_theta, gamma_sharp) = quotient_grid(f, cfg)?;
    let gamma = fourier_coefficients(&fgrid, cfg.n_lat);
    let n = cfg.n_lat as i64;
    let tail_estimate = neumaier_sum(gamma.iter().filter(|(p, _)| p.norm_inf() == n).map(|(_, q)| q.modulus()));
    let f_sup = fgrid.data().par_iter().map(|q| q.modulus()).reduce(|| 0.0, f64::max);
    Ok(RelaxedCoefficients {
        gamma_sharp,
        gamma,
        n_lat: cfg.n_lat,
        k: cfg.k,
        tail_estimate,
        f_sup,
        min_theta,
        zak_tail: fgrid.tail,
    })
}

/// `‖u e'_# + Σ c_λ e'_λ‖₂`.
pub fn uniqueness_probe(c: &CoefficientMap, u: Quaternion, spec: GridSpec) -> Result<f64> {
    Ok(synthesize_relaxed(u, c, spec)?.l2_norm())
}

/// Smallest probe value over `draws` random `(u, c)` on `|λ|∞ ≤ radius`,
/// normalized to `|u|² + Σ|c|² = 1`.
pub fn uniqueness_kappa<R: Rng + ?Sized>(rng: &mut R, draws: usize, radius: usize, spec: GridSpec) -> Result<f64> {
    let mut kappa = f64::INFINITY;
    for _ in 0..draws {
        let c = random_coefficients(rng, radius);
        let u = random_quaternion(rng);
        let norm = (coefficient_norm(&c).powi(2) + u.norm_sqr()).sqrt();
        let c: CoefficientMap = c.into_iter().map(|(p, q)| (p, q * norm.recip())).collect();
        kappa = kappa.min(uniqueness_probe(&c, u * norm.recip(), spec)?);
    }
    Ok(kappa)
}

/// A sharp coefficient plus lattice coefficients, as exchanged in CSV files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientSet {
    pub sharp: Quaternion,
    pub lattice: CoefficientMap,
}

const CSV_HEADER: [&str; 8] = ["b1", "b2", "w1", "w2", "c0", "c1", "c2", "c3"];

impl CoefficientSet {
    /// Columns `b1,b2,w1,w2,c0,c1,c2,c3`; the sharp row has `sharp` in all
    /// four coordinate columns and comes first.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER)?;
        let fmt = |q: Quaternion| q.to_array().map(|v| format!("{v:e}"));
        let s = fmt(self.sharp);
        wr.write_record(["sharp", "sharp", "sharp", "sharp", &s[0], &s[1], &s[2], &s[3]])?;
        for (p, q) in &self.lattice {
            let c = fmt(*q);
            let coords = [p.b[0], p.b[1], p.omega[0], p.omega[1]].map(|v| v.to_string());
            wr.write_record(coords.iter().chain(c.iter()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout of [`write_csv`](Self::write_csv). A missing sharp
    /// row means `γ^# = 0`; repeated lattice points are summed.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Format(format!("expected columns {}", CSV_HEADER.join(","))));
        }
        let mut set = CoefficientSet::default();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Format(format!("row {}: bad {what}", line + 2));
            let c: Vec<f64> =
                (4..8).map(|i| rec[i].parse::<f64>().map_err(|_| bad("coefficient"))).collect::<Result<_>>()?;
            let q = Quaternion::new(c[0], c[1], c[2], c[3]);
            if !q.is_finite() {
                return Err(bad("coefficient"));
            }
            if (0..4).all(|i| &rec[i] == "sharp") {
                set.sharp += q;
                continue;
            }
            let v: Vec<i64> =
                (0..4).map(|i| rec[i].parse::<i64>().map_err(|_| bad("lattice coordinate"))).collect::<Result<_>>()?;
            *set.lattice.entry(LatticePoint::new(v[0], v[1], v[2], v[3])).or_insert(Quaternion::ZERO) += q;
        }
        Ok(set)
    }

    pub fn synthesize(&self, spec: GridSpec) -> Result<QField> {
        synthesize_relaxed(self.sharp, &self.lattice, spec)
    }
}
