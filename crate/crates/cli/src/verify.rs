//! The verification harness behind `qgabor verify`.

use std::f64::consts::PI;

use qgabor::field::Signal;
use qgabor::gabor::{
    atom_signal, coefficient_norm, extract_coefficients, random_coefficients, random_quaternion, random_separable,
    sharp_functional, sigma0, synthesize, synthesize_relaxed, uniqueness_kappa, SIGMA0_TERMS,
};
use qgabor::qft::{parseval_check, qft_forward, qft_inverse, wqft, wqft_direct, wqft_reconstruct, AxisGrid, Window};
use qgabor::quaternion::{cyclic_sc_check, exp_i, exp_j};
use qgabor::zak::{theta, zak, zak_atom, zak_grid, zak_inverse_cells, zak_unitarity_check, FactorOrder};
use qgabor::{Axis, GridSpec, LatticePoint, QField, Quaternion, RelaxedPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::report::{Check, Report};
use crate::CliError;

/// `Θ_i(0) = Σ_m exp(-π m²)`.
pub const THETA_AT_ZERO: f64 = 1.08643481;
/// `σ0 = Σ_n exp(-π n² / 2)`.
pub const SIGMA0: f64 = 1.41949549;

/// Sample counts of the suite.
#[derive(Clone, Copy, Debug)]
pub struct Scale {
    pub triples: usize,
    pub mixtures: usize,
    pub theta_grid: usize,
    pub zak_points: usize,
    pub sharp_radius: usize,
    pub separable_draws: usize,
    pub round_trip_seeds: u64,
    pub kappa_draws: usize,
}

impl Scale {
    pub fn full() -> Self {
        Self {
            triples: 10_000,
            mixtures: 20,
            theta_grid: 9,
            zak_points: 48,
            sharp_radius: 2,
            separable_draws: 10,
            round_trip_seeds: 3,
            kappa_draws: 20,
        }
    }

    pub fn quick() -> Self {
        Self {
            triples: 1_000,
            mixtures: 4,
            theta_grid: 5,
            zak_points: 16,
            sharp_radius: 1,
            separable_draws: 3,
            round_trip_seeds: 1,
            kappa_draws: 5,
        }
    }
}

type Group = fn(&mut Ctx) -> Result<Vec<Check>, CliError>;

struct Ctx<'a> {
    cfg: &'a RunConfig,
    spec: GridSpec,
    scale: Scale,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn mixture(&mut self) -> Result<QField, CliError> {
        Ok(Signal::random_mixture(&mut self.rng, 3).sample(self.spec)?)
    }
}

/// Runs every check and collects the report.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let scale = if cfg.quick { Scale::quick() } else { Scale::full() };
    run_scaled(cfg, scale)
}

pub fn run_scaled(cfg: &RunConfig, scale: Scale) -> Result<Report, CliError> {
    cfg.validate()?;
    let mut ctx = Ctx { cfg, spec: cfg.grid()?, scale, rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
    let mut report = Report::new(cfg.clone());
    let groups: [Group; 8] =
        [algebra, spectra, wqft_checks, theta_checks, zak_checks, sharp_checks, expansion_checks, uniqueness];
    for group in groups {
        for check in group(&mut ctx)? {
            report.push(check);
        }
    }
    Ok(report)
}

fn algebra(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = ctx.cfg.tolerances.algebra;
    let (mut cyclic, mut modulus, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ctx.scale.triples {
        let q = random_quaternion(&mut ctx.rng);
        let r = random_quaternion(&mut ctx.rng);
        let s = random_quaternion(&mut ctx.rng);
        let (a, b, c) = cyclic_sc_check(q, r, s);
        let scale = q.modulus() * r.modulus() * s.modulus();
        cyclic = cyclic.max((a - b).abs().max((b - c).abs()) / scale);
        let m = q.modulus() * r.modulus();
        modulus = modulus.max(((q * r).modulus() - m).abs() / m);
        inverse = inverse.max((q * q.inverse()?).max_abs_diff(Quaternion::ONE));
    }
    Ok(vec![
        Check::at_most("algebra.cyclic_scalar", cyclic, tol),
        Check::at_most("algebra.modulus_product", modulus, tol),
        Check::at_most("algebra.inverse", inverse, tol),
    ])
}

fn spectra(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let (mut plancherel, mut parseval, mut round_trip) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ctx.scale.mixtures {
        let f = ctx.mixture()?;
        let g = ctx.mixture()?;
        let spectrum = qft_forward(&f)?;
        plancherel = plancherel.max((spectrum.l2_norm() - f.l2_norm()).abs() / f.l2_norm());
        let (lhs, rhs) = parseval_check(&f, &g)?;
        parseval = parseval.max((lhs - rhs).abs() / (f.l2_norm() * g.l2_norm()));
        let back = qft_inverse(&spectrum)?;
        round_trip = round_trip.max(back.sub(&f)?.l2_norm() / f.l2_norm());
    }
    Ok(vec![
        Check::at_most("qft.plancherel", plancherel, tol.plancherel),
        Check::at_most("qft.parseval", parseval, tol.plancherel),
        Check::at_most("qft.round_trip", round_trip, tol.qft_round_trip),
    ])
}

fn wqft_checks(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let spec = ctx.spec;
    let window = Window::gaussian(spec)?;
    let f =
        Signal::Gaussian { center: [0.25, -0.5], amplitude: Quaternion::new(1.0, -0.5, 0.25, 0.75) }.sample(spec)?;

    let mut paths = 0.0f64;
    for _ in 0..4 {
        let b = [ctx.rng.gen_range(-2..=2) as f64 * 0.25, ctx.rng.gen_range(-2..=2) as f64 * 0.25];
        let w = [ctx.rng.gen_range(-4..=4) as f64 * 0.25, ctx.rng.gen_range(-4..=4) as f64 * 0.25];
        let one = |v: f64| AxisGrid::new(v, 1.0, 1);
        let fast = wqft(&f, &window, [one(b[0]), one(b[1])], [one(w[0]), one(w[1])])?.get([0, 0], [0, 0]);
        paths = paths.max(fast.max_abs_diff(wqft_direct(&f, &window, b, w)?));
    }

    let grid = [AxisGrid::default_box(); 2];
    let coeffs = wqft(&f, &window, grid, grid)?;
    let back = wqft_reconstruct(&coeffs, &window)?;
    let rec = back.sub(&f)?.l2_norm() / f.l2_norm();
    let norm = f.l2_norm_sqr();
    let full = coeffs.energy() / norm;
    let scalar = coeffs.scalar_energy() / norm;
    Ok(vec![
        Check::at_most("wqft.two_paths", paths, tol.wqft_paths),
        Check::at_most("wqft.reconstruction", rec, tol.wqft_reconstruction),
        // the quaternionic energy carries the window norm ‖g‖² = 1/2
        Check::close("gabor_energy.full_ratio", full, 0.5, 0.5 * tol.gabor_energy),
        Check::info("gabor_energy.full_ratio_vs_one", full),
        Check::info("gabor_energy.scalar_ratio", scalar),
    ])
}

fn theta_checks(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let m = ctx.cfg.theta_terms;
    let at_zero = theta(Axis::I, 0.0, 0.0, m).value.q0;
    let zero = theta(Axis::I, 0.5, 0.5, m).value.modulus().max(theta(Axis::J, 0.5, 0.5, m).value.modulus());
    // Θ(z + axis) = e^{π - 2π axis z} Θ(z); the ratio gap / bound must stay ≤ 1
    let n = ctx.scale.theta_grid;
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let (u, v) = (a as f64 / (n - 1) as f64, b as f64 / (n - 1) as f64);
            for axis in [Axis::I, Axis::J] {
                let t = theta(axis, u, v, m);
                let shifted = theta(axis, u, v + 1.0, m);
                let factor = (PI + 2.0 * PI * v).exp();
                let phase = match axis {
                    Axis::I => exp_i(-u),
                    Axis::J => exp_j(-u),
                };
                let gap = shifted.value.max_abs_diff(phase * t.value * factor);
                let bound = shifted.error_bound() + factor * t.error_bound();
                worst = worst.max(gap / bound);
                let periodic = theta(axis, u + 1.0, v, m).value.max_abs_diff(t.value);
                worst = worst.max(periodic / t.error_bound());
            }
        }
    }
    Ok(vec![
        Check::close("theta.at_zero", at_zero, THETA_AT_ZERO, tol.theta),
        Check::at_most("theta.zeros", zero, tol.theta_zero),
        Check::at_most("theta.quasi_period_gap_over_bound", worst, 1.0),
    ])
}

fn zak_checks(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let (k, n_zak) = (ctx.cfg.k, ctx.cfg.n_zak);
    let f = ctx.mixture()?;

    let (mut omega_gap, mut x_gap) = (0.0f64, 0.0f64);
    for _ in 0..ctx.scale.zak_points {
        let x = [ctx.rng.gen_range(0..k) as f64 / k as f64, ctx.rng.gen_range(0..k) as f64 / k as f64];
        // grid frequencies are dyadic, so the shifted arguments are exact
        let w = [(ctx.rng.gen_range(0..k) as f64 + 0.5) / k as f64, ctx.rng.gen_range(0..k) as f64 / k as f64];
        let z = zak(&f, x, w, n_zak)?;
        for shift in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            omega_gap = omega_gap.max(zak(&f, x, [w[0] + shift[0], w[1] + shift[1]], n_zak)?.max_abs_diff(z));
            let moved = zak(&f, [x[0] + shift[0], x[1] + shift[1]], w, n_zak)?;
            let want = exp_i(w[0] * shift[0]) * z * exp_j(w[1] * shift[1]);
            x_gap = x_gap.max(moved.max_abs_diff(want));
        }
    }

    let mut unitarity = 0.0f64;
    let atom = atom_signal(LatticePoint::ORIGIN.into(), Quaternion::ONE).sample(ctx.spec)?;
    for g in [&atom, &f] {
        let (norm, energy) = zak_unitarity_check(g, k, n_zak)?;
        unitarity = unitarity.max((norm - energy).abs() / norm);
    }

    let z = zak_grid(&f, k, n_zak, 0.0)?;
    let back = zak_inverse_cells(&z, -2, 3)?;
    let s = *back.spec();
    let mut inversion = 0.0f64;
    for k1 in 0..s.n1 {
        for k2 in 0..s.n2 {
            inversion = inversion.max(back.get(k1, k2).max_abs_diff(f.at(s.point(k1, k2))?));
        }
    }

    let order = if ctx.cfg.swap_factors { FactorOrder::Swapped } else { FactorOrder::Displayed };
    let mut atom_gap = 0.0f64;
    for mu in [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 1]] {
        let p = LatticePoint::new(mu[0], mu[1], mu[2], mu[3]);
        let g = atom_signal(p.into(), Quaternion::ONE).sample(ctx.spec)?;
        for _ in 0..ctx.scale.zak_points {
            let x = [ctx.rng.gen_range(0..k) as f64 / k as f64, ctx.rng.gen_range(0..k) as f64 / k as f64];
            let w = [ctx.rng.gen_range(0.0..1.0), ctx.rng.gen_range(0.0..1.0)];
            let closed =
                zak_atom([mu[0] as f64, mu[1] as f64], [mu[2] as f64, mu[3] as f64], x, w, ctx.cfg.theta_terms, order);
            atom_gap = atom_gap.max(closed.max_abs_diff(zak(&g, x, w, n_zak)?));
        }
    }
    Ok(vec![
        Check::at_most("zak.omega_periodicity", omega_gap, 0.0),
        Check::at_most("zak.x_quasi_periodicity", x_gap, tol.zak_shift),
        Check::at_most("zak.unitarity", unitarity, tol.unitarity),
        Check::at_most("zak.inversion", inversion, tol.inversion),
        Check::at_most("zak.atom_closed_form", atom_gap, tol.zak_atom),
    ])
}

fn sharp_checks(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let exp = ctx.cfg.expansion();
    let sharp = atom_signal(RelaxedPoint::Sharp, Quaternion::ONE).sample(ctx.spec)?;
    let one = sharp_functional(&sharp, &exp)?.max_abs_diff(Quaternion::ONE);
    let mut zero = 0.0f64;
    for p in LatticePoint::window(ctx.scale.sharp_radius) {
        let e = atom_signal(p.into(), Quaternion::ONE).sample(ctx.spec)?;
        zero = zero.max(sharp_functional(&e, &exp)?.modulus());
    }
    Ok(vec![
        Check::at_most("sharp.on_sharp_atom_minus_one", one, tol.sharp),
        Check::at_most("sharp.on_lattice_atoms", zero, tol.sharp),
    ])
}

fn expansion_checks(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let tol = &ctx.cfg.tolerances;
    let s0 = sigma0(SIGMA0_TERMS).value;
    let small = GridSpec::per_unit(8, -6, 6)?;
    let (mut sep_ratio, mut general_ratio) = (0.0f64, 0.0f64);
    for _ in 0..ctx.scale.separable_draws {
        let sep = random_separable(&mut ctx.rng, 1);
        sep_ratio = sep_ratio.max(synthesize(&sep.to_map(), small)?.l2_norm() / sep.bound(s0));
        let c = random_coefficients(&mut ctx.rng, 1);
        general_ratio = general_ratio.max(synthesize(&c, small)?.l2_norm() / (s0 * s0 * coefficient_norm(&c)));
    }

    let exp = ctx.cfg.expansion();
    let radius = ctx.cfg.n_lat.saturating_sub(1);
    let (mut worst, mut f_sup) = (0.0f64, 0.0f64);
    for seed in 0..ctx.scale.round_trip_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed.wrapping_add(seed));
        let c = random_coefficients(&mut rng, radius);
        let u = random_quaternion(&mut rng);
        let f = synthesize_relaxed(u, &c, ctx.spec)?;
        let r = extract_coefficients(&f, &exp)?;
        let scale = c.values().map(|q| q.modulus()).fold(u.modulus(), f64::max);
        let mut err = r.gamma_sharp.max_abs_diff(u);
        for (p, q) in &r.gamma {
            err = err.max(q.max_abs_diff(c.get(p).copied().unwrap_or(Quaternion::ZERO)));
        }
        worst = worst.max(err / scale);
        f_sup = f_sup.max(r.f_sup);
    }
    Ok(vec![
        Check::close("sigma0", sigma0(SIGMA0_TERMS).value, SIGMA0, tol.sigma0),
        Check::at_most("synthesis_bound.separable_norm_over_bound", sep_ratio, 1.0),
        Check::info("synthesis_bound.general_norm_over_bound", general_ratio),
        Check::at_most("expansion.round_trip", worst, tol.round_trip),
        Check::info("expansion.f_sup", f_sup),
    ])
}

fn uniqueness(ctx: &mut Ctx) -> Result<Vec<Check>, CliError> {
    let draws = ctx.scale.kappa_draws;
    let coarse = ctx.spec;
    let fine = GridSpec::per_unit(2 * ctx.cfg.resolution, ctx.cfg.extent[0], ctx.cfg.extent[1])?;
    let seed = ctx.cfg.seed;
    let k1 = uniqueness_kappa(&mut ChaCha8Rng::seed_from_u64(seed), draws, 2, coarse)?;
    let k2 = uniqueness_kappa(&mut ChaCha8Rng::seed_from_u64(seed), draws, 2, fine)?;
    Ok(vec![
        Check::above("uniqueness.kappa", k1, 0.0),
        Check::at_most("uniqueness.kappa_resolution_spread", (k1 - k2).abs() / k1, ctx.cfg.tolerances.kappa_stability),
    ])
}
