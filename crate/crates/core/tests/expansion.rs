use qgabor::field::Signal;
use qgabor::gabor::{
    atom_signal, extract_coefficients, quotient_grid, random_coefficients, random_separable, residual,
    sharp_functional, sigma0, synthesize, synthesize_relaxed, uniqueness_kappa, uniqueness_probe, CoefficientMap,
    ExpansionConfig,
};
use qgabor::quaternion::{exp_i, exp_j};
use qgabor::{GridSpec, LatticePoint, Quaternion, RelaxedPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec() -> GridSpec {
    GridSpec::per_unit(16, -8, 8).unwrap()
}

fn max_rel_error(got: &qgabor::RelaxedCoefficients, sharp: Quaternion, c: &CoefficientMap) -> f64 {
    let scale = c.values().map(|q| q.modulus()).fold(sharp.modulus(), f64::max);
    let mut worst = got.gamma_sharp.max_abs_diff(sharp);
    for (p, q) in &got.gamma {
        let want = c.get(p).copied().unwrap_or(Quaternion::ZERO);
        worst = worst.max(q.max_abs_diff(want));
    }
    worst / scale
}

#[test]
fn sharp_atom_expands_to_itself() {
    let f = atom_signal(RelaxedPoint::Sharp, Quaternion::ONE).sample(spec()).unwrap();
    let r = extract_coefficients(&f, &ExpansionConfig::default()).unwrap();
    assert!(r.gamma_sharp.max_abs_diff(Quaternion::ONE) < 1e-8);
    assert!(r.gamma.values().all(|q| q.modulus() < 1e-8));
    assert!(r.tail_estimate < 1e-8);
}

#[test]
fn lattice_atom_expands_to_itself() {
    let mu = LatticePoint::new(1, 0, 0, 0);
    let f = atom_signal(mu.into(), Quaternion::ONE).sample(spec()).unwrap();
    let r = extract_coefficients(&f, &ExpansionConfig::default()).unwrap();
    assert!(r.gamma_sharp.modulus() < 1e-8);
    for (p, q) in &r.gamma {
        let want = if *p == mu { Quaternion::ONE } else { Quaternion::ZERO };
        assert!(q.max_abs_diff(want) < 1e-8, "{p:?}: {q:?}");
    }
    // a single unit atom has |F| = 1 everywhere
    assert!((r.f_sup - 1.0).abs() < 1e-8, "{}", r.f_sup);
}

#[test]
fn relaxed_round_trip() {
    let cfg = ExpansionConfig::default();
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_coefficients(&mut rng, 2);
        let u = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let f = synthesize_relaxed(u, &c, spec()).unwrap();
        let r = extract_coefficients(&f, &cfg).unwrap();
        let e = max_rel_error(&r, u, &c);
        println!("seed {seed}: max rel error {e:e}, min theta {:e}, f_sup {:e}", r.min_theta, r.f_sup);
        assert!(e < 1e-6);
    }
}

/// Direct quadrature `Σ exp(-2πi(θ1 x1 - p1 ξ1)) F exp(-2πj(θ2 x2 - p2 ξ2)) / K⁴`.
#[test]
fn fast_transform_matches_direct_quadrature() {
    let cfg = ExpansionConfig { k: 8, n_lat: 1, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let c = random_coefficients(&mut rng, 1);
    let s = GridSpec::per_unit(8, -8, 8).unwrap();
    let f = synthesize_relaxed(Quaternion::new(0.1, 0.2, -0.3, 0.4), &c, s).unwrap();
    let (fg, _, _) = quotient_grid(&f, &cfg).unwrap();
    let r = extract_coefficients(&f, &cfg).unwrap();
    let k = fg.k();
    for p in LatticePoint::window(1) {
        let mut acc = Quaternion::ZERO;
        for a1 in 0..k {
            for a2 in 0..k {
                for b1 in 0..k {
                    for b2 in 0..k {
                        let (x1, x2, s1, s2) = (fg.x(a1), fg.x(a2), fg.omega(b1), fg.omega(b2));
                        let l = exp_i(-(p.omega[0] as f64 * x1 - p.b[0] as f64 * s1));
                        let rr = exp_j(-(p.omega[1] as f64 * x2 - p.b[1] as f64 * s2));
                        acc += l * fg.get([a1, a2, b1, b2]) * rr;
                    }
                }
            }
        }
        let direct = acc * (k as f64).powi(4).recip();
        assert!(direct.max_abs_diff(r.gamma[&p]) < 1e-12, "{p:?}");
    }
}

#[test]
fn residual_annihilates_the_sharp_functional() {
    let cfg = ExpansionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = Signal::random_mixture(&mut rng, 4).sample(spec()).unwrap();
    let g = sharp_functional(&residual(&f, &cfg).unwrap(), &cfg).unwrap();
    assert!(g.modulus() < 1e-10);
    let scaled = sharp_functional(&f.scale(-2.5), &cfg).unwrap();
    assert!(scaled.max_abs_diff(sharp_functional(&f, &cfg).unwrap() * -2.5) < 1e-12);
}

#[test]
fn synthesis_norm_bound() {
    let s0 = sigma0(8).value;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let small = GridSpec::per_unit(8, -6, 6).unwrap();
    for _ in 0..5 {
        let sep = random_separable(&mut rng, 1);
        let f = synthesize(&sep.to_map(), small).unwrap();
        assert!(f.l2_norm() <= sep.bound(s0), "{} > {}", f.l2_norm(), sep.bound(s0));
    }
}

#[test]
fn uniqueness_witness() {
    let s = GridSpec::per_unit(8, -6, 6).unwrap();
    let mut one = CoefficientMap::new();
    assert!((uniqueness_probe(&one, Quaternion::ONE, s).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    one.insert(LatticePoint::ORIGIN, Quaternion::ONE);
    assert!((uniqueness_probe(&one, Quaternion::ZERO, s).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = uniqueness_kappa(&mut rng, 10, 2, s).unwrap();
    println!("kappa {k}");
    assert!(k > 0.0);
}
