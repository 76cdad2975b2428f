use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgabor::field::{load_qf2, save_qf2, Signal};
use qgabor::gabor::{atom_signal, CoefficientSet};
use qgabor::{GridSpec, LatticePoint, Quaternion, RelaxedPoint};
use qgabor_cli::{commands, CliError, RunConfig};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn cfg(dir: &Path, input: &str, output: &str) -> RunConfig {
    RunConfig { input: Some(dir.join(input)), output: Some(dir.join(output)), ..Default::default() }
}

fn qgabor(dir: &Path, args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qgabor"));
    cmd.current_dir(dir).args(args);
    if let Some(n) = threads {
        cmd.env("QGABOR_THREADS", n.to_string());
    }
    cmd.output().unwrap()
}

fn read_set(path: &Path) -> CoefficientSet {
    CoefficientSet::read_csv(fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn sharp_atom_expands_to_its_own_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qgabor(d, &["sample", "atom", "--params=0.5,0.5,0.5,0.5", "--output", "sharp.qf2"], None);
    assert!(out.status.success());
    let out = qgabor(d, &["expand", "--input", "sharp.qf2", "--output", "c.csv", "--format", "json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&fs::read(d.join("c.json")).unwrap()).unwrap();
    let g: Vec<f64> = serde_json::from_value(summary["gamma_sharp"].clone()).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-8 && g[1..].iter().all(|v| v.abs() < 1e-8));
    assert!(summary["tail_estimate"].as_f64().unwrap() < 1e-8);
    assert_eq!(summary["config"]["k"], 16);
    // the summary is also printed, followed by the runtime line
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"gamma_sharp\"") && stdout.contains("runtime"));
}

#[test]
fn expand_inverts_synthesize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut c = cfg(d, "unused", "drawn.csv");
    c.seed = 7;
    let drawn = commands::draw(&c, 2, &mut Vec::new()).unwrap();
    commands::synthesize(&cfg(d, "drawn.csv", "f.qf2"), &mut Vec::new()).unwrap();
    let summary = commands::expand(&cfg(d, "f.qf2", "back.csv"), &mut Vec::new()).unwrap();
    let back = read_set(&d.join("back.csv"));
    let mut worst = back.sharp.max_abs_diff(drawn.sharp);
    for (p, q) in &back.lattice {
        worst = worst.max(q.max_abs_diff(drawn.lattice.get(p).copied().unwrap_or(Quaternion::ZERO)));
    }
    assert!(worst < 1e-6, "{worst:e}");
    assert!(summary.reconstruction_rel_error < 1e-10);
    assert!(summary.kappa > 0.0);
}

#[test]
fn synthesize_reports_norm_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.csv"), "b1,b2,w1,w2,c0,c1,c2,c3\n").unwrap();
    let s = commands::synthesize(&cfg(d, "empty.csv", "zero.qf2"), &mut Vec::new()).unwrap();
    assert_eq!(s.l2_norm, 0.0);
    assert_eq!(load_qf2(d.join("zero.qf2")).unwrap().sup_norm(), 0.0);

    fs::write(d.join("one.csv"), "b1,b2,w1,w2,c0,c1,c2,c3\n0,0,0,0,1,0,0,0\n").unwrap();
    let mut text = Vec::new();
    let s = commands::synthesize(&cfg(d, "one.csv", "one.qf2"), &mut text).unwrap();
    let field = load_qf2(d.join("one.qf2")).unwrap();
    let atom = atom_signal(LatticePoint::ORIGIN.into(), Quaternion::ONE).sample(*field.spec()).unwrap();
    assert!(field.max_abs_diff(&atom).unwrap() < 1e-15);
    assert!((s.l2_norm - 0.5f64.sqrt()).abs() < 1e-12 && s.l2_norm <= s.bound);
    assert!(String::from_utf8(text).unwrap().contains("lattice bound"));
}

#[test]
fn reconstruct_identity_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = GridSpec::per_unit(16, -8, 8).unwrap();
    save_qf2(&atom_signal(LatticePoint::ORIGIN.into(), Quaternion::ONE).sample(spec).unwrap(), d.join("e0.qf2"))
        .unwrap();
    commands::expand(&cfg(d, "e0.qf2", "e0.csv"), &mut Vec::new()).unwrap();
    let mut c = cfg(d, "e0.csv", "e0_rec.qf2");
    c.reference = Some(d.join("e0.qf2"));
    assert!(commands::reconstruct(&c, &mut Vec::new()).unwrap().unwrap() < 1e-6);

    let out = qgabor(d, &["reconstruct", "--input", "e0.csv"], None);
    assert!(out.status.success());
    assert!(!String::from_utf8(out.stdout).unwrap().contains("relative error"));
}

/// End-to-end expansion of a Gaussian mixture off the atom span, expected
/// below 1e-2 relative error at the default configuration.
#[test]
fn reconstruct_gaussian_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = GridSpec::per_unit(16, -8, 8).unwrap();
    let mixture =
        Signal::from_id("mixture", &[0.3, -0.2, 1.0, 1.0, 0.5, 0.0, -0.5, -0.6, 0.4, 1.1, 0.2, 0.0, 0.8, 0.1]).unwrap();
    save_qf2(&mixture.sample(spec).unwrap(), d.join("mix.qf2")).unwrap();
    let summary = commands::expand(&cfg(d, "mix.qf2", "mix.csv"), &mut Vec::new()).unwrap();
    let mut c = cfg(d, "mix.csv", "rec.qf2");
    c.reference = Some(d.join("mix.qf2"));
    let err = commands::reconstruct(&c, &mut Vec::new()).unwrap().unwrap();
    let ok = err < 1e-2;
    let _ = writeln!(
        std::io::stderr(),
        "acceptance example reconstruct Gaussian mixture: {} (relative L2 error {err:.3e}, target 1e-2, sup |F| {:.1})",
        if ok { "PASS" } else { "FAIL" },
        summary.f_sup
    );
    assert!(ok, "relative error {err:e}");
}

/// A 16x16 P6 image with a smooth colour ramp.
fn write_ppm(path: &Path) {
    let mut bytes = b"P6\n16 16\n255\n".to_vec();
    for r in 0..16u32 {
        for c in 0..16u32 {
            bytes.extend([(r * 16) as u8, (c * 16) as u8, ((r + c) * 8) as u8]);
        }
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn ppm_image_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_ppm(&d.join("ramp.ppm"));
    let start = std::time::Instant::now();
    let summary = commands::expand(&cfg(d, "ramp.ppm", "ramp.csv"), &mut Vec::new()).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    assert!(summary.reconstruction_rel_error.is_finite() && summary.input_l2_norm > 0.0);
    assert_eq!(read_set(&d.join("ramp.csv")).lattice.len(), 7usize.pow(4));
}

#[test]
fn qft_and_zak_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = Signal::Gaussian { center: [0.0, 0.0], amplitude: Quaternion::ONE }
        .sample(GridSpec::per_unit(16, -4, 4).unwrap())
        .unwrap();
    save_qf2(&f, d.join("g.qf2")).unwrap();
    let spectrum = commands::qft(&cfg(d, "g.qf2", "g_hat.qf2"), &mut Vec::new()).unwrap();
    // the Gaussian is its own transform
    let s = *spectrum.spec();
    let worst = (0..s.n1)
        .flat_map(|a| (0..s.n2).map(move |b| (a, b)))
        .map(|(a, b)| {
            let w = s.point(a, b);
            (spectrum.get(a, b).q0 - (-std::f64::consts::PI * (w[0] * w[0] + w[1] * w[1])).exp()).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-8);

    let mut text = Vec::new();
    let mut c = cfg(d, "g.qf2", "z.csv");
    c.format = Some(qgabor_cli::Format::Csv);
    commands::zak(&c, &mut text).unwrap();
    assert_eq!(fs::read_to_string(d.join("z.csv")).unwrap().lines().count(), 16 * 16 + 1);
    commands::zak(&cfg(d, "g.qf2", "z.qf2"), &mut Vec::new()).unwrap();
    assert!(String::from_utf8(text).unwrap().contains("|Zf|^2"));
}

#[test]
fn verify_quick_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qgabor(d, &["verify", "--quick", "--output", "report.json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&fs::read(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["k"], 8);
    assert_eq!(report["config"]["quick"], true);

    let out = qgabor(d, &["verify", "--quick", "--swap-factors"], None);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("zak.atom_closed_form")).unwrap();
    assert!(line.ends_with("FAIL"));
    assert_eq!(stdout.lines().filter(|l| l.ends_with("FAIL")).count(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(qgabor(d, &["verify", "--lattice-radius", "8"], None).status.code(), Some(2));
    assert_eq!(qgabor(d, &["frobnicate"], None).status.code(), Some(2));
    assert_eq!(qgabor(d, &["expand", "--output", "c.csv"], None).status.code(), Some(2));
    assert_eq!(qgabor(d, &["expand", "--input", "missing.qf2", "--output", "c.csv"], None).status.code(), Some(3));
    fs::write(d.join("bad.qf2"), "not a field").unwrap();
    assert_eq!(qgabor(d, &["expand", "--input", "bad.qf2", "--output", "c.csv"], None).status.code(), Some(3));
    assert_eq!(qgabor(d, &["verify", "--quick", "--tol", "nonsense=1"], None).status.code(), Some(2));
    assert_eq!(qgabor(d, &["verify"], Some(0)).status.code(), Some(2));
}

#[test]
fn insufficient_decay_names_the_remedy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let wide = Signal::from_id("mixture", &[0.0, 0.0, 4.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    // the Zak box |m| ≤ 6 leaves a heavy tail inside [-8, 8)
    save_qf2(&wide.sample(GridSpec::per_unit(16, -8, 8).unwrap()).unwrap(), d.join("wide.qf2")).unwrap();
    let err = commands::expand(&cfg(d, "wide.qf2", "c.csv"), &mut Vec::new()).unwrap_err();
    assert!(matches!(err, CliError::Library(qgabor::Error::InsufficientDecay { .. })), "{err}");
    assert!(err.to_string().contains("increase the extent"));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn random_synthesis_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(qgabor(d, &["draw", "--seed", "42", "--output", "c.csv"], None).status.success());
    let mut hashes = Vec::new();
    for threads in [1, 2, 8] {
        let name = format!("f{threads}.qf2");
        assert!(qgabor(d, &["synthesize", "--input", "c.csv", "--output", &name], Some(threads)).status.success());
        hashes.push(hex::encode(Sha256::digest(fs::read(d.join(&name)).unwrap())));
    }
    assert!(hashes.iter().all(|h| *h == hashes[0]));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let path: PathBuf = d.join("run.json");
    fs::write(&path, r#"{"resolution": 8, "k": 8, "n_lat": 2, "tolerances": {"round_trip": 1e-7}}"#).unwrap();
    let loaded = RunConfig::load(&path).unwrap();
    assert_eq!((loaded.resolution, loaded.k, loaded.n_lat, loaded.n_zak), (8, 8, 2, 6));
    assert_eq!(loaded.tolerances.round_trip, 1e-7);
    assert_eq!(loaded.tolerances.sharp, 1e-10);
    loaded.validate().unwrap();

    let mut t = loaded.tolerances.clone();
    t.set("sharp=1e-9").unwrap();
    assert_eq!(t.sharp, 1e-9);
    assert!(t.set("sharp").is_err());

    let out =
        qgabor(d, &["sample", "indicator", "--config", "run.json", "--extent", "-2", "3", "--output", "ind.qf2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f = load_qf2(d.join("ind.qf2")).unwrap();
    assert_eq!((f.spec().n1, f.spec().x1_min), (40, -2.0));
    assert_eq!(f.l2_norm_sqr(), 1.0);

    let bad = RunConfig { k: 6, n_lat: 3, resolution: 12, ..Default::default() };
    assert!(matches!(bad.validate(), Err(CliError::Usage(_))));
}

#[test]
fn sharp_point_from_relaxed_point() {
    // the `atom` signal at (1/2, 1/2, 1/2, 1/2) is the sharp atom
    let spec = GridSpec::per_unit(8, -4, 4).unwrap();
    let a = Signal::from_id("atom", &[0.5, 0.5, 0.5, 0.5]).unwrap().sample(spec).unwrap();
    let b = atom_signal(RelaxedPoint::Sharp, Quaternion::ONE).sample(spec).unwrap();
    assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0);
}
