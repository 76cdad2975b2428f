//! One function per subcommand. Each writes its human-readable output to `out`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use qgabor::field::{export_csv, import_ppm, load_qf2, save_qf2, Signal};
use qgabor::gabor::{
    coefficient_norm, extract_coefficients, random_coefficients, random_quaternion, sigma0, uniqueness_kappa,
    CoefficientSet, SIGMA0_TERMS,
};
use qgabor::qft::qft_forward;
use qgabor::zak::zak_grid;
use qgabor::QField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::report::Report;
use crate::{verify, CliError};

/// Draws used for the κ̂ estimate in expansion summaries.
pub const SUMMARY_KAPPA_DRAWS: usize = 10;

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Loads a QF2 field, or imports a PPM image onto the configured grid.
pub fn load_field(cfg: &RunConfig, path: &Path) -> Result<QField, CliError> {
    if has_extension(path, "ppm") {
        Ok(import_ppm(path, cfg.resolution, cfg.extent[0], cfg.extent[1])?)
    } else {
        Ok(load_qf2(path)?)
    }
}

fn read_coefficients(path: &Path) -> Result<CoefficientSet, CliError> {
    Ok(CoefficientSet::read_csv(BufReader::new(File::open(path)?))?)
}

fn write_field(field: &QField, path: &Path, format: Format) -> Result<(), CliError> {
    match format {
        Format::Qf2 => save_qf2(field, path)?,
        Format::Csv => {
            let mut w = BufWriter::new(File::create(path)?);
            export_csv(field, &mut w)?;
            w.flush()?;
        }
        Format::Json => return Err(CliError::Usage("fields are written as qf2 or csv".into())),
    }
    Ok(())
}

fn relative_error(field: &QField, reference: &QField) -> Result<f64, CliError> {
    Ok(field.sub(reference)?.l2_norm() / reference.l2_norm())
}

/// Samples an analytic signal onto the configured grid.
pub fn sample(cfg: &RunConfig, id: &str, params: &[f64], out: &mut dyn Write) -> Result<QField, CliError> {
    cfg.validate()?;
    let field = Signal::from_id(id, params)?.sample(cfg.grid()?)?;
    write_field(&field, cfg.output()?, cfg.format.unwrap_or(Format::Qf2))?;
    writeln!(
        out,
        "sampled `{id}` on {}x{} samples, L2 norm {:.12e}",
        field.spec().n1,
        field.spec().n2,
        field.l2_norm()
    )?;
    Ok(field)
}

/// Writes random coefficients on `|λ|∞ ≤ radius` plus a random sharp coefficient.
pub fn draw(cfg: &RunConfig, radius: usize, out: &mut dyn Write) -> Result<CoefficientSet, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lattice = random_coefficients(&mut rng, radius);
    let sharp = random_quaternion(&mut rng);
    let set = CoefficientSet { sharp, lattice };
    let mut w = BufWriter::new(File::create(cfg.output()?)?);
    set.write_csv(&mut w)?;
    w.flush()?;
    writeln!(out, "drew {} lattice coefficients with seed {}", set.lattice.len(), cfg.seed)?;
    Ok(set)
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisSummary {
    pub l2_norm: f64,
    /// `σ0² ‖c‖₂` over the lattice part. For separable `c` this is the
    /// product bound `σ0² ‖c_j‖ ‖c_i‖`.
    pub bound: f64,
}

pub fn synthesize(cfg: &RunConfig, out: &mut dyn Write) -> Result<SynthesisSummary, CliError> {
    cfg.validate()?;
    let set = read_coefficients(cfg.input()?)?;
    let field = set.synthesize(cfg.grid()?)?;
    write_field(&field, cfg.output()?, cfg.format.unwrap_or(Format::Qf2))?;
    let s0 = sigma0(SIGMA0_TERMS).value;
    let summary = SynthesisSummary { l2_norm: field.l2_norm(), bound: s0 * s0 * coefficient_norm(&set.lattice) };
    writeln!(out, "L2 norm         {:.12e}", summary.l2_norm)?;
    writeln!(out, "lattice bound   {:.12e}  (sigma0^2 * |c|_2, sharp term excluded)", summary.bound)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionSummary {
    pub config: RunConfig,
    pub gamma_sharp: [f64; 4],
    pub coefficient_l2_sqr: f64,
    pub tail_estimate: f64,
    pub shell_sums: Vec<f64>,
    /// Least-squares ratio between consecutive shell sums.
    pub shell_decay_ratio: f64,
    pub f_sup: f64,
    pub min_theta: f64,
    pub zak_tail: f64,
    pub input_l2_norm: f64,
    pub reconstruction_rel_error: f64,
    pub kappa: f64,
}

/// Fits `log s_r ≈ a + r log ρ` and returns `ρ`.
fn decay_ratio(shells: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        shells.iter().enumerate().filter(|(_, s)| **s > 0.0).map(|(r, s)| (r as f64, s.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

/// Writes the coefficient CSV to `--output` and the summary next to it
/// with a `.json` extension.
pub fn expand(cfg: &RunConfig, out: &mut dyn Write) -> Result<ExpansionSummary, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let f = load_field(cfg, cfg.input()?)?;
    let r = extract_coefficients(&f, &cfg.expansion())?;
    let rebuilt = r.synthesize(*f.spec())?;
    let kappa =
        uniqueness_kappa(&mut ChaCha8Rng::seed_from_u64(cfg.seed), SUMMARY_KAPPA_DRAWS, cfg.n_lat.min(2), *f.spec())?;
    let shell_sums = r.shell_sums();
    let summary = ExpansionSummary {
        config: cfg.clone(),
        gamma_sharp: r.gamma_sharp.to_array(),
        coefficient_l2_sqr: r.l2_norm_sqr(),
        tail_estimate: r.tail_estimate,
        shell_decay_ratio: decay_ratio(&shell_sums),
        shell_sums,
        f_sup: r.f_sup,
        min_theta: r.min_theta,
        zak_tail: r.zak_tail,
        input_l2_norm: f.l2_norm(),
        reconstruction_rel_error: relative_error(&rebuilt, &f)?,
        kappa,
    };

    let csv_path = cfg.output()?;
    let mut w = BufWriter::new(File::create(csv_path)?);
    r.coefficient_set().write_csv(&mut w)?;
    w.flush()?;
    let json_path = summary_path(csv_path);
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;

    if cfg.format == Some(Format::Json) {
        writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    } else {
        let g = summary.gamma_sharp;
        writeln!(out, "gamma_sharp        ({:.6e}, {:.6e}, {:.6e}, {:.6e})", g[0], g[1], g[2], g[3])?;
        writeln!(out, "sum |gamma|^2      {:.6e}", summary.coefficient_l2_sqr)?;
        writeln!(out, "tail estimate      {:.3e}", summary.tail_estimate)?;
        writeln!(out, "shell decay ratio  {:.3e}", summary.shell_decay_ratio)?;
        writeln!(out, "sup |F|            {:.3e}", summary.f_sup)?;
        writeln!(out, "reconstruction     {:.3e} relative L2 error", summary.reconstruction_rel_error)?;
        writeln!(out, "kappa              {:.6e}", summary.kappa)?;
        writeln!(out, "wrote {} and {}", csv_path.display(), json_path.display())?;
    }
    writeln!(out, "runtime            {:.3} s", start.elapsed().as_secs_f64())?;
    Ok(summary)
}

pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Returns the relative L² error against `--reference` when one is given.
pub fn reconstruct(cfg: &RunConfig, out: &mut dyn Write) -> Result<Option<f64>, CliError> {
    cfg.validate()?;
    let set = read_coefficients(cfg.input()?)?;
    let reference = cfg.reference.as_deref().map(|p| load_field(cfg, p)).transpose()?;
    let spec = match &reference {
        Some(r) => *r.spec(),
        None => cfg.grid()?,
    };
    let field = set.synthesize(spec)?;
    if let Some(path) = &cfg.output {
        write_field(&field, path, cfg.format.unwrap_or(Format::Qf2))?;
    }
    writeln!(out, "L2 norm          {:.12e}", field.l2_norm())?;
    let error = reference.as_ref().map(|r| relative_error(&field, r)).transpose()?;
    if let Some(e) = error {
        writeln!(out, "relative error   {e:.6e}")?;
    }
    Ok(error)
}

/// Runs the verification suite. Fails with [`CliError::ChecksFailed`] after
/// printing the report if any check fails.
pub fn verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Report, CliError> {
    let report = verify::run(cfg)?;
    if cfg.format == Some(Format::Json) {
        writeln!(out, "{}", report.to_json())?;
    } else {
        writeln!(out, "{report}")?;
    }
    if let Some(path) = &cfg.output {
        std::fs::write(path, report.to_json() + "\n")?;
    }
    if !report.passed {
        let failed: Vec<_> = report.checks.iter().filter(|c| c.failed()).map(|c| c.name.as_str()).collect();
        return Err(CliError::ChecksFailed(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(report)
}

/// Forward QFT of the input onto its dual grid.
pub fn qft(cfg: &RunConfig, out: &mut dyn Write) -> Result<QField, CliError> {
    let f = load_field(cfg, cfg.input()?)?;
    let spectrum = qft_forward(&f)?;
    write_field(spectrum.field(), cfg.output()?, cfg.format.unwrap_or(Format::Qf2))?;
    writeln!(out, "|f|_2        {:.12e}", f.l2_norm())?;
    writeln!(out, "|f^|_2       {:.12e}", spectrum.l2_norm())?;
    writeln!(out, "leakage      {:.3e}", spectrum.leakage())?;
    Ok(spectrum.field().clone())
}

/// Zak transform on the `K⁴` grid. CSV output holds the `ω = 0` slice.
pub fn zak(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    let f = load_field(cfg, cfg.input()?)?;
    let z = zak_grid(&f, cfg.k, cfg.n_zak, 0.0)?;
    let mut w = BufWriter::new(File::create(cfg.output()?)?);
    match cfg.format.unwrap_or(Format::Qf2) {
        Format::Qf2 => z.write_qf2(&mut w)?,
        Format::Csv => z.export_slice_csv(&mut w, [0, 0])?,
        Format::Json => return Err(CliError::Usage("zak grids are written as qf2 or csv".into())),
    }
    w.flush()?;
    writeln!(out, "|f|_2^2      {:.12e}", f.l2_norm_sqr())?;
    writeln!(out, "|Zf|^2       {:.12e}", z.energy())?;
    writeln!(out, "Wiener tail  {:.3e}", z.tail)?;
    Ok(())
}
