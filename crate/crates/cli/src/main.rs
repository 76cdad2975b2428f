use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgabor_cli::config::{QUICK_EXTENT, QUICK_ZAK_GRID};
use qgabor_cli::{commands, CliError, Format, RunConfig};

#[derive(Parser)]
#[command(name = "qgabor", version, about = "Relaxed quaternionic Gabor expansions at critical density")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Samples per unit length [default: 16]
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Square extent [LO, HI) in whole units [default: -8 8]
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    extent: Option<Vec<i64>>,
    /// Zak grid samples per axis K [default: 16]
    #[arg(long = "zak-grid", global = true)]
    k: Option<usize>,
    /// Lattice window |λ|∞ ≤ N [default: 3]
    #[arg(long = "lattice-radius", global = true)]
    n_lat: Option<usize>,
    /// Zak lattice-sum radius [default: 6]
    #[arg(long = "zak-radius", global = true)]
    n_zak: Option<usize>,
    /// Theta truncation M [default: 8]
    #[arg(long, global = true)]
    theta_terms: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Smaller suite: K = 8 and extent [-6, 6) unless given
    #[arg(long, global = true)]
    quick: bool,
    /// Tolerance override, e.g. `--tol round_trip=1e-8`
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an analytic signal (gaussian, atom, indicator, constant, mixture)
    Sample {
        signal: String,
        /// Signal parameters, comma separated
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
    },
    /// Write random coefficients on |λ|∞ ≤ RADIUS plus a sharp coefficient
    Draw {
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
    /// Synthesize a field from a coefficient CSV
    Synthesize,
    /// Expand a QF2 field or PPM image into relaxed coefficients
    Expand,
    /// Synthesize from coefficients and compare against --reference
    Reconstruct,
    /// Run the verification suite
    Verify {
        /// Debug: evaluate closed-form Zak atoms with swapped factors
        #[arg(long)]
        swap_factors: bool,
    },
    /// Forward two-sided QFT
    Qft,
    /// Zak transform on the K⁴ grid
    Zak,
}

fn resolve(c: Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if c.quick {
        cfg.quick = true;
        cfg.k = QUICK_ZAK_GRID;
        cfg.extent = QUICK_EXTENT;
    }
    if let Some(v) = c.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = c.extent {
        cfg.extent = [v[0], v[1]];
    }
    macro_rules! take {
        ($($field:ident),*) => {$( if let Some(v) = c.$field { cfg.$field = v; } )*};
    }
    take!(k, n_lat, n_zak, theta_terms, seed);
    for (slot, v) in [(&mut cfg.input, c.input), (&mut cfg.output, c.output), (&mut cfg.reference, c.reference)] {
        if v.is_some() {
            *slot = v;
        }
    }
    if c.format.is_some() {
        cfg.format = c.format;
    }
    for t in &c.tolerances {
        cfg.tolerances.set(t)?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("QGABOR_THREADS") else { return Ok(()) };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("QGABOR_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = resolve(cli.common)?;
    let stdout = io::stdout();
    let out = &mut stdout.lock();
    match cli.command {
        Command::Sample { signal, params } => commands::sample(&cfg, &signal, &params, out).map(drop),
        Command::Draw { radius } => commands::draw(&cfg, radius, out).map(drop),
        Command::Synthesize => commands::synthesize(&cfg, out).map(drop),
        Command::Expand => commands::expand(&cfg, out).map(drop),
        Command::Reconstruct => commands::reconstruct(&cfg, out).map(drop),
        Command::Verify { swap_factors } => {
            cfg.swap_factors = swap_factors;
            commands::verify(&cfg, out).map(drop)
        }
        Command::Qft => commands::qft(&cfg, out).map(drop),
        Command::Zak => commands::zak(&cfg, out).map(drop),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
