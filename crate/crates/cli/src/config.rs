use std::fs;
use std::path::{Path, PathBuf};

use qgabor::gabor::{ExpansionConfig, DEFAULT_EPS_THETA, DEFAULT_LATTICE_RADIUS};
use qgabor::zak::{DEFAULT_THETA_TERMS, DEFAULT_ZAK_GRID, DEFAULT_ZAK_RADIUS};
use qgabor::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Samples per unit length.
pub const DEFAULT_RESOLUTION: usize = 16;
pub const DEFAULT_EXTENT: [i64; 2] = [-8, 8];
pub const DEFAULT_SEED: u64 = 42;
/// Zak grid used by `--quick` when none is given.
pub const QUICK_ZAK_GRID: usize = 8;
pub const QUICK_EXTENT: [i64; 2] = [-6, 6];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Qf2,
}

/// Check tolerances. Absolute unless the name says otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Scaled by `|q||r||s|` resp. `|p||q|`.
    pub algebra: f64,
    /// Relative.
    pub plancherel: f64,
    /// Relative.
    pub qft_round_trip: f64,
    pub wqft_paths: f64,
    /// Relative.
    pub wqft_reconstruction: f64,
    /// Relative.
    pub gabor_energy: f64,
    pub theta: f64,
    pub theta_zero: f64,
    pub zak_shift: f64,
    /// Relative.
    pub unitarity: f64,
    pub inversion: f64,
    pub zak_atom: f64,
    pub sharp: f64,
    /// Relative to the largest coefficient.
    pub round_trip: f64,
    pub sigma0: f64,
    /// Relative spread of κ̂ between resolutions.
    pub kappa_stability: f64,
    /// Threshold on divided theta values.
    pub eps_theta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-13,
            plancherel: 1e-10,
            qft_round_trip: 1e-12,
            wqft_paths: 1e-12,
            wqft_reconstruction: 1e-3,
            gabor_energy: 1e-3,
            theta: 1e-8,
            theta_zero: 1e-12,
            zak_shift: 1e-12,
            unitarity: 1e-6,
            inversion: 1e-9,
            zak_atom: 1e-9,
            sharp: 1e-10,
            round_trip: 1e-6,
            sigma0: 1e-8,
            kappa_stability: 0.1,
            eps_theta: DEFAULT_EPS_THETA,
        }
    }
}

impl Tolerances {
    /// Sets one tolerance from a `name=value` pair.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("tolerance `{assignment}` is not of the form name=value")))?;
        let value: f64 =
            value.trim().parse().map_err(|_| CliError::Usage(format!("tolerance `{name}` has a non-numeric value")))?;
        let mut json = serde_json::to_value(&*self).expect("tolerances serialize");
        let slot = json.get_mut(name.trim()).ok_or_else(|| CliError::Usage(format!("unknown tolerance `{name}`")))?;
        *slot = value.into();
        *self = serde_json::from_value(json).expect("tolerances deserialize");
        Ok(())
    }
}

/// Every parameter of a run. Reports embed it verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub resolution: usize,
    pub extent: [i64; 2],
    /// Zak grid samples per axis.
    pub k: usize,
    pub n_lat: usize,
    pub n_zak: usize,
    pub theta_terms: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub format: Option<Format>,
    pub quick: bool,
    /// Debug: evaluate closed-form Zak atoms with the factors swapped.
    pub swap_factors: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            extent: DEFAULT_EXTENT,
            k: DEFAULT_ZAK_GRID,
            n_lat: DEFAULT_LATTICE_RADIUS,
            n_zak: DEFAULT_ZAK_RADIUS,
            theta_terms: DEFAULT_THETA_TERMS,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            input: None,
            output: None,
            reference: None,
            format: None,
            quick: false,
            swap_factors: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }

    /// Checks positivity, the extent, grid divisibility and Nyquist.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.resolution == 0 || self.k == 0 || self.n_zak == 0 || self.theta_terms == 0 {
            return usage("resolution, zak grid, zak radius and theta terms must be positive".into());
        }
        if self.extent[0] >= self.extent[1] {
            return usage(format!("extent [{}, {}) is empty", self.extent[0], self.extent[1]));
        }
        if !self.resolution.is_multiple_of(self.k) {
            return usage(format!("zak grid {} must divide the resolution {}", self.k, self.resolution));
        }
        let t = &self.tolerances;
        let all = serde_json::to_value(t).expect("tolerances serialize");
        if let Some((name, _)) = all.as_object().unwrap().iter().find(|(_, v)| v.as_f64().is_none_or(|v| v <= 0.0)) {
            return usage(format!("tolerance `{name}` must be positive"));
        }
        self.expansion().validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        Ok(GridSpec::per_unit(self.resolution, self.extent[0], self.extent[1])?)
    }

    pub fn expansion(&self) -> ExpansionConfig {
        ExpansionConfig {
            k: self.k,
            n_lat: self.n_lat,
            n_zak: self.n_zak,
            theta_terms: self.theta_terms,
            eps_theta: self.tolerances.eps_theta,
        }
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))
    }

    pub fn output(&self) -> Result<&Path, CliError> {
        self.output.as_deref().ok_or_else(|| CliError::Usage("--output is required".into()))
    }
}
