//! Relaxed quaternionic Gabor expansions at critical density.
//!
//! Quaternion-valued signals on a uniform 2-D grid are analysed with the
//! two-sided quaternionic Fourier transform, its windowed variant and the
//! quaternionic Zak transform. The [`gabor`] module builds on these to
//! expand a signal over the integer lattice plus one extra point in the
//! centre of the unit cell.
//!
//! Module map:
//!
//! - [`quaternion`]: the scalar type, carriers and the two exponential subgroups.
//! - [`field`]: sampled signals, norms, inner products, Wiener amalgam norm, file I/O.
//! - [`qft`]: discrete two-sided QFT, WQFT, reconstruction and Gabor energies.
//! - [`zak`]: theta series, Zak transform and its closed form on Gaussian atoms.
//! - [`gabor`]: lattices, atoms, synthesis, the sharp functional and coefficient extraction.

pub mod error;
pub mod field;
pub mod gabor;
pub mod qft;
pub mod quaternion;
mod spectral;
pub mod zak;

pub use error::{Error, Result};
pub use field::{GridSpec, QField};
pub use gabor::{LatticePoint, RelaxedCoefficients, RelaxedPoint};
pub use quaternion::{Axis, Carrier, Quaternion, Side};
pub use zak::ZakGrid;
