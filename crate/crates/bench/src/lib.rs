//! Fixed inputs for the kernel benchmarks.

use qgabor::field::Signal;
use qgabor::gabor::{random_coefficients, random_quaternion, CoefficientMap};
use qgabor::{GridSpec, QField, Quaternion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 42;

/// Desk-scale grid: `resolution` samples per unit on `[-8, 8)²`.
pub fn grid(resolution: usize) -> GridSpec {
    GridSpec::per_unit(resolution, -8, 8).expect("valid grid")
}

/// Three-term Gaussian mixture sampled on [`grid`].
pub fn mixture(resolution: usize) -> QField {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    Signal::random_mixture(&mut rng, 3).sample(grid(resolution)).expect("sampled")
}

/// Random coefficients on `|λ|∞ ≤ radius` and a sharp coefficient.
pub fn coefficients(radius: usize) -> (Quaternion, CoefficientMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let c = random_coefficients(&mut rng, radius);
    (random_quaternion(&mut rng), c)
}
