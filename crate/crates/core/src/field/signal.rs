use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GridSpec, QField};
use crate::error::{Error, Result};
use crate::quaternion::{exp_i, exp_j, Quaternion};

/// One term `a · exp(-π |x - c|² / w²)` of a Gaussian mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureTerm {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: Quaternion,
}

/// Analytic test signals that can be sampled onto a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Signal {
    /// `a · exp(-π |x - b|²)`.
    Gaussian {
        center: [f64; 2],
        amplitude: Quaternion,
    },
    /// Plane-wave-modulated Gaussian with the coefficient wedged between the
    /// kernels: `exp(2πi x1 ω1) c exp(-π|x-b|²) exp(2πj x2 ω2)`.
    ModulatedGaussian {
        center: [f64; 2],
        frequency: [f64; 2],
        coefficient: Quaternion,
    },
    Mixture(Vec<MixtureTerm>),
    /// Indicator of the unit cube `[0,1)²`.
    Indicator,
    Constant(Quaternion),
}

impl Signal {
    /// Builds a signal from a textual id and numeric parameters:
    ///
    /// | id | params |
    /// |---|---|
    /// | `gaussian` | `b1 b2 [q0 q1 q2 q3]` |
    /// | `atom` | `b1 b2 w1 w2 [q0 q1 q2 q3]` |
    /// | `indicator` | none |
    /// | `constant` | `q0 q1 q2 q3` |
    /// | `mixture` | repeated `c1 c2 width q0 q1 q2 q3` |
    pub fn from_id(id: &str, params: &[f64]) -> Result<Self> {
        let quat = |p: &[f64]| -> Quaternion {
            if p.len() >= 4 {
                Quaternion::new(p[0], p[1], p[2], p[3])
            } else {
                Quaternion::ONE
            }
        };
        let want = |n: usize| -> Result<()> {
            if params.len() < n {
                Err(Error::InvalidParameter(format!("signal `{id}` needs at least {n} parameters")))
            } else {
                Ok(())
            }
        };
        match id {
            "gaussian" => {
                want(2)?;
                Ok(Signal::Gaussian { center: [params[0], params[1]], amplitude: quat(&params[2..]) })
            }
            "atom" => {
                want(4)?;
                Ok(Signal::ModulatedGaussian {
                    center: [params[0], params[1]],
                    frequency: [params[2], params[3]],
                    coefficient: quat(&params[4..]),
                })
            }
            "indicator" => Ok(Signal::Indicator),
            "constant" => {
                want(4)?;
                Ok(Signal::Constant(quat(params)))
            }
            "mixture" => {
                if params.is_empty() || !params.len().is_multiple_of(7) {
                    return Err(Error::InvalidParameter("mixture takes groups of 7 parameters".into()));
                }
                Ok(Signal::Mixture(
                    params
                        .chunks(7)
                        .map(|p| MixtureTerm {
                            center: [p[0], p[1]],
                            width: p[2],
                            amplitude: Quaternion::new(p[3], p[4], p[5], p[6]),
                        })
                        .collect(),
                ))
            }
            other => Err(Error::UnknownSignal(other.to_string())),
        }
    }

    /// Random Gaussian mixture with `terms` components: centres uniform in
    /// `[-1.5, 1.5]²`, widths in `[0.8, 1.2]`, amplitude components in `[-1, 1]`.
    pub fn random_mixture<R: Rng + ?Sized>(rng: &mut R, terms: usize) -> Self {
        Signal::Mixture(
            (0..terms)
                .map(|_| MixtureTerm {
                    center: [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)],
                    width: rng.gen_range(0.8..1.2),
                    amplitude: Quaternion::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                })
                .collect(),
        )
    }

    pub fn eval(&self, x: [f64; 2]) -> Quaternion {
        match self {
            Signal::Gaussian { center, amplitude } => *amplitude * gauss(x, *center, 1.0),
            Signal::ModulatedGaussian { center, frequency, coefficient } => {
                exp_i(x[0] * frequency[0]) * (*coefficient * gauss(x, *center, 1.0)) * exp_j(x[1] * frequency[1])
            }
            Signal::Mixture(terms) => terms.iter().map(|t| t.amplitude * gauss(x, t.center, t.width)).sum(),
            Signal::Indicator => {
                let inside = (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]);
                Quaternion::real(if inside { 1.0 } else { 0.0 })
            }
            Signal::Constant(q) => *q,
        }
    }

    pub fn sample(&self, spec: GridSpec) -> Result<QField> {
        QField::from_fn(spec, |x| self.eval(x))
    }
}

#[inline]
fn gauss(x: [f64; 2], c: [f64; 2], w: f64) -> f64 {
    let d1 = x[0] - c[0];
    let d2 = x[1] - c[1];
    (-PI * (d1 * d1 + d2 * d2) / (w * w)).exp()
}
