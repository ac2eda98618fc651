//! Initial-data families for the marginal hierarchies.
//!
//! The recursions need initial coefficients at folded indices whose entries
//! can exceed any fixed tensor radius, so analytic families are evaluated on
//! demand at arbitrary frequencies. User-supplied tensors are looked up and
//! report a missing index instead of silently substituting zero.

use crate::spectral::SpectralCoefficients;
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InitError {
    #[error("no initial tensor supplied for order {0}")]
    MissingOrder(usize),
    #[error("initial tensor of order {order} cannot resolve folded index {index:?} (radius {radius})")]
    Unresolvable {
        order: usize,
        index: Vec<i64>,
        radius: i32,
    },
}

/// One-dimensional coefficient family with closed-form values at any
/// frequency.
#[derive(Clone, Debug)]
pub enum OneDimFamily {
    /// Uniform measure on the circle: `δ_0(n)`.
    Uniform,
    /// Point mass at `theta`: `e^{-i n theta}`.
    PointMass { theta: f64 },
    /// The kernel family `2 / (2 + m2 n²)`.
    HKernel { m2: f64 },
    /// Tabulated coefficients; frequencies outside the radius are an error.
    Tabulated(SpectralCoefficients),
}

impl OneDimFamily {
    pub fn coeff(&self, n: i64) -> Result<C64, InitError> {
        match self {
            Self::Uniform => Ok(if n == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }),
            Self::PointMass { theta } => {
                let phase = -(n as f64) * theta;
                Ok(C64::new(phase.cos(), phase.sin()))
            }
            Self::HKernel { m2 } => Ok(C64::new(2.0 / (2.0 + m2 * (n * n) as f64), 0.0)),
            Self::Tabulated(c) => {
                if n.unsigned_abs() <= c.n_max() as u64 {
                    Ok(c.get(&[n as i32]).unwrap())
                } else {
                    Err(InitError::Unresolvable {
                        order: 1,
                        index: vec![n],
                        radius: c.n_max(),
                    })
                }
            }
        }
    }
}

/// Initial data for the full hierarchy of marginals.
#[derive(Clone, Debug)]
pub enum InitialFamily {
    /// Chaotic product `f_{1,0}^{⊗k}`.
    Chaotic(OneDimFamily),
    /// Ordered state: coefficients `μ̂_0(Σ_r n_r)` at every order.
    Ordered(OneDimFamily),
    /// Arbitrary user tensors, one per order starting at order 1.
    Tensors(Vec<SpectralCoefficients>),
}

impl InitialFamily {
    /// Initial coefficient of the order-`k` marginal at frequency `idx`.
    pub fn coeff(&self, k: usize, idx: &[i64]) -> Result<C64, InitError> {
        debug_assert_eq!(idx.len(), k);
        match self {
            Self::Chaotic(f1) => {
                let mut acc = C64::new(1.0, 0.0);
                for &n in idx {
                    acc *= f1.coeff(n)?;
                }
                Ok(acc)
            }
            Self::Ordered(mu0) => mu0.coeff(idx.iter().sum()),
            Self::Tensors(tensors) => {
                let tensor = tensors.get(k - 1).ok_or(InitError::MissingOrder(k))?;
                let mut small = Vec::with_capacity(k);
                for &n in idx {
                    if n.unsigned_abs() > tensor.n_max() as u64 {
                        return Err(InitError::Unresolvable {
                            order: k,
                            index: idx.to_vec(),
                            radius: tensor.n_max(),
                        });
                    }
                    small.push(n as i32);
                }
                Ok(tensor.get(&small).unwrap())
            }
        }
    }

    /// Materialize the order-`k` initial tensor on a cube.
    pub fn tensor(&self, k: usize, n_max: i32) -> Result<SpectralCoefficients, InitError> {
        let mut long = vec![0i64; k];
        SpectralCoefficients::try_from_fn(k, n_max, |idx| {
            for (slot, &n) in long.iter_mut().zip(idx.iter()) {
                *slot = n as i64;
            }
            self.coeff(k, &long)
        })
    }
}
