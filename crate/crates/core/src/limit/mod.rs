//! Mean-field limit dynamics in the critical scaling and the stationary
//! partially ordered hierarchy.
//!
//! The recursion for the limit marginals only involves integers, the rate
//! `λ` and the second moment `m_2`. Resonances — frequency vectors where
//! `2k(k-1) + m_2 Σ n_r² = m_2 (Σ n_r)²` — switch the closed form from a
//! pure exponential to a secular `t e^{-βt}` branch, so they are detected in
//! exact integer arithmetic whenever `m_2` is rational and by a tolerance
//! fallback otherwise.

mod evolution;
mod stationary;

pub use evolution::{
    decompose_ab, evolve_limit_marginal, evolve_order_regime, Decomposition, IndexDecomposition,
    LimitMarginalSolution,
};
pub use stationary::{
    default_radius, h_density, nu_density, nu_density_fejer, stationary_hierarchy, ACoefficients,
    NuDensityReport, StationaryHierarchy, StationaryOrder, XiCoefficients,
};

use crate::init::InitError;
use crate::spectral::SpectralError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Evolve(#[from] crate::hierarchy::EvolveError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("stationary cross-validation failed at order {order}, index {index:?}: {lhs} vs {rhs}")]
    CrossValidation {
        order: usize,
        index: Vec<i64>,
        lhs: f64,
        rhs: f64,
    },
    #[error("truncation tail estimate {estimate:e} exceeds tolerance {tol:e}")]
    TailBound { estimate: f64, tol: f64 },
    #[error("density negative beyond tolerance: {value:e} at grid point {point}")]
    NegativeDensity { value: f64, point: usize },
    #[error("density not maximal at the origin: {at_origin} < {elsewhere}")]
    NotPeakedAtOrigin { at_origin: f64, elsewhere: f64 },
    #[error("decomposition does not reconstruct the solution at index {index:?} (error {error:e})")]
    Reconstruction { index: Vec<i64>, error: f64 },
}

/// Second moment of the interaction generating function, carrying an exact
/// rational form when one is known so resonance tests are exact.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct M2 {
    value: f64,
    rational: Option<(i64, i64)>,
}

impl M2 {
    /// Exact rational second moment `num/den`.
    pub fn rational(num: i64, den: i64) -> Self {
        assert!(num > 0 && den > 0);
        Self {
            value: num as f64 / den as f64,
            rational: Some((num, den)),
        }
    }

    /// Float second moment; resonance detection falls back to a tolerance.
    pub fn from_f64(value: f64) -> Self {
        assert!(value > 0.0);
        Self {
            value,
            rational: None,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn rational_parts(&self) -> Option<(i64, i64)> {
        self.rational
    }

    /// Resonance test `2k(k-1) + m_2 S = m_2 T` for `S = Σ n_r²`,
    /// `T = (Σ n_r)²`.
    pub fn is_resonant(&self, k: usize, sum_sq: i64, sq_sum: i64) -> bool {
        let lhs_int = 2 * (k as i128) * (k as i128 - 1);
        match self.rational {
            Some((num, den)) => {
                lhs_int * den as i128 == num as i128 * (sq_sum as i128 - sum_sq as i128)
            }
            None => {
                (lhs_int as f64 + self.value * (sum_sq - sq_sum) as f64).abs() < 1e-9
            }
        }
    }

    /// Whether `2k(k-1)/m_2` is an integer (branch selector for `ℓ_k`).
    fn ratio_is_integer(&self, k: usize) -> bool {
        let kk = 2 * (k as i128) * (k as i128 - 1);
        match self.rational {
            Some((num, den)) => (kk * den as i128) % num as i128 == 0,
            None => {
                let x = kk as f64 / self.value;
                (x - x.round()).abs() < 1e-9
            }
        }
    }
}

/// Sum of squares and square of sum of a frequency vector.
pub(crate) fn index_quadratics(idx: &[i64]) -> (i64, i64) {
    let sum: i64 = idx.iter().sum();
    let sum_sq: i64 = idx.iter().map(|n| n * n).sum();
    (sum_sq, sum * sum)
}

/// The envelope constants `ℓ_1..ℓ_K` bounding `|a_k| ≤ Π_j ℓ_j`:
/// `ℓ_1 = 1` and for `k ≥ 2` either `2k(k-1)/m_2` itself when that ratio is
/// an integer, or `2k(k-1)` over the distance from `2k(k-1)/m_2`-adjacent
/// integer multiples of `m_2`.
pub fn ell_bounds(k_max: usize, m2: &M2) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max);
    out.push(1.0);
    for k in 2..=k_max {
        let kk = (2 * k * (k - 1)) as f64;
        let ell = if m2.ratio_is_integer(k) {
            kk / m2.value()
        } else {
            let floor = (kk / m2.value()).floor();
            let below = kk - m2.value() * floor;
            let above = m2.value() * (floor + 1.0) - kk;
            kk / below.min(above)
        };
        out.push(ell);
    }
    out
}

/// Products `Π_{j<=k} ℓ_j` for `k = 1..K`.
pub fn ell_products(k_max: usize, m2: &M2) -> Vec<f64> {
    let ells = ell_bounds(k_max, m2);
    let mut acc = 1.0;
    ells.iter()
        .map(|&l| {
            acc *= l;
            acc
        })
        .collect()
}

/// The uniform bounds `C_2..C_K` on the transient coefficients `b_{h,k}`:
/// `C_2 = 1 + max(ℓ_2, 4/(m_2 e))` and
/// `C_k = max(1 + (Π_{j<k} ℓ_j) max(ℓ_k, 2k(k-1)/(m_2 e)), k C_{k-1}/2)`.
pub fn b_bound_constants(k_max: usize, m2: &M2) -> Vec<f64> {
    assert!(k_max >= 2);
    let ells = ell_bounds(k_max, m2);
    let e = std::f64::consts::E;
    let mut out = Vec::with_capacity(k_max - 1);
    out.push(1.0 + ells[1].max(4.0 / (m2.value() * e)));
    let mut prod = ells[0] * ells[1];
    for k in 3..=k_max {
        let kk = (2 * k * (k - 1)) as f64;
        let candidate = 1.0 + prod * ells[k - 1].max(kk / (m2.value() * e));
        let prev = out[k - 3];
        out.push(candidate.max(k as f64 * prev / 2.0));
        prod *= ells[k - 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_examples() {
        // m2 = 2, (1,1): 2k(k-1) + m2 S = 4 + 4 = 8 = m2 (n1+n2)^2.
        let m2 = M2::rational(2, 1);
        assert!(m2.is_resonant(2, 2, 4));
        // m2 = 1, (1,2): 4 + 5 = 9 = (1+2)^2.
        let m2 = M2::rational(1, 1);
        assert!(m2.is_resonant(2, 5, 9));
        assert!(!m2.is_resonant(2, 2, 0));
        // Zero-sum vectors are never resonant for k >= 2.
        assert!(!m2.is_resonant(3, 6, 0));
    }

    #[test]
    fn resonance_float_fallback() {
        let m2 = M2::from_f64(2.0);
        assert!(m2.is_resonant(2, 2, 4));
        assert!(!m2.is_resonant(2, 2, 5));
    }

    #[test]
    fn ell_branch_values() {
        let ells = ell_bounds(2, &M2::rational(1, 1));
        assert_eq!(ells, vec![1.0, 4.0]);
        // m2 = 3, k = 2: 4/3 not an integer; min(4-3, 6-4) = 1.
        let ells = ell_bounds(2, &M2::rational(3, 1));
        assert_eq!(ells[1], 4.0);
        // m2 = 1/12, k = 2: 48 is an integer multiple.
        let ells = ell_bounds(2, &M2::rational(1, 12));
        assert_eq!(ells[1], 48.0);
    }

    #[test]
    fn b_constants_match_hand_values() {
        // m2 = 1: C_2 = 1 + max(4, 4/e) = 5.
        let c = b_bound_constants(4, &M2::rational(1, 1));
        assert_eq!(c[0], 5.0);
        // The k C_{k-1}/2 floor is respected.
        for (i, k) in (3..=4).enumerate() {
            assert!(c[i + 1] >= k as f64 * c[i] / 2.0);
        }
        // Very large m2 drives C_2 to 1 + ℓ_2.
        let m2 = M2::rational(1_000_000, 1);
        let ells = ell_bounds(2, &m2);
        let c = b_bound_constants(2, &m2);
        assert_eq!(c[0], 1.0 + ells[1]);
    }
}
