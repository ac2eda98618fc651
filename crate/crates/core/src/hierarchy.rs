//! Generic solver for the closed marginal recursions.
//!
//! Both the finite-N and the mean-field hierarchies share one shape: the
//! order-k trajectory at frequency `n` is a decaying exponential applied to
//! the initial coefficient plus, for every pair `i < j`, a gain factor times
//! the time convolution of that exponential with the order-(k-1) trajectory
//! at the folded index (entries `n_i`, `n_j` replaced by `n_i + n_j` at
//! position `min(i, j)`). Everything stays inside the exponential-polynomial
//! algebra, so the solver is exact.
//!
//! Folding pushes entries beyond any fixed cube, so lower orders are
//! materialized lazily on exactly the index set the requested output cube
//! reaches; entries of reachable indices are block sums of at most k output
//! entries.

use crate::init::{InitError, InitialFamily};
use crate::spectral::{ExpPolynomial, SpectralCoefficients};
use crate::C64;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("order {0} out of range for this solution")]
    OrderOutOfRange(usize),
    #[error(
        "{count} indices of order {order} are missing (initial tensors cannot resolve their foldings); first: {first:?}"
    )]
    MissingValues {
        order: usize,
        count: usize,
        first: Vec<i64>,
    },
}

/// Homogeneous decay rate of order `k` at a frequency vector.
pub type RateFn<'a> = dyn Fn(usize, &[i64]) -> f64 + 'a;
/// Gain coefficient of the pair `(i, j)` at order `k` (real in every system).
pub type GainFn<'a> = dyn Fn(usize, usize, usize, &[i64]) -> f64 + 'a;

/// Replace entries `i < j` by their sum at position `i`.
pub fn fold_index(idx: &[i64], i: usize, j: usize, out: &mut Vec<i64>) {
    debug_assert!(i < j && j < idx.len());
    out.clear();
    for (r, &n) in idx.iter().enumerate() {
        if r == j {
            continue;
        }
        out.push(if r == i { idx[i] + idx[j] } else { n });
    }
}

/// Exact per-order trajectories on the reachable index sets.
///
/// Indices whose foldings escape a user-supplied initial tensor are *marked
/// missing*, never silently zeroed: `poly` returns `None` for them,
/// [`HierarchySolution::missing`] lists them, and `eval` refuses a cube that
/// touches one.
pub struct HierarchySolution {
    pub k: usize,
    pub out_radius: i32,
    orders: Vec<HashMap<Vec<i64>, ExpPolynomial>>,
    missing: Vec<(usize, Vec<i64>)>,
}

impl HierarchySolution {
    pub fn poly(&self, order: usize, idx: &[i64]) -> Option<&ExpPolynomial> {
        self.orders.get(order - 1).and_then(|m| m.get(idx))
    }

    /// Indices (order, frequency vector) that could not be resolved.
    pub fn missing(&self) -> &[(usize, Vec<i64>)] {
        &self.missing
    }

    /// Evaluate the order-`order` marginal on its output cube at time `t`.
    pub fn eval(&self, order: usize, t: f64) -> Result<SpectralCoefficients, EvolveError> {
        if order < 1 || order > self.k {
            return Err(EvolveError::OrderOutOfRange(order));
        }
        let map = &self.orders[order - 1];
        let missing_here: Vec<&Vec<i64>> = self
            .missing
            .iter()
            .filter(|(o, idx)| *o == order && idx.iter().all(|n| n.unsigned_abs() <= self.out_radius as u64))
            .map(|(_, idx)| idx)
            .collect();
        if !missing_here.is_empty() {
            return Err(EvolveError::MissingValues {
                order,
                count: missing_here.len(),
                first: missing_here[0].clone(),
            });
        }
        let mut long = vec![0i64; order];
        let mut out = SpectralCoefficients::from_fn(order, self.out_radius, |idx| {
            for (slot, &n) in long.iter_mut().zip(idx.iter()) {
                *slot = n as i64;
            }
            map.get(&long)
                .map(|p| p.eval(t))
                .unwrap_or(C64::new(0.0, 0.0))
        });
        out.time = t;
        Ok(out)
    }

    /// Largest coefficient magnitude on the outermost shell of the output
    /// cube at time `t` — a cheap truncation diagnostic for reports.
    pub fn boundary_sup(&self, order: usize, t: f64) -> f64 {
        let map = &self.orders[order - 1];
        let mut sup = 0.0f64;
        for (idx, poly) in map {
            if idx.len() == order
                && idx.iter().any(|n| n.unsigned_abs() == self.out_radius as u64)
                && idx.iter().all(|n| n.unsigned_abs() <= self.out_radius as u64)
            {
                sup = sup.max(poly.eval(t).norm());
            }
        }
        sup
    }
}

/// Solve orders `1..=k` of a marginal recursion over the cube
/// `[-out_radius, out_radius]^order` for every order.
pub fn evolve(
    init: &InitialFamily,
    k: usize,
    out_radius: i32,
    rate: &RateFn,
    gain: &GainFn,
) -> Result<HierarchySolution, EvolveError> {
    assert!(k >= 1 && out_radius >= 0);

    // Top-down: collect the index sets each order must cover. Every order's
    // own output cube is included so lower marginals are exported too.
    let mut needed: Vec<Vec<Vec<i64>>> = vec![Vec::new(); k];
    let mut seen: Vec<HashMap<Vec<i64>, ()>> = vec![HashMap::new(); k];
    for order in (1..=k).rev() {
        for idx in cube_indices(order, out_radius) {
            seen[order - 1].entry(idx.clone()).or_insert(());
        }
        // Freeze this order's set, then seed the one below with its folds.
        let level: Vec<Vec<i64>> = seen[order - 1].keys().cloned().collect();
        if order > 1 {
            let mut folded = Vec::new();
            for idx in &level {
                for i in 0..order {
                    for j in (i + 1)..order {
                        fold_index(idx, i, j, &mut folded);
                        seen[order - 2].entry(folded.clone()).or_insert(());
                    }
                }
            }
        }
        needed[order - 1] = level;
    }

    // Bottom-up: materialize exact trajectories. An initial tensor that
    // cannot resolve an index poisons that index and everything folding
    // onto it; those stay absent and are listed as missing.
    let mut orders: Vec<HashMap<Vec<i64>, ExpPolynomial>> = Vec::with_capacity(k);
    let mut missing: Vec<(usize, Vec<i64>)> = Vec::new();
    for order in 1..=k {
        let mut level = HashMap::with_capacity(needed[order - 1].len());
        let mut folded = Vec::new();
        'indices: for idx in &needed[order - 1] {
            let coeff = match init.coeff(order, idx) {
                Ok(c) => c,
                Err(InitError::Unresolvable { .. }) => {
                    missing.push((order, idx.clone()));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let rho = rate(order, idx);
            let mut poly = ExpPolynomial::exponential(coeff, rho);
            for i in 0..order {
                for j in (i + 1)..order {
                    fold_index(idx, i, j, &mut folded);
                    let Some(child) = orders[order - 2].get(&folded) else {
                        missing.push((order, idx.clone()));
                        continue 'indices;
                    };
                    let g = gain(order, i, j, idx);
                    if g != 0.0 {
                        poly = poly.add(
                            &child
                                .convolve_decay(rho)
                                .scale(C64::new(g, 0.0)),
                        );
                    }
                }
            }
            level.insert(idx.clone(), poly);
        }
        orders.push(level);
    }

    Ok(HierarchySolution {
        k,
        out_radius,
        orders,
        missing,
    })
}

/// All indices of the cube `[-radius, radius]^dim` in lexicographic order.
pub fn cube_indices(dim: usize, radius: i32) -> Vec<Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for mut lin in 0..total {
        let mut idx = vec![0i64; dim];
        for slot in idx.iter_mut().rev() {
            *slot = (lin % side) as i64 - radius as i64;
            lin /= side;
        }
        out.push(idx);
    }
    out
}
