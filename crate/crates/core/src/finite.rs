//! Exact finite-N marginal dynamics in Fourier space.
//!
//! The order-k marginal of the N-particle law solves a closed recursion:
//! the homogeneous decay rate at frequency `n` is
//!
//! ```text
//!     (λN/(N-1)) ((N-k) Σ_r (1 - ĝ_ε(n_r)) + k(k-1))
//! ```
//!
//! and each pair `(i, j)` feeds the order-(k-1) trajectory at the folded
//! index with gain `(λN/(N-1)) (ĝ_ε(n_i) + ĝ_ε(n_j))`. The coefficients
//! `ĝ_ε(n)` are precomputed on the full range the foldings can reach, so the
//! recursion itself never touches quadrature.

use crate::hierarchy::{self, HierarchySolution};
use crate::init::InitialFamily;
use crate::interaction::{InteractionError, InteractionGenerator, ScalingSchedule};
use crate::limit::{LimitError, LimitMarginalSolution};
use crate::spectral::{ExpPolynomial, MultiIndex, SpectralCoefficients, SpectralError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiniteError {
    #[error(transparent)]
    Evolve(#[from] crate::hierarchy::EvolveError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("need N >= k+1, got N = {n}, k = {k}")]
    TooFewParticles { n: usize, k: usize },
    #[error("mismatched shapes: {0}")]
    Shape(String),
}

/// Exact trajectories `F̂_{N,k}(n, ·)` for one particle count.
pub struct FiniteMarginalSolution {
    k: usize,
    sched: ScalingSchedule,
    init: InitialFamily,
    g_hat: Vec<f64>,
    sol: HierarchySolution,
}

impl FiniteMarginalSolution {
    pub fn order(&self) -> usize {
        self.k
    }

    pub fn sched(&self) -> &ScalingSchedule {
        &self.sched
    }

    pub fn init(&self) -> &InitialFamily {
        &self.init
    }

    pub fn out_radius(&self) -> i32 {
        self.sol.out_radius
    }

    /// Precomputed `ĝ_ε(|n|)` table used by the rates.
    pub fn g_hat_at(&self, n: i64) -> f64 {
        self.g_hat[n.unsigned_abs() as usize]
    }

    pub fn poly(&self, order: usize, idx: &[i64]) -> Option<&ExpPolynomial> {
        self.sol.poly(order, idx)
    }

    /// Indices whose initial data could not resolve a folding.
    pub fn missing(&self) -> &[(usize, Vec<i64>)] {
        self.sol.missing()
    }

    /// Truncation diagnostic: sup of |F̂_order| on the outer shell at `t`.
    pub fn boundary_sup(&self, order: usize, t: f64) -> f64 {
        self.sol.boundary_sup(order, t)
    }

    pub fn eval(&self, order: usize, t: f64) -> Result<SpectralCoefficients, FiniteError> {
        let mut c = self.sol.eval(order, t)?;
        c.label = format!("F_N{}_{order}", self.sched.n);
        Ok(c)
    }
}

/// Solve the finite-N hierarchy up to order `k` on the cube of radius
/// `out_radius` per order.
pub fn evolve_finite_marginal(
    init: &InitialFamily,
    sched: &ScalingSchedule,
    gen: &InteractionGenerator,
    k: usize,
    out_radius: i32,
) -> Result<FiniteMarginalSolution, FiniteError> {
    if sched.n < k + 1 {
        return Err(FiniteError::TooFewParticles { n: sched.n, k });
    }
    // Folded entries are block sums of at most k output entries.
    let reach = k as i64 * out_radius as i64;
    let mut g_hat = Vec::with_capacity(reach as usize + 1);
    for n in 0..=reach {
        g_hat.push(gen.g_hat(sched.epsilon, n)?);
    }
    let n_part = sched.n as f64;
    let lambda = sched.lambda;
    let table = g_hat.clone();
    let rate = move |r: usize, idx: &[i64]| {
        let fluct: f64 = idx
            .iter()
            .map(|&n| 1.0 - table[n.unsigned_abs() as usize])
            .sum();
        lambda * n_part / (n_part - 1.0) * ((n_part - r as f64) * fluct + (r * (r - 1)) as f64)
    };
    let table = g_hat.clone();
    let gain = move |_: usize, i: usize, j: usize, idx: &[i64]| {
        lambda * n_part / (n_part - 1.0)
            * (table[idx[i].unsigned_abs() as usize] + table[idx[j].unsigned_abs() as usize])
    };
    let sol = hierarchy::evolve(init, k, out_radius, &rate, &gain)?;
    Ok(FiniteMarginalSolution {
        k,
        sched: *sched,
        init: init.clone(),
        g_hat,
        sol,
    })
}

/// One row of the finite-vs-limit gap table.
#[derive(Clone, Debug, Serialize)]
pub struct GapEntry {
    pub index: MultiIndex,
    pub t: f64,
    pub gap: f64,
}

/// Per-index, per-time `|F̂_{N,k} - f̂_k|` over the common cube.
pub fn finite_vs_limit_gap(
    fin: &FiniteMarginalSolution,
    lim: &LimitMarginalSolution,
    t_grid: &[f64],
) -> Result<Vec<GapEntry>, FiniteError> {
    if fin.order() != lim.order() {
        return Err(FiniteError::Shape(format!(
            "orders differ: {} vs {}",
            fin.order(),
            lim.order()
        )));
    }
    if fin.out_radius() != lim.out_radius() {
        return Err(FiniteError::Shape(format!(
            "truncation radii differ: {} vs {}",
            fin.out_radius(),
            lim.out_radius()
        )));
    }
    let k = fin.order();
    let mut out = Vec::new();
    for idx in hierarchy::cube_indices(k, fin.out_radius()) {
        let fp = fin.poly(k, &idx).expect("cube materialized");
        let lp = lim.poly(k, &idx).expect("cube materialized");
        for &t in t_grid {
            out.push(GapEntry {
                index: MultiIndex(idx.iter().map(|&n| n as i32).collect()),
                t,
                gap: (fp.eval(t) - lp.eval(t)).norm(),
            });
        }
    }
    Ok(out)
}

/// Convenience: the matching critical-regime limit solution for a finite one.
pub fn matching_limit(
    fin: &FiniteMarginalSolution,
    gen: &InteractionGenerator,
) -> Result<LimitMarginalSolution, LimitError> {
    crate::limit::evolve_limit_marginal(
        fin.init(),
        gen.m2_exact(),
        fin.sched().lambda,
        fin.order(),
        fin.out_radius(),
    )
}
