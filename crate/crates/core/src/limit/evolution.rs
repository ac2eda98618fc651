//! Time evolution of the mean-field marginal hierarchy.
//!
//! In the critical scaling the order-k coefficients decay at rate
//! `λ(2k(k-1) + m_2 Σ n_r²)/2` and are fed by the order-(k-1) trajectory at
//! folded indices with gain `2λ`; in the order regime the decay is
//! `λ k(k-1)` with the same folding (the delta-coupled gain is flat in
//! frequency). Both run on the shared exact solver.

use super::{index_quadratics, LimitError, M2};
use crate::hierarchy::{self, cube_indices, fold_index, HierarchySolution};
use crate::init::InitialFamily;
use crate::spectral::{ExpPolynomial, MultiIndex, SpectralCoefficients};
use crate::C64;
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug)]
enum LimitKind {
    Critical(M2),
    OrderRegime,
}

/// Exact trajectories `f̂_k(n, ·)` of the limit hierarchy.
pub struct LimitMarginalSolution {
    k: usize,
    lambda: f64,
    kind: LimitKind,
    init: InitialFamily,
    sol: HierarchySolution,
}

impl LimitMarginalSolution {
    pub fn order(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn out_radius(&self) -> i32 {
        self.sol.out_radius
    }

    /// `m_2` of the critical-regime solution; `None` for the order regime.
    pub fn m2(&self) -> Option<M2> {
        match self.kind {
            LimitKind::Critical(m2) => Some(m2),
            LimitKind::OrderRegime => None,
        }
    }

    pub fn init(&self) -> &InitialFamily {
        &self.init
    }

    pub fn poly(&self, order: usize, idx: &[i64]) -> Option<&ExpPolynomial> {
        self.sol.poly(order, idx)
    }

    /// Indices whose initial data could not resolve a folding.
    pub fn missing(&self) -> &[(usize, Vec<i64>)] {
        self.sol.missing()
    }

    /// Truncation diagnostic: sup of |f̂_order| on the outer shell at `t`.
    pub fn boundary_sup(&self, order: usize, t: f64) -> f64 {
        self.sol.boundary_sup(order, t)
    }

    /// Evaluate the order-`order` marginal at time `t` on its output cube.
    pub fn eval(&self, order: usize, t: f64) -> Result<SpectralCoefficients, LimitError> {
        let mut c = self.sol.eval(order, t)?;
        c.label = match self.kind {
            LimitKind::Critical(_) => format!("f_{order}"),
            LimitKind::OrderRegime => format!("f_{order}_order_regime"),
        };
        Ok(c)
    }
}

/// Solve the critical-scaling limit hierarchy up to order `k`.
pub fn evolve_limit_marginal(
    init: &InitialFamily,
    m2: M2,
    lambda: f64,
    k: usize,
    out_radius: i32,
) -> Result<LimitMarginalSolution, LimitError> {
    assert!(lambda > 0.0);
    let rate = move |r: usize, idx: &[i64]| {
        let (s, _) = index_quadratics(idx);
        lambda * ((2 * r * (r - 1)) as f64 + m2.value() * s as f64) / 2.0
    };
    let gain = move |_: usize, _: usize, _: usize, _: &[i64]| 2.0 * lambda;
    let sol = hierarchy::evolve(init, k, out_radius, &rate, &gain)?;
    Ok(LimitMarginalSolution {
        k,
        lambda,
        kind: LimitKind::Critical(m2),
        init: init.clone(),
        sol,
    })
}

/// Solve the order-regime hierarchy (`N ε² → 0`) up to order `k`.
pub fn evolve_order_regime(
    init: &InitialFamily,
    lambda: f64,
    k: usize,
    out_radius: i32,
) -> Result<LimitMarginalSolution, LimitError> {
    assert!(lambda > 0.0);
    let rate = move |r: usize, _: &[i64]| lambda * (r * (r - 1)) as f64;
    let gain = move |_: usize, _: usize, _: usize, _: &[i64]| 2.0 * lambda;
    let sol = hierarchy::evolve(init, k, out_radius, &rate, &gain)?;
    Ok(LimitMarginalSolution {
        k,
        lambda,
        kind: LimitKind::OrderRegime,
        init: init.clone(),
        sol,
    })
}

/// Decomposition of one trajectory into transient blocks and the stationary
/// part:
///
/// ```text
///   f̂_k(n, t) = Σ_{h=2}^{k} e^{-λh(h-1)t} b_{h,k}(n, t)
///             + a_k(n) f̂_{1,0}(Σ n_r) e^{-λ m_2 (Σ n_r)² t / 2}.
/// ```
#[derive(Clone, Debug)]
pub struct IndexDecomposition {
    pub index: MultiIndex,
    /// Stationary amplitude `a_k(n)`.
    pub a: f64,
    /// Rate of the stationary factor, `λ m_2 (Σ n_r)² / 2`.
    pub stationary_rate: f64,
    /// Transient blocks keyed by `h`; stored without the `e^{-λh(h-1)t}`
    /// prefactor.
    pub b: BTreeMap<u32, ExpPolynomial>,
    /// Max deviation between the regrouped form and the solved trajectory
    /// over the check grid.
    pub reconstruction_error: f64,
}

pub struct Decomposition {
    pub k: usize,
    pub lambda: f64,
    pub entries: Vec<IndexDecomposition>,
    pub max_reconstruction_error: f64,
}

struct Grouped {
    a: f64,
    b: BTreeMap<u32, ExpPolynomial>,
}

struct Decomposer<'a> {
    m2: M2,
    lambda: f64,
    init: &'a InitialFamily,
    memo: Vec<HashMap<Vec<i64>, Grouped>>,
}

impl Decomposer<'_> {
    fn run(&mut self, k: usize, idx: &[i64]) -> Result<(), LimitError> {
        if k == 1 || self.memo[k - 1].contains_key(idx) {
            return Ok(());
        }
        let (s, t) = index_quadratics(idx);
        let lambda = self.lambda;
        let rho = lambda * ((2 * k * (k - 1)) as f64 + self.m2.value() * s as f64) / 2.0;
        let stripped_rate = lambda * self.m2.value() * s as f64 / 2.0;
        let total: i64 = idx.iter().sum();
        let f10 = self.init.coeff(1, &[total])?;
        let fk0 = self.init.coeff(k, idx)?;

        let mut b: BTreeMap<u32, ExpPolynomial> = BTreeMap::new();
        let mut b_kk = ExpPolynomial::exponential(fk0, stripped_rate);
        let mut child_a_sum = 0.0;
        let mut folded = Vec::with_capacity(k - 1);
        for i in 0..k {
            for j in (i + 1)..k {
                fold_index(idx, i, j, &mut folded);
                self.run(k - 1, &folded)?;
                let (child_a, child_b) = if k == 2 {
                    (1.0, None)
                } else {
                    let g = &self.memo[k - 2][&folded];
                    (g.a, Some(g.b.clone()))
                };
                if let Some(child_b) = child_b {
                    for (h, poly) in child_b {
                        let conv = poly
                            .convolve_decay(rho - lambda * (h * (h - 1)) as f64)
                            .scale(C64::new(2.0 * lambda, 0.0));
                        b.entry(h)
                            .and_modify(|acc| *acc = acc.add(&conv))
                            .or_insert(conv);
                    }
                }
                child_a_sum += child_a;
            }
        }
        let a = if self.m2.is_resonant(k, s, t) {
            b_kk = b_kk.add(&ExpPolynomial::single(
                f10 * 2.0 * lambda * child_a_sum,
                stripped_rate,
                1,
            ));
            0.0
        } else {
            let denom = (2 * k * (k - 1)) as f64 + self.m2.value() * (s - t) as f64;
            let a = 4.0 * child_a_sum / denom;
            b_kk = b_kk.add(&ExpPolynomial::exponential(f10 * (-a), stripped_rate));
            a
        };
        b.insert(k as u32, b_kk);
        self.memo[k - 1].insert(idx.to_vec(), Grouped { a, b });
        Ok(())
    }
}

/// Regroup a critical-regime solution into its `a`/`b` decomposition and
/// verify the regrouped form reproduces the solved trajectory on
/// `check_times` (an ungroupable mismatch is an error).
pub fn decompose_ab(
    sol: &LimitMarginalSolution,
    check_times: &[f64],
) -> Result<Decomposition, LimitError> {
    let m2 = match sol.kind {
        LimitKind::Critical(m2) => m2,
        LimitKind::OrderRegime => panic!("decomposition applies to critical-regime solutions"),
    };
    let k = sol.k;
    let lambda = sol.lambda;
    let mut dec = Decomposer {
        m2,
        lambda,
        init: &sol.init,
        memo: (0..k).map(|_| HashMap::new()).collect(),
    };
    let mut entries = Vec::new();
    let mut max_err = 0.0f64;
    for idx in cube_indices(k, sol.out_radius()) {
        let (grouped_a, grouped_b);
        if k == 1 {
            grouped_a = 1.0;
            grouped_b = BTreeMap::new();
        } else {
            dec.run(k, &idx)?;
            let g = &dec.memo[k - 1][&idx];
            grouped_a = g.a;
            grouped_b = g.b.clone();
        }
        let total: i64 = idx.iter().sum();
        let stationary_rate = lambda * m2.value() * (total * total) as f64 / 2.0;
        let f10 = sol.init().coeff(1, &[total])?;

        let mut rebuilt =
            ExpPolynomial::exponential(f10 * grouped_a, stationary_rate);
        for (h, poly) in &grouped_b {
            rebuilt = rebuilt.add(&poly.shift_rate(lambda * (h * (h - 1)) as f64));
        }
        let solved = sol.poly(k, &idx).expect("output cube is materialized");
        let diff = rebuilt.sub(solved);
        let mut err = 0.0f64;
        for &tc in check_times {
            err = err.max(diff.eval(tc).norm());
        }
        if err > 1e-9 {
            return Err(LimitError::Reconstruction {
                index: idx.clone(),
                error: err,
            });
        }
        max_err = max_err.max(err);
        entries.push(IndexDecomposition {
            index: MultiIndex(idx.iter().map(|&n| n as i32).collect()),
            a: grouped_a,
            stationary_rate,
            b: grouped_b,
            reconstruction_error: err,
        });
    }
    Ok(Decomposition {
        k,
        lambda,
        entries,
        max_reconstruction_error: max_err,
    })
}
