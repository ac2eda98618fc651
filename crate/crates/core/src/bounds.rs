//! Explicit constants and inequality verdicts for the convergence theory:
//! moment-tail thresholds, the frequency-split schedule, the level-set
//! machinery entering the initial-data terms, the quadratic-sum lemma, and
//! evaluators comparing exact trajectories against the proved bounds.
//!
//! Inequalities are only asserted when the particle count clears every
//! explicit threshold; below that the reports are still evaluated but
//! labelled informational, since desk-scale `N` often sits under the
//! theorem-grade constants.

use crate::finite::FiniteMarginalSolution;
use crate::interaction::{InteractionError, InteractionGenerator, ScalingSchedule};
use crate::limit::{
    b_bound_constants, ell_bounds, ell_products, LimitMarginalSolution, StationaryHierarchy,
};
use crate::spectral::{fmt_float, permutations, MultiIndex};
use crate::{hierarchy, init::InitError};
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("level-set order r = {r} out of range 1..={k}")]
    LevelSetOrder { r: usize, k: usize },
    #[error("invalid composition or permutation: {0}")]
    BadMap(String),
    #[error("moment order must be >= 3, got {0}")]
    MomentOrder(u32),
    #[error("bound evaluation requires t > 0, got {0}")]
    NonPositiveTime(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Init(#[from] InitError),
}

/// All ordered tuples of positive integers of length `r` summing to `k`.
pub fn level_sets(k: usize, r: usize) -> Result<Vec<Vec<usize>>, BoundsError> {
    if r < 1 || r > k {
        return Err(BoundsError::LevelSetOrder { r, k });
    }
    fn rec(k: usize, r: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if r == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=(k - r + 1) {
            prefix.push(first);
            rec(k - first, r - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Block-sum map `s_p^σ`: consecutive block sums of the σ-permuted entries.
pub fn s_map(p: &[usize], sigma: &[usize], n: &[i64]) -> Result<Vec<i64>, BoundsError> {
    let k = n.len();
    if sigma.len() != k {
        return Err(BoundsError::BadMap(format!(
            "permutation length {} != {k}",
            sigma.len()
        )));
    }
    let mut hit = vec![false; k];
    for &s in sigma {
        if s >= k || hit[s] {
            return Err(BoundsError::BadMap("not a permutation".into()));
        }
        hit[s] = true;
    }
    if p.iter().sum::<usize>() != k || p.iter().any(|&b| b == 0) {
        return Err(BoundsError::BadMap(format!("{p:?} is not a composition of {k}")));
    }
    let mut out = Vec::with_capacity(p.len());
    let mut pos = 0usize;
    for &block in p {
        let mut sum = 0i64;
        for m in pos..pos + block {
            sum += n[sigma[m]];
        }
        out.push(sum);
        pos += block;
    }
    Ok(out)
}

/// `ζ(3/2)` to better than 1e-12 (Euler–Maclaurin tail), computed once.
pub fn zeta_three_halves() -> f64 {
    static ZETA: OnceLock<f64> = OnceLock::new();
    *ZETA.get_or_init(|| {
        let cutoff = 10_000u64;
        let mut sum = 0.0;
        for n in 1..cutoff {
            sum += (n as f64).powf(-1.5);
        }
        let m = cutoff as f64;
        sum + 2.0 / m.sqrt() + 0.5 * m.powf(-1.5) + 0.125 * m.powf(-2.5)
    })
}

/// Verdict of the quadratic-sum lemma check for one `(m, K)` and a sample of
/// integer pairs `(A, B)`.
#[derive(Clone, Debug, Serialize)]
pub struct QuadraticSumCheck {
    pub m: f64,
    pub k_shift: i64,
    pub bound: f64,
    /// Largest truncated sum over the sampled pairs, tail estimate included.
    pub brute_sup: f64,
    pub per_pair: Vec<((i64, i64), f64)>,
    pub pass: bool,
}

/// Bound of the lemma: `Σ_n 1/|m(n²+An+B)+K| ≤ branch(K, m) + (16/m) ζ(3/2)`
/// uniformly in `(A, B)`, checked against brute-force sums truncated at
/// `|n| ≤ 10^6` with the analytic `2/(m·10^6)` tail folded in.
pub fn quadratic_sum_bound(m: f64, k_shift: i64, ab_samples: &[(i64, i64)]) -> QuadraticSumCheck {
    assert!(m > 0.0);
    let ratio = k_shift as f64 / m;
    let branch = if (ratio - ratio.round()).abs() < 1e-12 * ratio.abs().max(1.0) {
        6.0 / m
    } else {
        let floor = ratio.floor();
        let below = k_shift as f64 - m * floor;
        let above = m * (floor + 1.0) - k_shift as f64;
        6.0 / below.min(above)
    };
    let bound = branch + 16.0 / m * zeta_three_halves();

    const RADIUS: i64 = 1_000_000;
    let tail = 2.0 / (m * RADIUS as f64);
    let mut per_pair = Vec::with_capacity(ab_samples.len());
    let mut brute_sup = 0.0f64;
    for &(a, b) in ab_samples {
        let mut sum = 0.0;
        for n in -RADIUS..=RADIUS {
            let x = (n * n + a * n + b) as f64;
            let denom = m * x + k_shift as f64;
            if denom.abs() <= 1e-9 * m.max(1.0) {
                continue;
            }
            sum += 1.0 / denom.abs();
        }
        sum += tail;
        brute_sup = brute_sup.max(sum);
        per_pair.push(((a, b), sum));
    }
    QuadraticSumCheck {
        m,
        k_shift,
        bound,
        brute_sup,
        pass: brute_sup <= bound,
        per_pair,
    }
}

/// Which explicit thresholds the supplied `N` clears.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub required: f64,
    pub n: usize,
    pub all_met: bool,
    pub pieces: Vec<(String, f64)>,
}

/// Every named constant of the quantitative convergence bounds for one
/// `(generator, schedule, order, moment order)`.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsLedger {
    pub n: usize,
    pub k: usize,
    pub l: u32,
    pub lambda: f64,
    pub epsilon: f64,
    pub m2: f64,
    pub m_l: f64,
    pub q: f64,
    pub lp_norm: f64,
    pub tau_n: f64,
    /// Frequency-split schedule `α_N = N^{-1/(2+min(⌊l/2⌋,2))}`.
    pub alpha_n: f64,
    pub kappa: u32,
    pub n0: f64,
    pub n1: f64,
    pub frak_n0: f64,
    pub gamma: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub c1: f64,
    /// `c_2` of the step producing this order (absent for k = 1).
    pub c2: Option<f64>,
    pub c3: f64,
    pub c4: f64,
    pub ell: Vec<f64>,
    pub ell_products: Vec<f64>,
    /// Transient bounds `C_2..C_k` (empty for k = 1).
    pub b_bounds: Vec<f64>,
    /// `𝔠_1..𝔠_k`.
    pub frak_c: Vec<f64>,
    /// `𝒞_k = (k²+k+3) 𝔠_k`.
    pub big_c: f64,
    /// `𝒟_1..𝒟_k`.
    pub d: Vec<f64>,
    pub thresholds: ThresholdReport,
}

fn exp_int(base: f64, e: f64) -> f64 {
    base.powf(e)
}

/// Assemble the ledger. Needs `l >= 3`; the generator must be in `L^p` for
/// the configured `p > 1` (all built-ins are).
pub fn constants_ledger(
    gen: &InteractionGenerator,
    sched: &ScalingSchedule,
    k: usize,
    l: u32,
) -> Result<ConstantsLedger, BoundsError> {
    if l < 3 {
        return Err(BoundsError::MomentOrder(l));
    }
    let pi = std::f64::consts::PI;
    let e = std::f64::consts::E;
    let nf = sched.n as f64;
    let m2 = gen.m2();
    let m_l = gen.moment(l);
    let q = gen.holder_q();
    let norm = gen.lp_norm();
    let m2_exact = gen.m2_exact();

    let gen_l = gen.clone().with_moment_order(l);
    let tau_n = gen_l.tau(sched.epsilon)?;

    let half_l_capped = ((l / 2).min(2)) as f64;
    let alpha_n = nf.powf(-1.0 / (2.0 + half_l_capped));
    let kappa = if l == 3 { 3 } else { 2 };

    let root_ml = (4.0 * m_l).powf(1.0 / l as f64);
    let pi_l = pi.powi(l as i32);
    let n_decay = nf.powf((2.0 - l as f64) / 2.0);

    let (e1, e2, e3, c1, zeta_c) = if l == 3 {
        let m3 = gen.moment(3);
        let e1 = 4.0 * (12.0 * m_l * n_decay + pi_l * m3 * alpha_n) / (3.0 * pi_l * m2 * e);
        let e2 = 8.0 * (12.0 * k as f64 * m_l * n_decay + pi_l * m3 * alpha_n)
            / (3.0 * pi_l * m2 * e);
        let e3 = (24.0 * k as f64 * m_l * n_decay + 2.0 * pi_l * m3 * alpha_n + 3.0 * pi_l * m2)
            / (6.0 * pi_l);
        let c1 = 4.0 * (12.0 * m_l).max(pi_l * m3) / (3.0 * pi_l * m2 * e);
        let zeta_c = (24.0 * m_l).max(2.0 * pi_l * m3).max(3.0 * pi_l * m2) / (6.0 * pi_l);
        (e1, e2, e3, c1, zeta_c)
    } else {
        let m4 = gen.moment(4);
        let a2 = alpha_n * alpha_n;
        let e1 = (48.0 * m_l * n_decay + pi_l * m4 * a2) / (3.0 * pi_l * m2 * e);
        let e2 = 2.0 * (48.0 * k as f64 * m_l * n_decay + pi_l * m4 * a2) / (3.0 * pi_l * m2 * e);
        let e3 = (96.0 * k as f64 * m_l * n_decay + 2.0 * pi_l * m4 * a2 + 12.0 * pi_l * m2)
            / (24.0 * pi_l);
        let c1 = (48.0 * m_l).max(pi_l * m4) / (3.0 * pi_l * m2 * e);
        let zeta_c = (96.0 * m_l).max(2.0 * pi_l * m4).max(12.0 * pi_l * m2) / (24.0 * pi_l);
        (e1, e2, e3, c1, zeta_c)
    };

    let c3 = (2.0 * c1)
        .max(32.0 / (e * e))
        .max(2.0 * m2 / e)
        .max(16.0 * m2 * m2 / (e * e));
    let c4 = zeta_c
        .max(192.0 * c1 / m2)
        .max(16.0 / e)
        .max(256.0 / (m2 * e * e))
        .max(128.0 * m2 / (e * e))
        .max(2.0);
    let four_pow = 4.0f64.powf(2.0 * (q + 2.0) + 1.0);
    let freq_block = four_pow * norm.powf(2.0 * q) * (root_ml + 2.0 * pi).powi(2) / (pi * pi);
    let c2_of = |step_k: usize| (2 + step_k * (step_k + 1)) as f64 * freq_block + 8.0 / m2;
    let c2 = (k >= 2).then(|| c2_of(k - 1));

    let mut frak_c = Vec::with_capacity(k);
    frak_c.push(c1);
    for step in 1..k {
        let next = c2_of(step) + c3 + c4 + 2.0 * frak_c[step - 1] + freq_block + 4.0 / m2;
        frak_c.push(next);
    }
    let big_c = (k * k + k + 3) as f64 * frak_c[k - 1];

    let gamma = (pi * pi
        / (2.0
            * 4.0f64.powf(2.0 * (q + 2.0))
            * norm.powf(2.0 * q)
            * (root_ml + 2.0 * pi).powi(2)))
    .min(m2 / 2.0);

    let n0 = (exp_int(2.0 * m_l, l as f64 / 2.0) / (pi * pi))
        .max(exp_int(32.0 * m_l / (pi_l * 8.0f64.max(m2)), 2.0 / (l as f64 - 2.0)));
    let n1 = n0
        .max((2 * k) as f64)
        .max(exp_int(96.0 * m_l * k as f64 / (pi_l * m2), 2.0 / (l as f64 - 2.0)));

    let alpha_cap = if l == 3 {
        let m3 = gen.moment(3);
        exp_int(
            (4.0f64.powf(q + 1.0) * norm.powf(q)).min(m2 / (8.0 * m3)).min(1.0),
            -3.0,
        )
    } else {
        let m4 = gen.moment(4);
        exp_int(
            (4.0f64.powf(q + 1.0) * norm.powf(q))
                .min((m2 / (2.0 * m4)).sqrt())
                .min(1.0),
            -4.0,
        )
    };
    let extra = 4.0f64.powf(2.0 * (q + 3.0)) * m_l * norm.powf(2.0 * q) * (root_ml + 2.0 * pi).powi(2)
        / pi.powi(l as i32 + 2);
    let extra_exponent = 1.0 / (l as f64 / 2.0 - 2.0 / (2.0 + half_l_capped));
    let frak_n0 = exp_int(extra, extra_exponent).max(alpha_cap);

    let ell = ell_bounds(k, &m2_exact);
    let ell_prods = ell_products(k, &m2_exact);
    let b_bounds = if k >= 2 {
        b_bound_constants(k, &m2_exact)
    } else {
        Vec::new()
    };
    let d: Vec<f64> = (1..=k)
        .map(|r| {
            let transient = if r >= 2 { b_bounds[r - 2] } else { 0.0 };
            transient.max(ell_prods[r - 1])
        })
        .collect();

    let required = frak_n0.max(n1);
    let pieces = vec![
        ("frak_n0".to_string(), frak_n0),
        ("moment_tail_n0".to_string(), n0),
        ("two_k".to_string(), (2 * k) as f64),
        ("n1".to_string(), n1),
    ];
    let thresholds = ThresholdReport {
        required,
        n: sched.n,
        all_met: nf >= required,
        pieces,
    };

    Ok(ConstantsLedger {
        n: sched.n,
        k,
        l,
        lambda: sched.lambda,
        epsilon: sched.epsilon,
        m2,
        m_l,
        q,
        lp_norm: norm,
        tau_n,
        alpha_n,
        kappa,
        n0,
        n1,
        frak_n0,
        gamma,
        e1,
        e2,
        e3,
        c1,
        c2,
        c3,
        c4,
        ell,
        ell_products: ell_prods,
        b_bounds,
        frak_c,
        big_c,
        d,
        thresholds,
    })
}

/// One evaluated inequality.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub index: MultiIndex,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub slack: f64,
}

/// Inequality report for one theorem evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub constants: ConstantsLedger,
    pub checks: Vec<BoundCheck>,
    /// True when the hypotheses (N thresholds) were not met, so the theorem
    /// makes no assertion and failures are not defects.
    pub informational: bool,
    pub pass: bool,
}

impl BoundReport {
    /// Flat CSV view: `index,t,lhs,rhs,slack,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,t,lhs,rhs,slack,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.index,
                fmt_float(c.t),
                fmt_float(c.lhs),
                fmt_float(c.rhs),
                fmt_float(c.slack),
                c.pass
            ));
        }
        out
    }
}

fn long_time_envelope(lambda: f64, m2: f64, t: f64) -> f64 {
    let decay = (-2.0 * lambda * t).exp();
    decay / (1.0 - decay) + (-lambda * m2 * t / 2.0).exp()
}

/// Check `|f̂_k(t) - f̂_{k,∞}| ≤ 𝒟_k (e^{-2λt}/(1-e^{-2λt}) + e^{-λm_2t/2})`
/// over the solution's output cube. `t = 0` is excluded (singular envelope).
pub fn limit_distance_check(
    lim: &LimitMarginalSolution,
    hier: &StationaryHierarchy,
    ledger: &ConstantsLedger,
    t_grid: &[f64],
) -> Result<BoundReport, BoundsError> {
    let k = lim.order();
    if hier.max_order() < k {
        return Err(BoundsError::Shape(format!(
            "hierarchy holds {} orders, need {k}",
            hier.max_order()
        )));
    }
    if hier.order(k).f_infty.n_max() < lim.out_radius() {
        return Err(BoundsError::Shape(
            "stationary tensor radius below solution radius".into(),
        ));
    }
    for &t in t_grid {
        if t <= 0.0 {
            return Err(BoundsError::NonPositiveTime(t));
        }
    }
    let d_k = ledger.d[k - 1];
    let lambda = lim.lambda();
    let m2 = ledger.m2;
    let mut checks = Vec::new();
    let mut pass = true;
    for idx in hierarchy::cube_indices(k, lim.out_radius()) {
        let small: Vec<i32> = idx.iter().map(|&n| n as i32).collect();
        let stat = hier.order(k).f_infty.get(&small).unwrap();
        let poly = lim.poly(k, &idx).expect("cube materialized");
        for &t in t_grid {
            let lhs = (poly.eval(t) - stat).norm();
            let rhs = d_k * long_time_envelope(lambda, m2, t);
            let ok = lhs <= rhs;
            pass &= ok;
            checks.push(BoundCheck {
                index: MultiIndex(small.clone()),
                t,
                lhs,
                rhs,
                pass: ok,
                slack: rhs - lhs,
            });
        }
    }
    Ok(BoundReport {
        constants: ledger.clone(),
        checks,
        informational: false,
        pass,
    })
}

/// Check the full quantitative bound
/// `|F̂_{N,k}(t) - f̂_{k,∞}|` against initial gaps, the level-set max term,
/// the high-frequency decay `2e^{-λk(k-1)t} e^{-λγ N^{1/κ} t}`, the
/// `𝒞_k N^{-1/κ}` offset and the long-time envelope.
pub fn finite_distance_check(
    fin: &FiniteMarginalSolution,
    lim: &LimitMarginalSolution,
    hier: &StationaryHierarchy,
    ledger: &ConstantsLedger,
    t_grid: &[f64],
) -> Result<BoundReport, BoundsError> {
    let k = fin.order();
    if lim.order() != k || ledger.k != k {
        return Err(BoundsError::Shape(
            "finite solution, limit solution and ledger must share one order".into(),
        ));
    }
    if hier.max_order() < k || hier.order(k).f_infty.n_max() < fin.out_radius() {
        return Err(BoundsError::Shape(
            "stationary tensor does not cover the finite solution".into(),
        ));
    }
    for &t in t_grid {
        if t <= 0.0 {
            return Err(BoundsError::NonPositiveTime(t));
        }
    }
    let nf = ledger.n as f64;
    let lambda = ledger.lambda;
    let ratio_pow = (nf / (nf - 1.0)).powi(k as i32 - 1);
    let n_root = nf.powf(1.0 / ledger.kappa as f64);
    let perms = permutations(k);
    let mut checks = Vec::new();
    let mut pass = true;
    for idx in hierarchy::cube_indices(k, fin.out_radius()) {
        let small: Vec<i32> = idx.iter().map(|&n| n as i32).collect();
        let stat = hier.order(k).f_infty.get(&small).unwrap();

        let init_gap = (fin.init().coeff(k, &idx)? - lim.init().coeff(k, &idx)?).norm();
        let mut level_max = 0.0f64;
        for r in 1..k {
            for p in level_sets(k, r)? {
                for sigma in &perms {
                    let s = s_map(&p, sigma, &idx)?;
                    let gap = (fin.init().coeff(r, &s)? - lim.init().coeff(r, &s)?).norm();
                    level_max = level_max.max(gap);
                }
            }
        }
        let init_terms = init_gap + ratio_pow * (k as f64 - 1.0) * level_max;

        let poly = fin.poly(k, &idx).expect("cube materialized");
        for &t in t_grid {
            let lhs = (poly.eval(t) - stat).norm();
            let rhs = init_terms
                + 2.0 * (-lambda * (k * (k - 1)) as f64 * t).exp()
                    * (-lambda * ledger.gamma * n_root * t).exp()
                + ledger.big_c / n_root
                + ledger.d[k - 1] * long_time_envelope(lambda, ledger.m2, t);
            let ok = lhs <= rhs;
            pass &= ok;
            checks.push(BoundCheck {
                index: MultiIndex(small.clone()),
                t,
                lhs,
                rhs,
                pass: ok,
                slack: rhs - lhs,
            });
        }
    }
    let informational = !ledger.thresholds.all_met;
    Ok(BoundReport {
        constants: ledger.clone(),
        checks,
        informational,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{InitialFamily, OneDimFamily};
    use crate::limit::{evolve_limit_marginal, stationary_hierarchy, M2};

    #[test]
    fn zeta_value() {
        assert!((zeta_three_halves() - 2.612375348685488).abs() < 1e-12);
    }

    #[test]
    fn level_set_shapes() {
        assert_eq!(level_sets(4, 4).unwrap(), vec![vec![1, 1, 1, 1]]);
        assert_eq!(level_sets(3, 2).unwrap(), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(level_sets(4, 2).unwrap().len(), 3);
        assert!(level_sets(3, 4).is_err());
    }

    #[test]
    fn s_map_block_sums() {
        let id = [0usize, 1, 2];
        assert_eq!(s_map(&[2, 1], &id, &[1, 2, 3]).unwrap(), vec![3, 3]);
        assert_eq!(s_map(&[3], &id, &[1, 2, 3]).unwrap(), vec![6]);
        let sigma = [2usize, 0, 1];
        assert_eq!(s_map(&[1, 1, 1], &sigma, &[1, 2, 3]).unwrap(), vec![3, 1, 2]);
        assert!(s_map(&[2, 2], &id, &[1, 2, 3]).is_err());
    }

    #[test]
    fn quadratic_sum_spec_examples() {
        // m = 1, K = 0, A = B = 0: Σ 1/n² = π²/3 under 6 + 16 ζ(3/2).
        let check = quadratic_sum_bound(1.0, 0, &[(0, 0)]);
        let pi2_3 = std::f64::consts::PI.powi(2) / 3.0;
        assert!((check.per_pair[0].1 - pi2_3).abs() < 1e-5);
        assert!(check.pass);
        assert!((check.bound - (6.0 + 16.0 * zeta_three_halves())).abs() < 1e-12);
        // m = 2, K = 1: non-integer branch, bound 6/min(1,1) + 8 ζ(3/2).
        let check = quadratic_sum_bound(2.0, 1, &[(3, -7)]);
        assert!((check.bound - (6.0 + 8.0 * zeta_three_halves())).abs() < 1e-12);
        assert!((check.bound - 26.899).abs() < 5e-3);
        assert!(check.pass);
    }

    #[test]
    fn quadratic_sum_randomized_sweep() {
        let mut state = 0xDEADBEEFu64;
        let mut next = move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            state.wrapping_mul(0x2545F4914F6CDD1D)
        };
        let ms = [0.5, 1.0, 1.5, 2.0, 0.25];
        for trial in 0..20 {
            let m = ms[trial % ms.len()];
            let k_shift = (next() % 21) as i64 - 10;
            let a = (next() % 101) as i64 - 50;
            let b = (next() % 101) as i64 - 50;
            let check = quadratic_sum_bound(m, k_shift, &[(a, b)]);
            assert!(
                check.pass,
                "violation: m={m} K={k_shift} A={a} B={b}: {} > {}",
                check.brute_sup, check.bound
            );
        }
    }

    #[test]
    fn ledger_pins_kappa_and_d1() {
        let gen = InteractionGenerator::uniform();
        let sched = ScalingSchedule::critical(1024, 1.0);
        let ledger = constants_ledger(&gen, &sched, 1, 4).unwrap();
        assert_eq!(ledger.kappa, 2);
        let ledger3 = constants_ledger(&gen, &sched, 1, 3).unwrap();
        assert_eq!(ledger3.kappa, 3);
        // m2 = 1: D_1 = max(0, ℓ_1) = 1.
        let gen_m2_one = InteractionGenerator::laplace((0.5f64).sqrt());
        assert!((gen_m2_one.m2() - 1.0).abs() < 1e-12);
        let ledger = constants_ledger(&gen_m2_one, &sched, 1, 4).unwrap();
        assert!((ledger.d[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ledger_monotonicity() {
        let gen = InteractionGenerator::uniform();
        // 𝔠_k strictly increasing in k.
        let sched = ScalingSchedule::critical(1024, 1.0);
        let ledger = constants_ledger(&gen, &sched, 4, 4).unwrap();
        for w in ledger.frak_c.windows(2) {
            assert!(w[1] > w[0]);
        }
        // τ_N decreasing in N.
        let mut prev = f64::INFINITY;
        for &n in &[64usize, 256, 1024, 4096] {
            let s = ScalingSchedule::critical(n, 1.0);
            let tau = constants_ledger(&gen, &s, 1, 4).unwrap().tau_n;
            assert!(tau < prev);
            prev = tau;
        }
        // 𝒟_k nondecreasing in k when m2 <= 4.
        for m2 in [0.5f64, 1.0, 2.0, 4.0] {
            let g = InteractionGenerator::laplace((m2 / 2.0).sqrt());
            let ledger = constants_ledger(&g, &sched, 4, 4).unwrap();
            for w in ledger.d.windows(2) {
                assert!(w[1] >= w[0], "m2 = {m2}: {:?}", ledger.d);
            }
        }
    }

    #[test]
    fn ledger_constants_positive_and_finite() {
        for gen in [InteractionGenerator::uniform(), InteractionGenerator::gaussian(1.0)] {
            let sched = ScalingSchedule::critical(256, 1.0);
            for l in [3u32, 4] {
                let ledger = constants_ledger(&gen, &sched, 3, l).unwrap();
                for v in [
                    ledger.tau_n,
                    ledger.alpha_n,
                    ledger.gamma,
                    ledger.e1,
                    ledger.e2,
                    ledger.e3,
                    ledger.c1,
                    ledger.c2.unwrap(),
                    ledger.c3,
                    ledger.c4,
                    ledger.big_c,
                    ledger.frak_n0,
                ] {
                    assert!(v.is_finite() && v > 0.0, "l={l}: {ledger:?}");
                }
            }
        }
    }

    #[test]
    fn limit_distance_bound_small_case() {
        let m2 = M2::rational(1, 1);
        let gen = InteractionGenerator::laplace((0.5f64).sqrt());
        let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
        let lim = evolve_limit_marginal(&init, m2, 1.0, 2, 6).unwrap();
        let hier = stationary_hierarchy(2, m2, Some(&[16, 8])).unwrap();
        let sched = ScalingSchedule::critical(256, 1.0);
        let ledger = constants_ledger(&gen, &sched, 2, 4).unwrap();
        let report = limit_distance_check(&lim, &hier, &ledger, &[0.5, 1.0, 2.0, 5.0]).unwrap();
        assert!(report.pass, "{:#?}", report.checks.iter().filter(|c| !c.pass).take(3).collect::<Vec<_>>());
        assert!(limit_distance_check(&lim, &hier, &ledger, &[0.0]).is_err());
    }

    #[test]
    fn zero_sum_distance_decays_at_the_transient_rate() {
        // On the zero-sum plane the stationary part cancels; the observed
        // log-slope of |f̂_2(t) - f̂_{2,∞}| is at least 2λ.
        let m2 = M2::rational(1, 1);
        let lambda = 1.0;
        let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
        let lim = evolve_limit_marginal(&init, m2, lambda, 2, 4).unwrap();
        let hier = stationary_hierarchy(2, m2, Some(&[8, 8])).unwrap();
        let stat = hier.order(2).f_infty.get(&[2, -2]).unwrap();
        let lhs = |t: f64| (lim.poly(2, &[2, -2]).unwrap().eval(t) - stat).norm();
        let (t0, t1) = (2.0, 5.0);
        let slope = -(lhs(t1).ln() - lhs(t0).ln()) / (t1 - t0);
        assert!(slope >= 2.0 * lambda - 1e-6, "observed rate {slope}");
    }

    #[test]
    fn finite_distance_bound_small_case() {
        let gen = InteractionGenerator::uniform();
        let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
        let sched = ScalingSchedule::critical(1024, 1.0);
        let fin = crate::finite::evolve_finite_marginal(&init, &sched, &gen, 1, 4).unwrap();
        let lim = evolve_limit_marginal(&init, gen.m2_exact(), 1.0, 1, 4).unwrap();
        let hier = stationary_hierarchy(1, gen.m2_exact(), Some(&[8])).unwrap();
        let ledger = constants_ledger(&gen, &sched, 1, 4).unwrap();
        let report = finite_distance_check(&fin, &lim, &hier, &ledger, &[0.5, 1.0, 3.0]).unwrap();
        // Identical initial data: the gap terms vanish; thresholds met at
        // N = 1024 for the uniform generator, so the verdict is asserted.
        assert!(!report.informational);
        assert!(report.pass);
        // RHS monotone decreasing in N at fixed (k, n, t).
        let mut prev = f64::INFINITY;
        for &n in &[256usize, 1024, 4096] {
            let s = ScalingSchedule::critical(n, 1.0);
            let ledger = constants_ledger(&gen, &s, 1, 4).unwrap();
            let f = crate::finite::evolve_finite_marginal(&init, &s, &gen, 1, 2).unwrap();
            let l = evolve_limit_marginal(&init, gen.m2_exact(), 1.0, 1, 2).unwrap();
            let h = stationary_hierarchy(1, gen.m2_exact(), Some(&[4])).unwrap();
            let report = finite_distance_check(&f, &l, &h, &ledger, &[1.0]).unwrap();
            let rhs = report
                .checks
                .iter()
                .find(|c| c.index.entries() == [1] && c.t == 1.0)
                .unwrap()
                .rhs;
            assert!(rhs < prev);
            prev = rhs;
        }
    }
}
