//! Construction and detection of chaotic, ordered and partially ordered
//! coefficient families.
//!
//! A partially ordered family is described per order `k` by a leader law
//! `η_k` on the circle and an even, symmetric deviation measure `ν_{k-1}`
//! on the (k-1)-torus; the order-k marginal then factorizes as
//!
//! ```text
//!     μ̂_k(n) = (η̂_k(Σ_j n_j) / k) Σ_l ν̂_{k-1}(n_1,…,ñ_l,…,n_k).
//! ```
//!
//! The detector verifies a *given* profile; recovering `(η, ν)` from the
//! marginals is an open inverse problem and out of scope.

use crate::limit::StationaryHierarchy;
use crate::spectral::{MultiIndex, SpectralCoefficients, SpectralError};
use crate::C64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PartialOrderError {
    #[error("profile supplies no order {0}")]
    MissingOrder(usize),
    #[error("profile eta of order {k} cannot resolve frequency sum {sum} (radius {radius})")]
    EtaRange { k: usize, sum: i64, radius: i32 },
    #[error("profile nu of order {k} has dimension {got}, expected {expected}")]
    NuDimension {
        k: usize,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Per-order component of a partially ordered profile.
#[derive(Clone, Debug)]
pub struct ProfileOrder {
    pub k: usize,
    /// Leader law `η̂_k` (dimension 1).
    pub eta: SpectralCoefficients,
    /// Deviation coefficients `ν̂_{k-1}` (dimension k-1); absent for k = 1.
    pub nu: Option<SpectralCoefficients>,
}

/// A family `{(η_k, ν_{k-1})}` up to some maximal order.
#[derive(Clone, Debug)]
pub struct PartialOrderProfile {
    pub orders: Vec<ProfileOrder>,
}

impl PartialOrderProfile {
    pub fn order(&self, k: usize) -> Result<&ProfileOrder, PartialOrderError> {
        self.orders
            .iter()
            .find(|o| o.k == k)
            .ok_or(PartialOrderError::MissingOrder(k))
    }

    /// The uniform state: `η` uniform, `ν` the uniform product.
    pub fn uniform(k_max: usize, eta_radius: i32, nu_radius: i32) -> Self {
        let orders = (1..=k_max)
            .map(|k| ProfileOrder {
                k,
                eta: SpectralCoefficients::uniform(1, eta_radius),
                nu: (k >= 2).then(|| SpectralCoefficients::uniform(k - 1, nu_radius)),
            })
            .collect();
        Self { orders }
    }

    /// An ordered state: `η = μ_0` and `ν` the product of point masses at
    /// zero (coefficients identically one).
    pub fn ordered(mu0: &SpectralCoefficients, k_max: usize, nu_radius: i32) -> Self {
        assert_eq!(mu0.dim(), 1);
        let orders = (1..=k_max)
            .map(|k| ProfileOrder {
                k,
                eta: mu0.clone(),
                nu: (k >= 2).then(|| {
                    SpectralCoefficients::from_fn(k - 1, nu_radius, |_| C64::new(1.0, 0.0))
                }),
            })
            .collect();
        Self { orders }
    }

    /// The generated stationary state: `η` uniform, `ν_{k-1}` from the
    /// stationary hierarchy.
    pub fn stationary(hier: &StationaryHierarchy, k_max: usize, eta_radius: i32) -> Self {
        assert!(k_max <= hier.max_order() + 1);
        let orders = (1..=k_max)
            .map(|k| ProfileOrder {
                k,
                eta: SpectralCoefficients::uniform(1, eta_radius),
                nu: (k >= 2).then(|| hier.order(k - 1).nu.clone()),
            })
            .collect();
        Self { orders }
    }
}

/// Materialize the factorized order-k marginal of a profile on a cube.
pub fn build_partial_order_marginal(
    profile: &PartialOrderProfile,
    k: usize,
    out_radius: i32,
) -> Result<SpectralCoefficients, PartialOrderError> {
    let order = profile.order(k)?;
    assert_eq!(order.eta.dim(), 1);
    if k == 1 {
        let mut out = SpectralCoefficients::try_from_fn(1, out_radius, |idx| {
            order.eta.value(idx).map_err(|_| PartialOrderError::EtaRange {
                k,
                sum: idx[0] as i64,
                radius: order.eta.n_max(),
            })
        })?;
        out.label = "partial_order_marginal_1".into();
        return Ok(out);
    }
    let nu = order.nu.as_ref().ok_or(PartialOrderError::MissingOrder(k))?;
    if nu.dim() != k - 1 {
        return Err(PartialOrderError::NuDimension {
            k,
            got: nu.dim(),
            expected: k - 1,
        });
    }
    let mut reduced = vec![0i32; k - 1];
    let mut out = SpectralCoefficients::try_from_fn(k, out_radius, |idx| {
        let sum: i64 = idx.iter().map(|&n| n as i64).sum();
        if sum.unsigned_abs() > order.eta.n_max() as u64 {
            return Err(PartialOrderError::EtaRange {
                k,
                sum,
                radius: order.eta.n_max(),
            });
        }
        let eta = order.eta.get(&[sum as i32]).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..k {
            for (slot, &n) in reduced
                .iter_mut()
                .zip(idx.iter().enumerate().filter(|(r, _)| *r != l).map(|(_, n)| n))
            {
                *slot = n;
            }
            acc += nu.value(&reduced)?;
        }
        Ok(eta * acc / k as f64)
    })?;
    out.label = format!("partial_order_marginal_{k}");
    Ok(out)
}

/// Residual of one order in a factorization check.
#[derive(Clone, Debug, Serialize)]
pub struct OrderResidual {
    pub k: usize,
    pub residual: f64,
    pub pass: bool,
}

/// Verdict of [`check_partial_order_factorization`].
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub residuals: Vec<OrderResidual>,
    /// Whether every profile component passed its probability / evenness /
    /// symmetry predicates.
    pub profile_ok: bool,
    pub pass: bool,
}

/// Compare a family of marginals (order = position + 1) against the
/// factorized form a profile generates; sup-norm residual per order.
pub fn check_partial_order_factorization(
    family: &[SpectralCoefficients],
    profile: &PartialOrderProfile,
    tol: f64,
) -> Result<FactorizationReport, PartialOrderError> {
    let mut profile_ok = true;
    for order in &profile.orders {
        profile_ok &= order.eta.check_probability(1e-8).pass;
        if let Some(nu) = &order.nu {
            profile_ok &= nu.check_probability(1e-8).pass
                && nu.check_even(1e-8).pass
                && nu.check_symmetric(1e-8).pass;
        }
    }
    let mut residuals = Vec::new();
    let mut pass = profile_ok;
    for (i, marginal) in family.iter().enumerate() {
        let k = i + 1;
        if marginal.dim() != k {
            return Err(PartialOrderError::NuDimension {
                k,
                got: marginal.dim(),
                expected: k,
            });
        }
        let built = build_partial_order_marginal(profile, k, marginal.n_max())?;
        let residual = marginal.sup_distance(&built)?;
        let ok = residual <= tol;
        pass &= ok;
        residuals.push(OrderResidual {
            k,
            residual,
            pass: ok,
        });
    }
    Ok(FactorizationReport {
        residuals,
        profile_ok,
        pass,
    })
}

/// Push a weak limit `η_∞` through a profile: the new leader law is the
/// convolution `η_∞ ∗ ζ_k` (pointwise product in Fourier), deviations are
/// kept.
pub fn compose_partially_ordered(
    eta_infty: &SpectralCoefficients,
    inner: &PartialOrderProfile,
) -> Result<PartialOrderProfile, PartialOrderError> {
    assert_eq!(eta_infty.dim(), 1);
    let mut orders = Vec::with_capacity(inner.orders.len());
    for order in &inner.orders {
        let radius = eta_infty.n_max().min(order.eta.n_max());
        let eta = SpectralCoefficients::try_from_fn(1, radius, |idx| {
            Ok::<_, PartialOrderError>(eta_infty.value(idx)? * order.eta.value(idx)?)
        })?;
        orders.push(ProfileOrder {
            k: order.k,
            eta,
            nu: order.nu.clone(),
        });
    }
    Ok(PartialOrderProfile { orders })
}

/// One violated decoupling identity.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionViolation {
    pub k: usize,
    pub frequencies: Vec<i64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Verdict of [`decoupled_obstruction_check`].
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    /// Whether the marginal-consistency identities of a decoupled profile
    /// hold for the supplied family.
    pub identities_hold: bool,
    pub violations: Vec<ObstructionViolation>,
    /// When all orders share one `ν`: largest distance of a coefficient from
    /// the set {0, 1} (a decoupled common deviation admits nothing else).
    pub common_nu_binary_defect: Option<f64>,
}

/// Test whether one-dimensional deviations `ν̂_k` (k = 2, 3, …, given as
/// `(k, coefficients)`) are consistent with a decoupled product profile.
pub fn decoupled_obstruction_check(
    nus: &[(usize, SpectralCoefficients)],
    tol: f64,
) -> ObstructionReport {
    let mut violations = Vec::new();
    let nu2 = nus.iter().find(|(k, _)| *k == 2).map(|(_, c)| c);
    for (k, nu_k) in nus {
        let k = *k;
        if k < 2 {
            continue;
        }
        if let Some(nu2) = nu2 {
            let radius = nu2.n_max().min(nu_k.n_max());
            for n in -radius..=radius {
                let v2 = nu2.get(&[n]).unwrap().re;
                let vk = nu_k.get(&[n]).unwrap().re;
                let lhs = k as f64 * v2;
                let rhs = 2.0 * vk + (k as f64 - 2.0) * vk * vk;
                if (lhs - rhs).abs() > tol {
                    violations.push(ObstructionViolation {
                        k,
                        frequencies: vec![n as i64],
                        lhs,
                        rhs,
                    });
                }
            }
        }
        if k >= 3 {
            if let Some(nu3) = nus.iter().find(|(kk, _)| *kk == 3).map(|(_, c)| c) {
                let radius = nu3.n_max().min(nu_k.n_max());
                let sample = radius.min(8);
                for n1 in -sample..=sample {
                    for n2 in -sample..=sample {
                        if (n1 + n2).abs() > radius {
                            continue;
                        }
                        let a3 = nu3.get(&[n1]).unwrap().re;
                        let b3 = nu3.get(&[n2]).unwrap().re;
                        let s3 = nu3.get(&[n1 + n2]).unwrap().re;
                        let ak = nu_k.get(&[n1]).unwrap().re;
                        let bk = nu_k.get(&[n2]).unwrap().re;
                        let sk = nu_k.get(&[n1 + n2]).unwrap().re;
                        let lhs = k as f64 * (a3 * b3 + s3 * (a3 + b3));
                        let rhs =
                            3.0 * (ak * bk + sk * (ak + bk) + (k as f64 - 3.0) * sk * ak * bk);
                        if (lhs - rhs).abs() > tol {
                            violations.push(ObstructionViolation {
                                k,
                                frequencies: vec![n1 as i64, n2 as i64],
                                lhs,
                                rhs,
                            });
                        }
                    }
                }
            }
        }
    }
    // All equal => the common deviation can only have coefficients 0 or 1.
    let mut common = !nus.is_empty();
    for w in nus.windows(2) {
        let radius = w[0].1.n_max().min(w[1].1.n_max());
        for n in -radius..=radius {
            if (w[0].1.get(&[n]).unwrap() - w[1].1.get(&[n]).unwrap()).norm() > tol {
                common = false;
            }
        }
    }
    let common_nu_binary_defect = if common {
        let c = &nus[0].1;
        let mut worst = 0.0f64;
        c.for_each(|_, v| {
            let d = v.re.abs().min((v.re - 1.0).abs()).max(v.im.abs());
            worst = worst.max(d);
        });
        Some(worst)
    } else {
        None
    };
    ObstructionReport {
        identities_hold: violations.is_empty(),
        violations,
        common_nu_binary_defect,
    }
}

/// Witness data for the failure of propagation of partial order.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    /// Frequencies above the threshold where the obstruction quantity is
    /// nonzero; any one of them rules out a decoupled pair representation.
    pub witnesses: Vec<i64>,
    /// `(n, n²·|obstruction(n)|)` rows for the polynomial-growth criterion.
    pub diagnostic: Vec<(i64, f64)>,
}

/// Scan `f̂_{2,0}(n,n) + 2 f̂_{1,0}(2n)/(m_2 n² - 2)` over a frequency range.
pub fn propagation_failure_witness(
    f10: &dyn Fn(i64) -> C64,
    f20: &dyn Fn(i64, i64) -> C64,
    m2: f64,
    n_lo: i64,
    n_hi: i64,
) -> WitnessReport {
    assert!(m2 > 0.0);
    let mut witnesses = Vec::new();
    let mut diagnostic = Vec::new();
    for n in n_lo..=n_hi {
        let nf = n as f64;
        if nf * nf <= 2.0 / m2 {
            continue;
        }
        let quantity = f20(n, n) + f10(2 * n) * 2.0 / (m2 * nf * nf - 2.0);
        let magnitude = quantity.norm();
        if magnitude > 1e-12 {
            witnesses.push(n);
        }
        diagnostic.push((n, nf * nf * magnitude));
    }
    WitnessReport {
        witnesses,
        diagnostic,
    }
}

/// List indices of all marginal orders for report rendering.
pub fn family_indices(family: &[SpectralCoefficients]) -> Vec<Vec<MultiIndex>> {
    family.iter().map(|c| c.indices()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::{stationary_hierarchy, M2};

    #[test]
    fn uniform_profile_builds_uniform_products() {
        let profile = PartialOrderProfile::uniform(3, 16, 4);
        let built = build_partial_order_marginal(&profile, 3, 4).unwrap();
        built.for_each(|idx, v| {
            let expect = if idx.iter().all(|&n| n == 0) { 1.0 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-15);
        });
    }

    #[test]
    fn ordered_profile_builds_ordered_pattern() {
        let mu0 = SpectralCoefficients::from_fn(1, 40, |idx| {
            C64::new(2.0 / (2.0 + (idx[0] * idx[0]) as f64), 0.0)
        });
        let profile = PartialOrderProfile::ordered(&mu0, 3, 8);
        let built = build_partial_order_marginal(&profile, 3, 8).unwrap();
        built.for_each(|idx, v| {
            let s: i64 = idx.iter().map(|&n| n as i64).sum();
            let expect = 2.0 / (2.0 + (s * s) as f64);
            assert!((v.re - expect).abs() < 1e-14);
        });
    }

    #[test]
    fn stationary_profile_reproduces_f_infty() {
        let hier = stationary_hierarchy(2, M2::rational(1, 1), Some(&[16, 8])).unwrap();
        let profile = PartialOrderProfile::stationary(&hier, 3, 64);
        for k in 2..=3 {
            let built = build_partial_order_marginal(&profile, k, 6).unwrap();
            let mut idxbuf = Vec::new();
            built.for_each(|idx, v| {
                idxbuf.clear();
                idxbuf.extend(idx.iter().map(|&n| n as i64));
                let expect = if idxbuf.iter().sum::<i64>() == 0 {
                    // stationary marginal equals a_k on the zero-sum plane
                    crate::limit::ACoefficients::new(M2::rational(1, 1)).eval(&idxbuf)
                } else {
                    0.0
                };
                assert!((v.re - expect).abs() < 1e-10, "k={k} idx={idx:?}");
            });
        }
    }

    #[test]
    fn round_trip_build_then_check_passes() {
        let hier = stationary_hierarchy(2, M2::rational(1, 1), Some(&[32, 8])).unwrap();
        for profile in [
            PartialOrderProfile::uniform(3, 24, 8),
            PartialOrderProfile::stationary(&hier, 3, 64),
        ] {
            let family: Vec<SpectralCoefficients> = (1..=3)
                .map(|k| build_partial_order_marginal(&profile, k, 4).unwrap())
                .collect();
            let report = check_partial_order_factorization(&family, &profile, 1e-12).unwrap();
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn mismatched_profile_fails_the_check() {
        // Chaotic product with a nontrivial factor versus the uniform
        // profile: residual is large.
        let family = vec![
            SpectralCoefficients::from_fn(1, 8, |idx| {
                C64::new(2.0 / (2.0 + (idx[0] * idx[0]) as f64), 0.0)
            }),
            SpectralCoefficients::from_fn(2, 8, |idx| {
                let f = |n: i32| 2.0 / (2.0 + (n * n) as f64);
                C64::new(f(idx[0]) * f(idx[1]), 0.0)
            }),
        ];
        let profile = PartialOrderProfile::uniform(2, 16, 8);
        let report = check_partial_order_factorization(&family, &profile, 1e-8).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn composition_with_uniform_and_point_mass_limits() {
        let inner = PartialOrderProfile::ordered(
            &SpectralCoefficients::from_fn(1, 8, |idx| {
                C64::new(2.0 / (2.0 + (idx[0] * idx[0]) as f64), 0.0)
            }),
            2,
            8,
        );
        // η_∞ uniform: leader law collapses to δ_0 coefficients.
        let uniform = SpectralCoefficients::uniform(1, 8);
        let composed = compose_partially_ordered(&uniform, &inner).unwrap();
        composed.orders[1].eta.for_each(|idx, v| {
            let expect = if idx[0] == 0 { 1.0 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-15);
        });
        // η_∞ a point mass at zero (coefficients all one): unchanged.
        let ones = SpectralCoefficients::from_fn(1, 8, |_| C64::new(1.0, 0.0));
        let composed = compose_partially_ordered(&ones, &inner).unwrap();
        assert_eq!(composed.orders[1].eta, inner.orders[1].eta);
    }

    #[test]
    fn obstruction_identities() {
        // Uniform deviations satisfy the identities.
        let unif = SpectralCoefficients::uniform(1, 8);
        let report = decoupled_obstruction_check(
            &[(2, unif.clone()), (3, unif.clone()), (4, unif)],
            1e-12,
        );
        assert!(report.identities_hold);
        assert!(report.common_nu_binary_defect.unwrap() < 1e-12);

        // ν̂(1) = 1/2 for all k violates the j = 2 identity at k = 3.
        let half = SpectralCoefficients::from_fn(1, 4, |idx| {
            C64::new(if idx[0].abs() == 1 { 0.5 } else if idx[0] == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        let report =
            decoupled_obstruction_check(&[(2, half.clone()), (3, half)], 1e-9);
        assert!(!report.identities_hold);

        // A subgroup indicator family ({0,1}-valued, closed under addition)
        // passes everything.
        let mod3 = SpectralCoefficients::from_fn(1, 9, |idx| {
            C64::new(if idx[0].rem_euclid(3) == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        let report = decoupled_obstruction_check(
            &[(2, mod3.clone()), (3, mod3.clone()), (5, mod3)],
            1e-12,
        );
        assert!(report.identities_hold);
        assert!(report.common_nu_binary_defect.unwrap() < 1e-12);
    }

    #[test]
    fn witness_scan_matches_hand_analysis() {
        // Ordered initial data with μ̂_0(n) = 2/(2+n²), m2 = 1.
        let f10 = |n: i64| C64::new(2.0 / (2.0 + (n * n) as f64), 0.0);
        let f20 = move |a: i64, b: i64| f10(a + b);
        let report = propagation_failure_witness(&f10, &f20, 1.0, -5, 5);
        // Every |n| >= 2 is a witness.
        assert_eq!(report.witnesses, vec![-5, -4, -3, -2, 2, 3, 4, 5]);
        // Engineered cancellation: f̂_{2,0}(n,n) = -2 f̂_{1,0}(2n)/(n²-2).
        let cancel = move |a: i64, b: i64| {
            let n = a;
            debug_assert_eq!(a, b);
            f10(2 * n) * (-2.0) / ((n * n) as f64 - 2.0)
        };
        let report = propagation_failure_witness(&f10, &cancel, 1.0, 2, 6);
        assert!(report.witnesses.is_empty());
    }

    #[test]
    fn witness_diagnostic_tends_to_one_half() {
        let f10 = |n: i64| C64::new(2.0 / (2.0 + (n * n) as f64), 0.0);
        let f20 = move |a: i64, b: i64| f10(a + b);
        let report = propagation_failure_witness(&f10, &f20, 1.0, 1000, 1000);
        let (_, value) = report.diagnostic[0];
        assert!((value - 0.5).abs() < 0.005, "{value}");
    }
}
