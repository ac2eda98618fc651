//! Independent oracle for the marginal recursions: one level of the exact
//! exponential-polynomial solution is checked against adaptive quadrature of
//! the defining time integral, using the already-solved lower order as the
//! integrand.

use clmf::hierarchy::fold_index;
use clmf::init::{InitialFamily, OneDimFamily};
use clmf::interaction::{InteractionGenerator, ScalingSchedule};
use clmf::limit::{evolve_limit_marginal, M2};
use clmf::quad;
use clmf::C64;

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state >> 12;
    *state ^= *state << 25;
    *state ^= *state >> 27;
    state.wrapping_mul(0x2545F4914F6CDD1D)
}

fn random_index(state: &mut u64, k: usize, radius: i64) -> Vec<i64> {
    (0..k)
        .map(|_| (xorshift(state) % (2 * radius as u64 + 1)) as i64 - radius)
        .collect()
}

#[test]
fn limit_recursion_matches_quadrature() {
    let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
    let m2 = M2::rational(1, 1);
    let lambda = 1.0;
    let sol = evolve_limit_marginal(&init, m2, lambda, 3, 5).unwrap();
    let mut state = 0xABCDEF12345u64;
    for k in 2..=3usize {
        let radius = if k == 2 { 5 } else { 3 };
        for _ in 0..12 {
            let idx = random_index(&mut state, k, radius);
            let s: i64 = idx.iter().map(|n| n * n).sum();
            let rho = lambda * ((2 * k * (k - 1)) as f64 + m2.value() * s as f64) / 2.0;
            for &t in &[0.1, 1.0, 5.0] {
                let mut oracle = init.coeff(k, &idx).unwrap() * (-rho * t).exp();
                let mut folded = Vec::new();
                for i in 0..k {
                    for j in (i + 1)..k {
                        fold_index(&idx, i, j, &mut folded);
                        let child = sol.poly(k - 1, &folded).unwrap().clone();
                        let integral = quad::integrate_complex(
                            |u| child.eval(u) * (-rho * (t - u)).exp(),
                            0.0,
                            t,
                            1e-12,
                        )
                        .unwrap();
                        oracle += integral * 2.0 * lambda;
                    }
                }
                let got = sol.poly(k, &idx).unwrap().eval(t);
                assert!(
                    (got - oracle).norm() <= 1e-8,
                    "k={k} idx={idx:?} t={t}: {got} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn finite_recursion_matches_quadrature() {
    let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
    let gen = InteractionGenerator::uniform();
    let sched = ScalingSchedule::critical(16, 1.0);
    let k_max = 2usize;
    let radius = 5;
    let sol = clmf::finite::evolve_finite_marginal(&init, &sched, &gen, k_max, radius).unwrap();
    let nf = 16.0;
    let mut state = 0x5151515151u64;
    for _ in 0..12 {
        let idx = random_index(&mut state, 2, radius as i64);
        let fluct: f64 = idx
            .iter()
            .map(|&n| 1.0 - sol.g_hat_at(n))
            .sum();
        let rho = sched.lambda * nf / (nf - 1.0) * ((nf - 2.0) * fluct + 2.0);
        for &t in &[0.1, 1.0, 5.0] {
            let mut oracle = init.coeff(2, &idx).unwrap() * (-rho * t).exp();
            let mut folded = Vec::new();
            fold_index(&idx, 0, 1, &mut folded);
            let child = sol.poly(1, &folded).unwrap().clone();
            let gain =
                sched.lambda * nf / (nf - 1.0) * (sol.g_hat_at(idx[0]) + sol.g_hat_at(idx[1]));
            let integral = quad::integrate_complex(
                |u| child.eval(u) * (-rho * (t - u)).exp(),
                0.0,
                t,
                1e-12,
            )
            .unwrap();
            oracle += integral * gain;
            let got = sol.poly(2, &idx).unwrap().eval(t);
            assert!(
                (got - oracle).norm() <= 1e-8,
                "idx={idx:?} t={t}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn order_one_finite_trajectory_matches_direct_integration() {
    // k = 1 has no gain term; the whole trajectory is one exponential and
    // the quadrature of its derivative recovers it.
    let init = InitialFamily::Chaotic(OneDimFamily::HKernel { m2: 1.0 });
    let gen = InteractionGenerator::gaussian(1.0);
    let sched = ScalingSchedule::critical(64, 2.0);
    let sol = clmf::finite::evolve_finite_marginal(&init, &sched, &gen, 1, 6).unwrap();
    for n in [-6i64, -1, 4] {
        let rate = sched.lambda * 64.0 * (1.0 - sol.g_hat_at(n));
        let f0 = 2.0 / (2.0 + (n * n) as f64);
        for &t in &[0.5, 2.0] {
            let got = sol.poly(1, &[n]).unwrap().eval(t);
            let expect = C64::new(f0 * (-rate * t).exp(), 0.0);
            assert!((got - expect).norm() < 1e-13);
        }
    }
}
