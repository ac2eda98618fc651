//! Event-driven jump-process realization of the rescaled master equation.
//!
//! The generator's loss term fixes the total event rate at `λN²`: waiting
//! times are exponential with that rate, each event picks an unordered pair
//! uniformly, flips a fair coin for the follower, and sets the follower's
//! angle to the leader's plus a draw of the rescaled noise. This is an exact
//! simulation of the per-pair clocks (rate `2λN/(N-1)` each).
//!
//! Runs are independent tasks on split RNG streams; identical seed and
//! configuration give bit-identical snapshots regardless of scheduling.

use crate::finite::FiniteMarginalSolution;
use crate::interaction::{wrap_angle, InteractionError, InteractionGenerator, ScalingSchedule};
use crate::rng;
use crate::spectral::MultiIndex;
use crate::C64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error("need at least two particles, got {0}")]
    TooFewParticles(usize),
    #[error("snapshot grid must lie in [0, {horizon}], got {t}")]
    BadGrid { t: f64, horizon: f64 },
    #[error("tuple order {k} exceeds particle count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("estimate/solution shape mismatch: {0}")]
    Shape(String),
}

/// Inverse-CDF sampler over a tabulated density on `[-π, π)`.
#[derive(Clone, Debug)]
pub struct DensityTable {
    thetas: Vec<f64>,
    cdf: Vec<f64>,
}

impl DensityTable {
    /// Build from density values on an increasing grid covering `[-π, π]`.
    pub fn from_values(thetas: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(thetas.len(), values.len());
        assert!(thetas.len() >= 2);
        assert!(thetas.windows(2).all(|w| w[0] < w[1]));
        assert!(values.iter().all(|v| *v >= 0.0));
        let mut cdf = Vec::with_capacity(thetas.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..thetas.len() {
            acc += 0.5 * (thetas[i] - thetas[i - 1]) * (values[i] + values[i - 1]);
            cdf.push(acc);
        }
        Self { thetas, cdf }
    }

    /// Normalized CDF at `x` (for goodness-of-fit tests).
    pub fn cdf(&self, x: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        if x <= self.thetas[0] {
            return 0.0;
        }
        if x >= *self.thetas.last().unwrap() {
            return 1.0;
        }
        let i = match self.thetas.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.cdf[i] / total,
            Err(i) => i - 1,
        };
        // Linear density within the cell integrates to a quadratic CDF; the
        // linear approximation is below grid resolution for test purposes.
        let t = (x - self.thetas[i]) / (self.thetas[i + 1] - self.thetas[i]);
        (self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])) / total
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().unwrap();
        let u: f64 = rng.random_range(0.0..total);
        let i = match self.cdf.binary_search_by(|p| p.total_cmp(&u)) {
            Ok(i) => i.min(self.thetas.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.thetas.len() - 2),
        };
        let span = self.cdf[i + 1] - self.cdf[i];
        let t = if span > 0.0 { (u - self.cdf[i]) / span } else { 0.5 };
        wrap_angle(self.thetas[i] + t * (self.thetas[i + 1] - self.thetas[i]))
    }
}

/// The common draw of an ordered initial condition.
#[derive(Clone, Debug)]
pub enum CommonDraw {
    Uniform,
    PointMass(f64),
    Density(DensityTable),
}

/// Initial condition of one run.
#[derive(Clone, Debug)]
pub enum InitialSampler {
    /// Chaotic uniform: iid uniform angles.
    UniformIid,
    /// Chaotic with a given one-particle law: iid inverse-CDF draws.
    DensityIid(DensityTable),
    /// Ordered: one common draw shared by every particle.
    Ordered(CommonDraw),
}

impl InitialSampler {
    fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        use std::f64::consts::PI;
        match self {
            Self::UniformIid => (0..n).map(|_| rng.random_range(-PI..PI)).collect(),
            Self::DensityIid(table) => (0..n).map(|_| table.sample(rng)).collect(),
            Self::Ordered(draw) => {
                let common = match draw {
                    CommonDraw::Uniform => rng.random_range(-PI..PI),
                    CommonDraw::PointMass(theta) => wrap_angle(*theta),
                    CommonDraw::Density(table) => table.sample(rng),
                };
                vec![common; n]
            }
        }
    }
}

/// State of one run at the snapshot times.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub run: usize,
    /// `snapshots[i]` holds the angles at `t_grid[i]`.
    pub snapshots: Vec<Vec<f64>>,
    pub events: u64,
}

/// All runs of one simulation.
pub struct SimulationOutput {
    pub sched: ScalingSchedule,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub runs: Vec<RunRecord>,
}

/// Simulate `runs` independent realizations, recording the ensemble at the
/// grid times.
pub fn simulate(
    sched: &ScalingSchedule,
    gen: &InteractionGenerator,
    sampler: &InitialSampler,
    horizon: f64,
    t_grid: &[f64],
    runs: usize,
    seed: u64,
) -> Result<SimulationOutput, SimError> {
    let n = sched.n;
    if n < 2 {
        return Err(SimError::TooFewParticles(n));
    }
    assert!(horizon > 0.0 && runs >= 1);
    let mut grid: Vec<f64> = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for &t in &grid {
        if !(0.0..=horizon).contains(&t) {
            return Err(SimError::BadGrid { t, horizon });
        }
    }
    let total_rate = sched.lambda * (n * n) as f64;
    let records: Result<Vec<RunRecord>, SimError> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut init_rng = rng::init_stream(seed, run);
            let mut angles = sampler.sample(n, &mut init_rng);
            let mut ev_rng = rng::events_stream(seed, run);
            let mut events = 0u64;
            let mut snapshots = Vec::with_capacity(grid.len());
            let mut next_event = exp_draw(&mut ev_rng, total_rate);
            for &gt in &grid {
                while next_event <= gt {
                    let i = ev_rng.random_range(0..n);
                    let mut j = ev_rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    let (leader, follower) = if ev_rng.random_range(0..2u8) == 0 {
                        (i, j)
                    } else {
                        (j, i)
                    };
                    let noise = gen.sample_noise(sched.epsilon, &mut ev_rng)?;
                    angles[follower] = wrap_angle(angles[leader] + noise);
                    events += 1;
                    next_event += exp_draw(&mut ev_rng, total_rate);
                }
                snapshots.push(angles.clone());
            }
            Ok(RunRecord {
                run,
                snapshots,
                events,
            })
        })
        .collect();
    Ok(SimulationOutput {
        sched: *sched,
        t_grid: grid,
        seed,
        runs: records?,
    })
}

fn exp_draw<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Monte Carlo estimate of one marginal Fourier coefficient.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalEstimate {
    pub index: MultiIndex,
    pub t: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    /// Standard error of the mean, combined over both components from the
    /// run-level spread.
    pub std_error: f64,
    pub samples: u64,
}

impl EmpiricalEstimate {
    pub fn mean(&self) -> C64 {
        C64::new(self.mean_re, self.mean_im)
    }
}

/// Estimate `F̂_{N,k}` at the given frequency vectors from the snapshots:
/// the average of `e^{-i Σ n_r θ_{i_r}}` over uniformly drawn k-tuples of
/// distinct particles (valid by exchangeability), with the standard error
/// taken across runs.
pub fn empirical_coefficients(
    output: &SimulationOutput,
    k: usize,
    indices: &[Vec<i64>],
    tuple_samples: usize,
    seed: u64,
) -> Result<Vec<EmpiricalEstimate>, SimError> {
    let n = output.sched.n;
    if k > n {
        return Err(SimError::KTooLarge { k, n });
    }
    assert!(tuple_samples >= 1);
    for idx in indices {
        if idx.len() != k {
            return Err(SimError::Shape(format!(
                "index {idx:?} has length {}, expected {k}",
                idx.len()
            )));
        }
    }
    let runs = output.runs.len();
    let mut estimates = Vec::with_capacity(indices.len() * output.t_grid.len());
    for (gi, &t) in output.t_grid.iter().enumerate() {
        // One tuple stream per (snapshot, run); the same tuples serve every
        // requested index.
        let run_means: Vec<Vec<C64>> = (0..runs)
            .into_par_iter()
            .map(|run| {
                let mut est_rng = rng::estimator_stream(seed, gi, run);
                let angles = &output.runs[run].snapshots[gi];
                let mut tuple = vec![0usize; k];
                let mut acc = vec![C64::new(0.0, 0.0); indices.len()];
                for _ in 0..tuple_samples {
                    draw_distinct(&mut est_rng, n, &mut tuple);
                    for (slot, idx) in acc.iter_mut().zip(indices.iter()) {
                        let phase: f64 = idx
                            .iter()
                            .zip(tuple.iter())
                            .map(|(&nr, &p)| nr as f64 * angles[p])
                            .sum();
                        *slot += C64::new(phase.cos(), -phase.sin());
                    }
                }
                acc.into_iter()
                    .map(|z| z / tuple_samples as f64)
                    .collect()
            })
            .collect();
        for (ii, idx) in indices.iter().enumerate() {
            let mean: C64 =
                run_means.iter().map(|m| m[ii]).sum::<C64>() / runs as f64;
            let (mut var_re, mut var_im) = (0.0, 0.0);
            for m in &run_means {
                var_re += (m[ii].re - mean.re).powi(2);
                var_im += (m[ii].im - mean.im).powi(2);
            }
            let std_error = if runs > 1 {
                ((var_re + var_im) / (runs as f64 - 1.0) / runs as f64).sqrt()
            } else {
                0.0
            };
            estimates.push(EmpiricalEstimate {
                index: MultiIndex(idx.iter().map(|&x| x as i32).collect()),
                t,
                mean_re: mean.re,
                mean_im: mean.im,
                std_error,
                samples: (runs * tuple_samples) as u64,
            });
        }
    }
    Ok(estimates)
}

fn draw_distinct<R: Rng>(rng: &mut R, n: usize, out: &mut [usize]) {
    // Rejection over small k; k << n in every use here.
    let k = out.len();
    for slot in 0..k {
        loop {
            let cand = rng.random_range(0..n);
            if !out[..slot].contains(&cand) {
                out[slot] = cand;
                break;
            }
        }
    }
}

/// One row of a Monte Carlo vs exact comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub index: MultiIndex,
    pub t: f64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub exact_re: f64,
    pub exact_im: f64,
    pub abs_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub pass_rate: f64,
    pub z: f64,
}

/// Compare estimates against the exact finite-N trajectories within
/// `z` standard errors per cell.
pub fn compare_to_exact(
    estimates: &[EmpiricalEstimate],
    sol: &FiniteMarginalSolution,
    z: f64,
) -> Result<ComparisonReport, SimError> {
    let mut rows = Vec::with_capacity(estimates.len());
    let mut passed = 0usize;
    for est in estimates {
        let idx: Vec<i64> = est.index.entries().iter().map(|&n| n as i64).collect();
        let poly = sol
            .poly(idx.len(), &idx)
            .ok_or_else(|| SimError::Shape(format!("no exact trajectory at {idx:?}")))?;
        let exact = poly.eval(est.t);
        let abs_error = (est.mean() - exact).norm();
        let threshold = z * est.std_error;
        let pass = abs_error <= threshold;
        passed += pass as usize;
        rows.push(ComparisonRow {
            index: est.index.clone(),
            t: est.t,
            empirical_re: est.mean_re,
            empirical_im: est.mean_im,
            exact_re: exact.re,
            exact_im: exact.im,
            abs_error,
            threshold,
            pass,
        });
    }
    let pass_rate = passed as f64 / rows.len().max(1) as f64;
    Ok(ComparisonReport { rows, pass_rate, z })
}
