//! Interaction generating functions and their rescaled torus coefficients.
//!
//! A generator is an even probability density `g` on the line. Rescaled by
//! `ε` and renormalized to the torus it has coefficients
//!
//! ```text
//!     ĝ_ε(n) = (2π G_ε)^{-1} ∫_{-π/ε}^{π/ε} g(x) cos(n ε x) dx,
//!     G_ε   = (2π)^{-1} ∫_{-π/ε}^{π/ε} g(x) dx,
//! ```
//!
//! which are real, even and bounded by one. Built-in families carry closed
//! forms for moments, L^p norms and (uniform, laplace) the coefficients
//! themselves; everything else goes through adaptive quadrature.

use crate::limit::M2;
use crate::quad::{self, QuadratureError};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("coefficient {value} at n={n} outside [-1,1] beyond tolerance")]
    CoefficientOutOfRange { n: i64, value: f64 },
    #[error("custom density integrates to {integral}, expected 1 within 1e-10")]
    NotNormalized { integral: f64 },
    #[error("custom density is not even (asymmetry {0:e})")]
    NotEven(f64),
    #[error("rejection sampling budget exceeded (acceptance region too small)")]
    RejectionBudget,
    #[error("critical regime requires epsilon = 1/sqrt(N), got {epsilon}")]
    CriticalEpsilon { epsilon: f64 },
}

/// Built-in generator families plus tabulated custom densities.
#[derive(Clone, Debug)]
pub enum GeneratorFamily {
    /// Uniform density on `[-1/2, 1/2]`.
    Uniform,
    /// Centered gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Centered laplace with scale `b` (density `e^{-|x|/b} / 2b`).
    Laplace { scale: f64 },
    /// Piecewise-linear tabulated density on a symmetric grid.
    Custom { xs: Vec<f64>, ys: Vec<f64> },
}

/// An interaction generating function with its analytic metadata.
#[derive(Clone, Debug)]
pub struct InteractionGenerator {
    family: GeneratorFamily,
    /// Integrability exponent for the high-frequency bound (`g ∈ L^p`).
    p: f64,
    /// Moment order `l >= 3` the bounds are run with.
    moment_order: u32,
}

impl InteractionGenerator {
    pub fn uniform() -> Self {
        Self {
            family: GeneratorFamily::Uniform,
            p: 2.0,
            moment_order: 4,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        Self {
            family: GeneratorFamily::Gaussian { sigma },
            p: 2.0,
            moment_order: 4,
        }
    }

    pub fn laplace(scale: f64) -> Self {
        assert!(scale > 0.0);
        Self {
            family: GeneratorFamily::Laplace { scale },
            p: 2.0,
            moment_order: 4,
        }
    }

    /// Tabulated custom density. The table must be normalized (trapezoid
    /// integral 1 within 1e-10) and even within 1e-8.
    pub fn custom(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, InteractionError> {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 3);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let integral = trapezoid(&xs, &ys);
        if (integral - 1.0).abs() > 1e-10 {
            return Err(InteractionError::NotNormalized { integral });
        }
        let gen = Self {
            family: GeneratorFamily::Custom { xs, ys },
            p: 2.0,
            moment_order: 3,
        };
        let mut asym = 0.0f64;
        if let GeneratorFamily::Custom { xs, .. } = &gen.family {
            for &x in xs {
                asym = asym.max((gen.density(x) - gen.density(-x)).abs());
            }
        }
        if asym > 1e-8 {
            return Err(InteractionError::NotEven(asym));
        }
        Ok(gen)
    }

    /// Rescale a raw table so it integrates to one, then build the generator.
    pub fn custom_normalized(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, InteractionError> {
        let integral = trapezoid(&xs, &ys);
        assert!(integral > 0.0);
        let ys = ys.into_iter().map(|y| y / integral).collect();
        Self::custom(xs, ys)
    }

    pub fn with_p(mut self, p: f64) -> Self {
        assert!(p > 1.0);
        self.p = p;
        self
    }

    pub fn with_moment_order(mut self, l: u32) -> Self {
        assert!(l >= 3);
        self.moment_order = l;
        self
    }

    pub fn family(&self) -> &GeneratorFamily {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Hölder conjugate of `p`.
    pub fn holder_q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn moment_order(&self) -> u32 {
        self.moment_order
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            GeneratorFamily::Uniform => {
                if x.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            GeneratorFamily::Gaussian { sigma } => {
                (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            GeneratorFamily::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
            GeneratorFamily::Custom { xs, ys } => interp(xs, ys, x),
        }
    }

    /// Absolute moment `m_l = ∫ |x|^l g(x) dx`.
    pub fn moment(&self, l: u32) -> f64 {
        match &self.family {
            GeneratorFamily::Uniform => 0.5f64.powi(l as i32) / (l as f64 + 1.0),
            GeneratorFamily::Gaussian { sigma } => {
                // E|Z|^l for standard normal: (l-1)!! for even l,
                // 2^m m! sqrt(2/π) for l = 2m+1.
                let base = if l % 2 == 0 {
                    let mut acc = 1.0;
                    let mut i = l as i64 - 1;
                    while i > 1 {
                        acc *= i as f64;
                        i -= 2;
                    }
                    acc
                } else {
                    let m = (l - 1) / 2;
                    let mut acc = (2.0 / std::f64::consts::PI).sqrt();
                    for i in 1..=m {
                        acc *= 2.0 * i as f64;
                    }
                    acc
                };
                base * sigma.powi(l as i32)
            }
            GeneratorFamily::Laplace { scale } => {
                let mut acc = 1.0;
                for i in 1..=l {
                    acc *= i as f64;
                }
                acc * scale.powi(l as i32)
            }
            GeneratorFamily::Custom { xs, ys } => {
                let weighted: Vec<f64> = xs
                    .iter()
                    .zip(ys.iter())
                    .map(|(&x, &y)| x.abs().powi(l as i32) * y)
                    .collect();
                trapezoid(xs, &weighted)
            }
        }
    }

    pub fn m2(&self) -> f64 {
        self.moment(2)
    }

    /// Second moment with its exact rational form when the family has one.
    pub fn m2_exact(&self) -> M2 {
        match &self.family {
            GeneratorFamily::Uniform => M2::rational(1, 12),
            _ => M2::from_f64(self.m2()),
        }
    }

    /// `L^p` norm of the density.
    pub fn lp_norm(&self) -> f64 {
        let p = self.p;
        match &self.family {
            GeneratorFamily::Uniform => 1.0,
            GeneratorFamily::Gaussian { sigma } => {
                let root_2pi = (2.0 * std::f64::consts::PI).sqrt();
                (sigma * root_2pi).powf((1.0 - p) / p) * p.powf(-1.0 / (2.0 * p))
            }
            GeneratorFamily::Laplace { scale } => {
                (2.0 * scale).powf((1.0 - p) / p) * p.powf(-1.0 / p)
            }
            GeneratorFamily::Custom { xs, ys } => {
                let powered: Vec<f64> = ys.iter().map(|&y| y.powf(p)).collect();
                trapezoid(xs, &powered).powf(1.0 / p)
            }
        }
    }

    /// Real Fourier transform `∫ g(x) cos(ξ x) dx`.
    pub fn fourier_transform(&self, xi: f64) -> Result<f64, InteractionError> {
        match &self.family {
            GeneratorFamily::Uniform => Ok(sinc(0.5 * xi)),
            GeneratorFamily::Gaussian { sigma } => Ok((-0.5 * sigma * sigma * xi * xi).exp()),
            GeneratorFamily::Laplace { scale } => Ok(1.0 / (1.0 + scale * scale * xi * xi)),
            GeneratorFamily::Custom { xs, ys } => {
                let mut acc = 0.0;
                for w in xs.windows(2) {
                    acc += quad::integrate(
                        |x| interp(xs, ys, x) * (xi * x).cos(),
                        w[0],
                        w[1],
                        1e-13,
                    )?;
                }
                Ok(acc)
            }
        }
    }

    /// Torus coefficient `ĝ_ε(n)` of the rescaled density.
    pub fn g_hat(&self, eps: f64, n: i64) -> Result<f64, InteractionError> {
        if eps <= 0.0 {
            return Err(InteractionError::Precondition("epsilon must be positive".into()));
        }
        if n == 0 {
            return Ok(1.0);
        }
        let window = std::f64::consts::PI / eps;
        let c = n as f64 * eps;
        let value = match &self.family {
            GeneratorFamily::Uniform => {
                let half_support = 0.5f64.min(window);
                sinc(c * half_support)
            }
            GeneratorFamily::Laplace { scale } => {
                let a = 1.0 / scale;
                let cos_part = |freq: f64| -> f64 {
                    (a + (-a * window).exp() * (freq * (freq * window).sin() - a * (freq * window).cos()))
                        / (a * a + freq * freq)
                };
                let mass = (1.0 - (-a * window).exp()) / a;
                cos_part(c) / mass
            }
            GeneratorFamily::Gaussian { sigma } => {
                let upper = window.min(45.0 * sigma);
                let numer = quad::integrate(|x| self.density(x) * (c * x).cos(), 0.0, upper, 1e-13)?;
                let denom = quad::integrate(|x| self.density(x), 0.0, upper, 1e-13)?;
                numer / denom
            }
            GeneratorFamily::Custom { xs, ys } => {
                let mut numer = 0.0;
                let mut denom = 0.0;
                for w in xs.windows(2) {
                    let lo = w[0].max(-window);
                    let hi = w[1].min(window);
                    if lo >= hi {
                        continue;
                    }
                    numer += quad::integrate(|x| interp(xs, ys, x) * (c * x).cos(), lo, hi, 1e-13)?;
                    denom += quad::integrate(|x| interp(xs, ys, x), lo, hi, 1e-13)?;
                }
                if denom <= 0.0 {
                    return Err(InteractionError::Precondition(
                        "custom density has no mass inside the rescaling window".into(),
                    ));
                }
                numer / denom
            }
        };
        if value.abs() > 1.0 + 1e-9 {
            return Err(InteractionError::CoefficientOutOfRange { n, value });
        }
        Ok(value.clamp(-1.0, 1.0))
    }

    /// The moment-tail quantity `τ = 2 ε^l m_l / (π^l - ε^l m_l)`.
    pub fn tau(&self, eps: f64) -> Result<f64, InteractionError> {
        let l = self.moment_order as i32;
        let ml = self.moment(self.moment_order);
        let pi_l = std::f64::consts::PI.powi(l);
        let scaled = eps.powi(l) * ml;
        if scaled >= pi_l {
            return Err(InteractionError::Precondition(format!(
                "scale too coarse: eps^l m_l = {scaled} must stay below pi^l = {pi_l}"
            )));
        }
        Ok(2.0 * scaled / (pi_l - scaled))
    }

    fn require_fine_scale(&self, eps: f64) -> Result<(), InteractionError> {
        let ml = self.moment(self.moment_order);
        let cap = std::f64::consts::PI / ml.powf(1.0 / self.moment_order as f64);
        if eps >= cap {
            return Err(InteractionError::Precondition(format!(
                "eps = {eps} must stay below pi / m_l^(1/l) = {cap}"
            )));
        }
        Ok(())
    }

    /// Second-order expansion residual of `ĝ_ε(n)` against its bound.
    pub fn low_freq_residual(&self, sched: &ScalingSchedule, n: i64) -> Result<LowFreqCheck, InteractionError> {
        let eps = sched.epsilon;
        self.require_fine_scale(eps)?;
        let ghat = self.g_hat(eps, n)?;
        let m2 = self.m2();
        let nf = n as f64;
        let residual = (ghat - 1.0 + 0.5 * m2 * eps * eps * nf * nf).abs();
        let tau = self.tau(eps)?;
        let bound = tau
            + if self.moment_order == 3 {
                self.moment(3) / 3.0 * eps.powi(3) * nf.abs().powi(3)
            } else {
                self.moment(4) / 12.0 * eps.powi(4) * nf.powi(4)
            };
        Ok(LowFreqCheck {
            n,
            residual,
            bound,
            pass: residual <= bound + 1e-12,
        })
    }

    /// Guaranteed high-frequency gap: for `|n| >= α/ε` the coefficient obeys
    /// `ĝ_ε(n) - 1 <= gap < 0`. Sweeps `n` up to `4α/ε` and verifies.
    pub fn high_freq_gap(&self, sched: &ScalingSchedule) -> Result<HighFreqReport, InteractionError> {
        let eps = sched.epsilon;
        let alpha = sched.alpha;
        self.require_fine_scale(eps)?;
        let q = self.holder_q();
        let norm = self.lp_norm();
        let cap = 4.0f64.powf(q + 1.0) * norm.powf(q);
        if alpha > cap {
            return Err(InteractionError::Precondition(format!(
                "alpha = {alpha} exceeds 4^(q+1) ||g||^q = {cap}"
            )));
        }
        let l = self.moment_order;
        let ml = self.moment(l);
        let pi = std::f64::consts::PI;
        let root = (4.0 * ml).powf(1.0 / l as f64);
        let denom = 2.0 * 4.0f64.powf(2.0 * (q + 1.0) + 1.0) * norm.powf(2.0 * q) * (root * alpha + 2.0 * pi).powi(2);
        let gap = self.tau(eps)? - alpha * alpha * pi * pi / denom;
        let n_lo = (alpha / eps).ceil() as i64;
        let n_hi = (4.0 * alpha / eps).ceil() as i64;
        let mut sweep = Vec::new();
        let mut pass = true;
        for n in n_lo..=n_hi {
            let excess = self.g_hat(eps, n)? - 1.0;
            if excess > gap + 1e-12 {
                pass = false;
            }
            sweep.push((n, excess));
        }
        Ok(HighFreqReport {
            gap,
            swept: (n_lo, n_hi),
            sweep,
            pass,
        })
    }

    /// Draw the follower noise: `ε·Z` with `Z ~ g` conditioned to the
    /// rescaling window, wrapped into `[-π, π)`.
    pub fn sample_noise<R: Rng>(&self, eps: f64, rng: &mut R) -> Result<f64, InteractionError> {
        debug_assert!(eps > 0.0);
        let window = std::f64::consts::PI / eps;
        let draw = |rng: &mut R| -> f64 {
            match &self.family {
                GeneratorFamily::Uniform => rng.random_range(-0.5..0.5),
                GeneratorFamily::Gaussian { sigma } => {
                    let normal = rand_distr::Normal::new(0.0, *sigma).unwrap();
                    rng.sample(normal)
                }
                GeneratorFamily::Laplace { scale } => {
                    let u: f64 = rng.random_range(-0.5..0.5);
                    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
                }
                GeneratorFamily::Custom { xs, ys } => sample_table(xs, ys, rng),
            }
        };
        for _ in 0..10_000 {
            let z = draw(rng);
            if z.abs() <= window {
                return Ok(wrap_angle(eps * z));
            }
        }
        Err(InteractionError::RejectionBudget)
    }
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w >= std::f64::consts::PI {
        w = -std::f64::consts::PI;
    }
    w
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > *xs.last().unwrap() {
        return 0.0;
    }
    let i = match xs.binary_search_by(|probe| probe.total_cmp(&x)) {
        Ok(i) => return ys[i],
        Err(i) => i - 1,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - t) + ys[i + 1] * t
}

fn sample_table<R: Rng>(xs: &[f64], ys: &[f64], rng: &mut R) -> f64 {
    // Inverse CDF over the trapezoid CDF, linear within each cell.
    let mut cdf = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    let u: f64 = rng.random_range(0.0..total);
    let i = match cdf.binary_search_by(|probe| probe.total_cmp(&u)) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => i.saturating_sub(1).min(xs.len() - 2),
    };
    let span = cdf[i + 1] - cdf[i];
    let t = if span > 0.0 { (u - cdf[i]) / span } else { 0.5 };
    xs[i] + t * (xs[i + 1] - xs[i])
}

/// Verdict of one low-frequency residual comparison.
#[derive(Clone, Debug, Serialize)]
pub struct LowFreqCheck {
    pub n: i64,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Verdict of the high-frequency gap sweep.
#[derive(Clone, Debug, Serialize)]
pub struct HighFreqReport {
    pub gap: f64,
    pub swept: (i64, i64),
    pub sweep: Vec<(i64, f64)>,
    pub pass: bool,
}

/// Scaling regime of the particle count against the interaction width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `N ε² = 1`.
    Critical,
    /// `N ε² → 0`.
    Order,
    /// `N ε² → ∞`.
    Chaos,
}

/// Particle count, interaction scale, frequency split and jump rate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingSchedule {
    pub n: usize,
    pub epsilon: f64,
    pub regime: Regime,
    /// Frequency-split parameter separating low from high frequencies.
    pub alpha: f64,
    /// Interaction rate λ (1/time).
    pub lambda: f64,
}

impl ScalingSchedule {
    /// Critical scaling: `ε = 1/√N` exactly; `α` defaults to `N^{-1/4}`.
    pub fn critical(n: usize, lambda: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            epsilon: 1.0 / nf.sqrt(),
            regime: Regime::Critical,
            alpha: nf.powf(-0.25),
            lambda,
        }
    }

    /// Non-critical regimes take a user `ε`; critical must match `1/√N`.
    pub fn with_epsilon(regime: Regime, n: usize, epsilon: f64, lambda: f64) -> Result<Self, InteractionError> {
        if regime == Regime::Critical && epsilon != 1.0 / (n as f64).sqrt() {
            return Err(InteractionError::CriticalEpsilon { epsilon });
        }
        Ok(Self {
            n,
            epsilon,
            regime,
            alpha: (n as f64).powf(-0.25),
            lambda,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        assert!(alpha > 0.0);
        self.alpha = alpha;
        self
    }

    /// Check `N ε²` against the declared regime; returns a warning when the
    /// combination looks inconsistent at this `N`.
    pub fn regime_consistency_warning(&self) -> Option<String> {
        let ne2 = self.n as f64 * self.epsilon * self.epsilon;
        match self.regime {
            Regime::Critical => None,
            Regime::Order if ne2 >= 1.0 => Some(format!(
                "order regime declared but N eps^2 = {ne2} >= 1 at N = {}",
                self.n
            )),
            Regime::Chaos if ne2 <= 1.0 => Some(format!(
                "chaos regime declared but N eps^2 = {ne2} <= 1 at N = {}",
                self.n
            )),
            _ => None,
        }
    }
}
