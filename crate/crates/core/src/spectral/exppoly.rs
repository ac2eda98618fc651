//! Exponential polynomials: finite sums of `c · t^p · e^{-β t}`.
//!
//! Every time-dependent Fourier coefficient produced by the marginal
//! recursions lives in this class, and the class is closed under the only
//! integral the recursions ever need,
//!
//! ```text
//!     (K_α q)(t) = ∫_0^t e^{-α (t-s)} q(s) ds,
//! ```
//!
//! so trajectories stay exact instead of being time-stepped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative tolerance under which two decay rates are treated as equal and
/// the resonant `t^{p+1}` branch of the convolution is taken. Rates are
/// assembled from integers and `m_2`, so genuine collisions are exact; this
/// guard only absorbs float noise.
pub const RATE_COLLISION_TOL: f64 = 1e-12;

/// One term `coeff · t^power · e^{-rate t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub rate: f64,
    pub power: u32,
}

impl ExpTerm {
    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.coeff_re, self.coeff_im)
    }
}

/// A finite sum of exponential-polynomial terms in canonical form: terms are
/// sorted by `(rate, power)`, no two terms share a `(rate, power)` pair (up
/// to the rate-collision tolerance) and exact-zero coefficients are dropped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpPolynomial {
    terms: Vec<ExpTerm>,
}

fn rates_collide(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_COLLISION_TOL * 1.0_f64.max(a.abs()).max(b.abs())
}

impl ExpPolynomial {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// The constant polynomial `c` (rate 0, power 0).
    pub fn constant(c: Complex64) -> Self {
        Self::single(c, 0.0, 0)
    }

    /// `c · e^{-rate t}`.
    pub fn exponential(c: Complex64, rate: f64) -> Self {
        Self::single(c, rate, 0)
    }

    pub fn single(c: Complex64, rate: f64, power: u32) -> Self {
        let mut p = Self {
            terms: vec![ExpTerm {
                coeff_re: c.re,
                coeff_im: c.im,
                rate,
                power,
            }],
        };
        p.canonicalize();
        p
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        let mut p = Self { terms };
        p.canonicalize();
        p
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            acc += term.coeff() * t.powi(term.power as i32) * (-term.rate * t).exp();
        }
        acc
    }

    /// Value at `t = 0`: the sum of the power-zero coefficients.
    pub fn at_zero(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|term| term.power == 0)
            .map(|term| term.coeff())
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|term| ExpTerm {
                coeff_re: (term.coeff() * c).re,
                coeff_im: (term.coeff() * c).im,
                ..*term
            })
            .collect();
        Self::from_terms(terms)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest decay rate present (0 for the zero polynomial).
    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    /// Multiply by `e^{-delta t}`: add `delta` to every rate.
    pub fn shift_rate(&self, delta: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|term| ExpTerm {
                rate: term.rate + delta,
                ..*term
            })
            .collect();
        Self::from_terms(terms)
    }

    /// Exact closed form of `t ↦ ∫_0^t e^{-α (t-s)} q(s) ds` for `q = self`.
    ///
    /// Per term `c t^p e^{-βt}` with `δ = α - β` away from zero:
    ///
    /// ```text
    ///   ∫_0^t e^{-α(t-s)} s^p e^{-βs} ds
    ///     = Σ_{j=0}^{p} (-1)^j p!/(p-j)! · t^{p-j} e^{-βt} / δ^{j+1}
    ///       + (-1)^{p+1} p! e^{-αt} / δ^{p+1},
    /// ```
    ///
    /// and in the resonant case `α = β` the integral collapses to
    /// `c t^{p+1} e^{-αt} / (p+1)`.
    pub fn convolve_decay(&self, alpha: f64) -> Self {
        assert!(alpha >= 0.0, "decay rate must be nonnegative");
        let mut terms: Vec<ExpTerm> = Vec::new();
        for term in &self.terms {
            let c = term.coeff();
            let p = term.power;
            if rates_collide(alpha, term.rate) {
                let coeff = c / (p as f64 + 1.0);
                terms.push(ExpTerm {
                    coeff_re: coeff.re,
                    coeff_im: coeff.im,
                    rate: alpha,
                    power: p + 1,
                });
            } else {
                let delta = alpha - term.rate;
                let mut falling = 1.0; // p!/(p-j)! built incrementally
                let mut sign = 1.0;
                let mut delta_pow = delta;
                for j in 0..=p {
                    let coeff = c * sign * falling / delta_pow;
                    terms.push(ExpTerm {
                        coeff_re: coeff.re,
                        coeff_im: coeff.im,
                        rate: term.rate,
                        power: p - j,
                    });
                    if j < p {
                        falling *= (p - j) as f64;
                    }
                    sign = -sign;
                    delta_pow *= delta;
                }
                // falling = p!, sign = (-1)^{p+1}, delta_pow = δ^{p+2}
                let coeff = c * sign * falling / (delta_pow / delta);
                terms.push(ExpTerm {
                    coeff_re: coeff.re,
                    coeff_im: coeff.im,
                    rate: alpha,
                    power: 0,
                });
            }
        }
        Self::from_terms(terms)
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(|a, b| {
            a.rate
                .total_cmp(&b.rate)
                .then_with(|| a.power.cmp(&b.power))
        });
        let mut merged: Vec<ExpTerm> = Vec::with_capacity(self.terms.len());
        for term in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.power == term.power && rates_collide(last.rate, term.rate) => {
                    last.coeff_re += term.coeff_re;
                    last.coeff_im += term.coeff_im;
                }
                _ => merged.push(term),
            }
        }
        merged.retain(|t| t.coeff_re != 0.0 || t.coeff_im != 0.0);
        self.terms = merged;
    }
}

impl std::iter::Sum for ExpPolynomial {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut terms = Vec::new();
        for p in iter {
            terms.extend(p.terms);
        }
        Self::from_terms(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn convolve_plain_exponential_both_branches() {
        // α ≠ β: (e^{-βt} - e^{-αt})/(α-β)
        let q = ExpPolynomial::exponential(c(1.0), 2.0);
        let conv = q.convolve_decay(5.0);
        for &t in &[0.0f64, 0.3, 1.0, 4.0] {
            let expect = ((-2.0 * t).exp() - (-5.0 * t).exp()) / 3.0;
            assert!((conv.eval(t).re - expect).abs() < 1e-14);
            assert!(conv.eval(t).im.abs() < 1e-15);
        }
        // α = β: t e^{-αt}
        let conv = q.convolve_decay(2.0);
        for &t in &[0.0, 0.7, 3.0] {
            assert!((conv.eval(t).re - t * (-2.0 * t).exp()).abs() < 1e-14);
        }
        // α = β = 0, q ≡ 1: t
        let one = ExpPolynomial::constant(c(1.0));
        let conv = one.convolve_decay(0.0);
        assert!((conv.eval(2.5).re - 2.5).abs() < 1e-15);
    }

    #[test]
    fn convolve_at_zero_is_zero() {
        let q = ExpPolynomial::from_terms(vec![
            ExpTerm {
                coeff_re: 0.7,
                coeff_im: -0.2,
                rate: 1.3,
                power: 2,
            },
            ExpTerm {
                coeff_re: -0.1,
                coeff_im: 0.4,
                rate: 0.0,
                power: 0,
            },
        ]);
        let conv = q.convolve_decay(2.1);
        assert!(conv.eval(0.0).norm() < 1e-13);
    }

    #[test]
    fn convolve_matches_quadrature_for_random_terms() {
        // Independent oracle: adaptive quadrature of the defining integral.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x9E3779B97F4A7C15) >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let alpha = 4.0 * next();
            let mut beta = 4.0 * next();
            if (alpha - beta).abs() <= 1e-6 {
                beta += 0.1;
            }
            let p = (next() * 3.0) as u32;
            let coeff = Complex64::new(next() - 0.5, next() - 0.5);
            let q = ExpPolynomial::single(coeff, beta, p);
            let conv = q.convolve_decay(alpha);
            for &t in &[0.4, 1.7, 10.0] {
                let oracle = quad::integrate(
                    |s| (-alpha * (t - s)).exp() * s.powi(p as i32) * (-beta * s).exp(),
                    0.0,
                    t,
                    1e-13,
                )
                .unwrap();
                let got = conv.eval(t);
                assert!(
                    (got - coeff * oracle).norm() <= 1e-10,
                    "α={alpha} β={beta} p={p} t={t}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn merging_respects_rate_collision_tolerance() {
        let a = ExpPolynomial::exponential(c(1.0), 1.0);
        let b = ExpPolynomial::exponential(c(2.0), 1.0 + 1e-14);
        let s = a.add(&b);
        assert_eq!(s.terms().len(), 1);
        assert!((s.terms()[0].coeff_re - 3.0).abs() < 1e-12);

        let far = ExpPolynomial::exponential(c(2.0), 1.0 + 1e-9);
        assert_eq!(a.add(&far).terms().len(), 2);
    }

    #[test]
    fn at_zero_sums_power_zero_coefficients() {
        let q = ExpPolynomial::from_terms(vec![
            ExpTerm {
                coeff_re: 1.5,
                coeff_im: 0.0,
                rate: 2.0,
                power: 0,
            },
            ExpTerm {
                coeff_re: -0.5,
                coeff_im: 0.0,
                rate: 0.0,
                power: 0,
            },
            ExpTerm {
                coeff_re: 9.0,
                coeff_im: 0.0,
                rate: 1.0,
                power: 3,
            },
        ]);
        assert!((q.at_zero().re - 1.0).abs() < 1e-15);
    }
}
