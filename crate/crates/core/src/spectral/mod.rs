//! Truncated Fourier representation of probability measures on the k-torus.
//!
//! Coefficients are stored densely over the cube `[-n_max, n_max]^k`; all
//! recursions in this crate are pointwise in frequency, so dense storage
//! keeps lookups branch-free. The zero index of a probability measure is 1,
//! conjugate symmetry ties `-n` to `n`, and every stored modulus is at most
//! one — [`SpectralCoefficients::check_probability`] verifies exactly that.

mod exppoly;

pub use exppoly::{ExpPolynomial, ExpTerm, RATE_COLLISION_TOL};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index:?} outside truncation radius {n_max}")]
    IndexOutOfRange { index: Vec<i32>, n_max: i32 },
    #[error("marginal order {j} out of range 1..={k}")]
    MarginalOrder { j: usize, k: usize },
    #[error("density evaluation of non-real input: imaginary residue {residue:e} exceeds {tol:e}")]
    NonRealDensity { residue: f64, tol: f64 },
    #[error("Gram difference {index:?} unresolvable at truncation radius {n_max}")]
    GramUnresolvable { index: Vec<i32>, n_max: i32 },
    #[error("bad spectral JSON: {0}")]
    Json(String),
}

/// A frequency vector `(n_1, …, n_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<i32>);

impl MultiIndex {
    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<i32>> for MultiIndex {
    fn from(v: Vec<i32>) -> Self {
        Self(v)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// One violation found by a structural check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckFailure {
    pub index: MultiIndex,
    pub kind: String,
    pub magnitude: f64,
}

/// Outcome of a structural predicate; carries up to 16 concrete violations.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub pass: bool,
    pub max_violation: f64,
    pub failures: Vec<CheckFailure>,
}

impl CheckReport {
    fn new() -> Self {
        Self {
            pass: true,
            max_violation: 0.0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, tol: f64, index: &[i32], kind: &str, magnitude: f64) {
        self.max_violation = self.max_violation.max(magnitude);
        if magnitude > tol {
            self.pass = false;
            if self.failures.len() < 16 {
                self.failures.push(CheckFailure {
                    index: MultiIndex(index.to_vec()),
                    kind: kind.to_string(),
                    magnitude,
                });
            }
        }
    }
}

/// Result of evaluating a coefficient tensor as a density on a grid.
#[derive(Clone, Debug)]
pub struct DensityEval {
    pub values: Vec<f64>,
    /// Largest imaginary part seen before discarding (should be float noise).
    pub max_imag_residue: f64,
    /// Total coefficient mass on the outermost shell of the cube; a cheap
    /// truncation diagnostic surfaced to callers rather than hidden.
    pub boundary_shell_mass: f64,
}

/// Result of the positive-semidefiniteness (Bochner) check.
#[derive(Clone, Debug, Serialize)]
pub struct BochnerReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Dense complex coefficient tensor over `[-n_max, n_max]^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoefficients {
    dim: usize,
    n_max: i32,
    values: Vec<Complex64>,
    pub label: String,
    pub time: f64,
}

impl SpectralCoefficients {
    pub fn zeros(dim: usize, n_max: i32) -> Self {
        assert!(dim >= 1 && n_max >= 0);
        let side = (2 * n_max + 1) as usize;
        Self {
            dim,
            n_max,
            values: vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)],
            label: String::new(),
            time: 0.0,
        }
    }

    /// Coefficients of the uniform measure on the k-torus: `δ_0` at every axis.
    pub fn uniform(dim: usize, n_max: i32) -> Self {
        let mut c = Self::zeros(dim, n_max);
        let zero = vec![0i32; dim];
        c.set(&zero, Complex64::new(1.0, 0.0)).unwrap();
        c.label = "uniform".into();
        c
    }

    pub fn from_fn(dim: usize, n_max: i32, mut f: impl FnMut(&[i32]) -> Complex64) -> Self {
        let mut c = Self::zeros(dim, n_max);
        let mut idx = vec![-n_max; dim];
        for lin in 0..c.values.len() {
            c.decode(lin, &mut idx);
            c.values[lin] = f(&idx);
        }
        c
    }

    pub fn try_from_fn<E>(
        dim: usize,
        n_max: i32,
        mut f: impl FnMut(&[i32]) -> Result<Complex64, E>,
    ) -> Result<Self, E> {
        let mut c = Self::zeros(dim, n_max);
        let mut idx = vec![-n_max; dim];
        for lin in 0..c.values.len() {
            c.decode(lin, &mut idx);
            c.values[lin] = f(&idx)?;
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn side(&self) -> usize {
        (2 * self.n_max + 1) as usize
    }

    fn offset(&self, idx: &[i32]) -> Option<usize> {
        if idx.len() != self.dim {
            return None;
        }
        let side = self.side();
        let mut lin = 0usize;
        for &n in idx {
            if n.abs() > self.n_max {
                return None;
            }
            lin = lin * side + (n + self.n_max) as usize;
        }
        Some(lin)
    }

    fn decode(&self, mut lin: usize, out: &mut [i32]) {
        let side = self.side();
        for slot in out.iter_mut().rev() {
            *slot = (lin % side) as i32 - self.n_max;
            lin /= side;
        }
    }

    pub fn get(&self, idx: &[i32]) -> Option<Complex64> {
        self.offset(idx).map(|lin| self.values[lin])
    }

    pub fn value(&self, idx: &[i32]) -> Result<Complex64, SpectralError> {
        self.get(idx).ok_or_else(|| SpectralError::IndexOutOfRange {
            index: idx.to_vec(),
            n_max: self.n_max,
        })
    }

    pub fn set(&mut self, idx: &[i32], v: Complex64) -> Result<(), SpectralError> {
        match self.offset(idx) {
            Some(lin) => {
                self.values[lin] = v;
                Ok(())
            }
            None => Err(SpectralError::IndexOutOfRange {
                index: idx.to_vec(),
                n_max: self.n_max,
            }),
        }
    }

    /// Visit every stored index/value pair in lexicographic order.
    pub fn for_each(&self, mut f: impl FnMut(&[i32], Complex64)) {
        let mut idx = vec![0i32; self.dim];
        for lin in 0..self.values.len() {
            self.decode(lin, &mut idx);
            f(&idx, self.values[lin]);
        }
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(self.values.len());
        self.for_each(|idx, _| out.push(MultiIndex(idx.to_vec())));
        out
    }

    /// The `j`-th marginal: zero out the trailing coordinates,
    /// `out(n_1,…,n_j) = self(n_1,…,n_j,0,…,0)`.
    pub fn marginal(&self, j: usize) -> Result<Self, SpectralError> {
        if j < 1 || j > self.dim {
            return Err(SpectralError::MarginalOrder { j, k: self.dim });
        }
        let mut out = Self::zeros(j, self.n_max);
        out.label = self.label.clone();
        out.time = self.time;
        let mut padded = vec![0i32; self.dim];
        let mut idx = vec![0i32; j];
        for lin in 0..out.values.len() {
            out.decode(lin, &mut idx);
            padded[..j].copy_from_slice(&idx);
            out.values[lin] = self.values[self.offset(&padded).unwrap()];
        }
        Ok(out)
    }

    /// Normalization, conjugate symmetry and the unit modulus bound.
    pub fn check_probability(&self, tol: f64) -> CheckReport {
        let mut report = CheckReport::new();
        let zero = vec![0i32; self.dim];
        let at_zero = self.get(&zero).unwrap();
        report.record(tol, &zero, "normalization", (at_zero - 1.0).norm());
        let mut idx = vec![0i32; self.dim];
        let mut neg = vec![0i32; self.dim];
        for lin in 0..self.values.len() {
            self.decode(lin, &mut idx);
            for (a, b) in neg.iter_mut().zip(idx.iter()) {
                *a = -*b;
            }
            let v = self.values[lin];
            let w = self.values[self.offset(&neg).unwrap()];
            report.record(tol, &idx, "conjugate-symmetry", (w - v.conj()).norm());
            let excess = v.norm() - 1.0;
            if excess > 0.0 {
                report.record(tol, &idx, "modulus", excess);
            }
        }
        report
    }

    /// Evenness in Fourier form: `v(n) = v(-n)` for every stored `n`.
    pub fn check_even(&self, tol: f64) -> CheckReport {
        let mut report = CheckReport::new();
        let mut idx = vec![0i32; self.dim];
        let mut neg = vec![0i32; self.dim];
        for lin in 0..self.values.len() {
            self.decode(lin, &mut idx);
            for (a, b) in neg.iter_mut().zip(idx.iter()) {
                *a = -*b;
            }
            let v = self.values[lin];
            let w = self.values[self.offset(&neg).unwrap()];
            report.record(tol, &idx, "evenness", (w - v).norm());
        }
        report
    }

    /// Symmetry under permutation of the index entries. Exhaustive over the
    /// permutation group for `k <= 6`, a fixed deterministic sample beyond.
    pub fn check_symmetric(&self, tol: f64) -> CheckReport {
        let mut report = CheckReport::new();
        if self.dim == 1 {
            return report;
        }
        let perms = if self.dim <= 6 {
            permutations(self.dim)
        } else {
            sampled_permutations(self.dim, 128)
        };
        let mut idx = vec![0i32; self.dim];
        let mut perm_idx = vec![0i32; self.dim];
        for lin in 0..self.values.len() {
            self.decode(lin, &mut idx);
            let v = self.values[lin];
            for perm in &perms {
                for (slot, &src) in perm_idx.iter_mut().zip(perm.iter()) {
                    *slot = idx[src];
                }
                let w = self.values[self.offset(&perm_idx).unwrap()];
                report.record(tol, &idx, "symmetry", (w - v).norm());
            }
        }
        report
    }

    /// Evaluate `Σ_n v(n) e^{i n·θ}` on the grid (density against `dθ/2π`).
    pub fn density_eval(&self, grid: &[Vec<f64>], tol: f64) -> Result<DensityEval, SpectralError> {
        use rayon::prelude::*;

        for point in grid {
            if point.len() != self.dim {
                return Err(SpectralError::DimensionMismatch {
                    expected: self.dim,
                    got: point.len(),
                });
            }
        }
        let mut indices = Vec::with_capacity(self.values.len());
        let mut idx = vec![0i32; self.dim];
        for lin in 0..self.values.len() {
            self.decode(lin, &mut idx);
            indices.push(idx.clone());
        }
        let evals: Vec<Complex64> = grid
            .par_iter()
            .map(|theta| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, v) in indices.iter().zip(self.values.iter()) {
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    let phase: f64 = idx
                        .iter()
                        .zip(theta.iter())
                        .map(|(&n, &th)| n as f64 * th)
                        .sum();
                    acc += v * Complex64::new(phase.cos(), phase.sin());
                }
                acc
            })
            .collect();
        let max_imag = evals.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_imag > tol {
            return Err(SpectralError::NonRealDensity {
                residue: max_imag,
                tol,
            });
        }
        let mut shell = 0.0;
        for (idx, v) in indices.iter().zip(self.values.iter()) {
            if idx.iter().any(|n| n.abs() == self.n_max) {
                shell += v.norm();
            }
        }
        Ok(DensityEval {
            values: evals.into_iter().map(|z| z.re).collect(),
            max_imag_residue: max_imag,
            boundary_shell_mass: shell,
        })
    }

    /// Bochner positivity: the Gram matrix `G[a][b] = v(p_a - p_b)` of a
    /// positive-definite coefficient family is positive semidefinite.
    pub fn bochner_psd_check(
        &self,
        points: &[Vec<i32>],
        tol: f64,
    ) -> Result<BochnerReport, SpectralError> {
        let n = points.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        let mut diff = vec![0i32; self.dim];
        for a in 0..n {
            if points[a].len() != self.dim {
                return Err(SpectralError::DimensionMismatch {
                    expected: self.dim,
                    got: points[a].len(),
                });
            }
            for b in 0..n {
                for ((d, &x), &y) in diff.iter_mut().zip(points[a].iter()).zip(points[b].iter()) {
                    *d = x - y;
                }
                let v = self
                    .get(&diff)
                    .ok_or_else(|| SpectralError::GramUnresolvable {
                        index: diff.clone(),
                        n_max: self.n_max,
                    })?;
                gram[a * n + b] = v;
            }
        }
        // Hermitize (drops float noise), then embed the Hermitian matrix into
        // a real symmetric one of twice the size; eigenvalues are preserved.
        let mut real = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                let h = 0.5 * (gram[a * n + b] + gram[b * n + a].conj());
                real[(a, b)] = h.re;
                real[(n + a, n + b)] = h.re;
                real[(a, n + b)] = -h.im;
                real[(n + a, b)] = h.im;
            }
        }
        let eigen = nalgebra::SymmetricEigen::new(real);
        let min_eigenvalue = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(BochnerReport {
            min_eigenvalue,
            pass: min_eigenvalue >= -tol,
        })
    }

    /// Sup-norm distance over the common cube.
    pub fn sup_distance(&self, other: &Self) -> Result<f64, SpectralError> {
        if self.dim != other.dim {
            return Err(SpectralError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let radius = self.n_max.min(other.n_max);
        let probe = Self::zeros(self.dim, radius);
        let mut idx = vec![0i32; self.dim];
        let mut worst = 0.0f64;
        for lin in 0..probe.values.len() {
            probe.decode(lin, &mut idx);
            let d = (self.get(&idx).unwrap() - other.get(&idx).unwrap()).norm();
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

/// All permutations of `0..k` (Heap's algorithm).
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    fn heap(items: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..n {
            heap(items, n - 1, out);
            if n % 2 == 0 {
                items.swap(i, n - 1);
            } else {
                items.swap(0, n - 1);
            }
        }
    }
    heap(&mut items, k, &mut out);
    out
}

fn sampled_permutations(k: usize, count: usize) -> Vec<Vec<usize>> {
    let mut state = 0x9E3779B97F4A7C15u64 ^ (k as u64);
    let mut next = move || {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        state.wrapping_mul(0x2545F4914F6CDD1D)
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = (next() % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        out.push(perm);
    }
    out
}

/// Format a float with 17 significant digits (round-trip exact).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV density grid: `theta_1,…,theta_k,value` per row.
pub fn density_csv(grid: &[Vec<f64>], values: &[f64]) -> String {
    let dim = grid.first().map_or(0, Vec::len);
    let mut out = String::new();
    for i in 1..=dim {
        out.push_str(&format!("theta_{i},"));
    }
    out.push_str("value\n");
    for (point, v) in grid.iter().zip(values.iter()) {
        for c in point {
            out.push_str(&fmt_float(*c));
            out.push(',');
        }
        out.push_str(&fmt_float(*v));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SpectralJson {
    dimension: usize,
    n_max: i32,
    values: Vec<Vec<f64>>,
    label: String,
    time: f64,
}

impl SpectralCoefficients {
    /// Serialize to the documented schema:
    /// `{dimension, n_max, values: [[n_1,…,n_k, re, im], …], label, time}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut rows = Vec::with_capacity(self.values.len());
        self.for_each(|idx, v| {
            let mut row: Vec<f64> = idx.iter().map(|&n| n as f64).collect();
            row.push(v.re);
            row.push(v.im);
            rows.push(row);
        });
        serde_json::to_value(SpectralJson {
            dimension: self.dim,
            n_max: self.n_max,
            values: rows,
            label: self.label.clone(),
            time: self.time,
        })
        .expect("spectral schema serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SpectralError> {
        let parsed: SpectralJson = serde_json::from_value(value.clone())
            .map_err(|e| SpectralError::Json(e.to_string()))?;
        if parsed.dimension < 1 {
            return Err(SpectralError::Json("dimension must be >= 1".into()));
        }
        let mut out = Self::zeros(parsed.dimension, parsed.n_max);
        out.label = parsed.label;
        out.time = parsed.time;
        for row in &parsed.values {
            if row.len() != parsed.dimension + 2 {
                return Err(SpectralError::Json(format!(
                    "value row has {} entries, expected {}",
                    row.len(),
                    parsed.dimension + 2
                )));
            }
            let mut idx = Vec::with_capacity(parsed.dimension);
            for &x in &row[..parsed.dimension] {
                if x.fract() != 0.0 || x.abs() > i32::MAX as f64 {
                    return Err(SpectralError::Json(format!("non-integer frequency {x}")));
                }
                idx.push(x as i32);
            }
            let v = Complex64::new(row[parsed.dimension], row[parsed.dimension + 1]);
            out.set(&idx, v)?;
        }
        Ok(out)
    }
}
