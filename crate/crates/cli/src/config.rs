//! Declarative experiment configuration: one self-contained JSON document,
//! hashable for the run manifest. Unknown fields are rejected so configs
//! stay schema-valid.

use anyhow::{bail, Context, Result};
use clmf::init::{InitialFamily, OneDimFamily};
use clmf::interaction::{InteractionGenerator, Regime, ScalingSchedule};
use clmf::spectral::SpectralCoefficients;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Uniform,
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
    /// Two-column CSV `x,g(x)`; trapezoidal moments.
    Custom { csv_path: String },
}

// No deny_unknown_fields here: serde cannot combine it with flatten.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub spec: GeneratorSpec,
    /// Integrability exponent p > 1 (default 2).
    #[serde(default)]
    pub p: Option<f64>,
    /// Moment order l >= 3 used by the bounds (default 4).
    #[serde(default)]
    pub moment_order: Option<u32>,
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<InteractionGenerator> {
        let mut gen = match &self.spec {
            GeneratorSpec::Uniform => InteractionGenerator::uniform(),
            GeneratorSpec::Gaussian { sigma } => InteractionGenerator::gaussian(*sigma),
            GeneratorSpec::Laplace { scale } => InteractionGenerator::laplace(*scale),
            GeneratorSpec::Custom { csv_path } => {
                let (xs, ys) = load_density_csv(Path::new(csv_path))?;
                InteractionGenerator::custom(xs, ys)?
            }
        };
        if let Some(p) = self.p {
            if p <= 1.0 {
                bail!("generator p must exceed 1, got {p}");
            }
            gen = gen.with_p(p);
        }
        if let Some(l) = self.moment_order {
            if l < 3 {
                bail!("moment order must be >= 3, got {l}");
            }
            gen = gen.with_moment_order(l);
        }
        Ok(gen)
    }
}

fn load_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading density table {}", path.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let mut cells = line.split(',');
        let x: f64 = cells
            .next()
            .with_context(|| format!("line {} malformed", lineno + 1))?
            .trim()
            .parse()?;
        let y: f64 = cells
            .next()
            .with_context(|| format!("line {} missing density value", lineno + 1))?
            .trim()
            .parse()?;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_values: Vec<usize>,
    pub regime: Regime,
    pub lambda: f64,
    /// Only legal off the critical regime (critical pins ε = 1/√N).
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl ScalingConfig {
    pub fn schedule(&self, n: usize) -> Result<ScalingSchedule> {
        let mut sched = match (self.regime, self.epsilon) {
            (Regime::Critical, None) => ScalingSchedule::critical(n, self.lambda),
            (regime, Some(eps)) => ScalingSchedule::with_epsilon(regime, n, eps, self.lambda)?,
            (regime, None) => bail!("regime {regime:?} requires an explicit epsilon"),
        };
        if let Some(alpha) = self.alpha {
            sched = sched.with_alpha(alpha);
        }
        Ok(sched)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneDimSpec {
    Uniform,
    PointMass { theta: f64 },
    HKernel { m2: f64 },
    Tabulated { path: String },
}

impl OneDimSpec {
    pub fn build(&self) -> Result<OneDimFamily> {
        Ok(match self {
            Self::Uniform => OneDimFamily::Uniform,
            Self::PointMass { theta } => OneDimFamily::PointMass { theta: *theta },
            Self::HKernel { m2 } => {
                if *m2 <= 0.0 {
                    bail!("h_kernel m2 must be positive");
                }
                OneDimFamily::HKernel { m2: *m2 }
            }
            Self::Tabulated { path } => {
                let value: serde_json::Value =
                    serde_json::from_str(&std::fs::read_to_string(path)?)?;
                OneDimFamily::Tabulated(SpectralCoefficients::from_json(&value)?)
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Product initial data `f_{1,0}^{⊗k}`.
    Chaotic { family: OneDimSpec },
    /// Ordered initial data `μ̂_0(Σ n_r)`.
    Ordered { family: OneDimSpec },
    /// Explicit per-order tensors in the spectral JSON schema.
    Tensors { paths: Vec<String> },
}

impl InitialConfig {
    pub fn build(&self) -> Result<InitialFamily> {
        Ok(match self {
            Self::Chaotic { family } => InitialFamily::Chaotic(family.build()?),
            Self::Ordered { family } => InitialFamily::Ordered(family.build()?),
            Self::Tensors { paths } => {
                let mut tensors = Vec::with_capacity(paths.len());
                for path in paths {
                    let value: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    tensors.push(SpectralCoefficients::from_json(&value)?);
                }
                InitialFamily::Tensors(tensors)
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub runs: usize,
    pub tuple_samples: usize,
    /// Estimated frequency vectors; all of one length (the tuple order k).
    pub indices: Vec<Vec<i64>>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Moment order fed to the constants ledger.
    pub l: u32,
    /// Confidence multiplier for Monte Carlo comparisons.
    #[serde(default = "default_z")]
    pub z: f64,
}

fn default_z() -> f64 {
    4.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub k_max: usize,
    #[serde(default)]
    pub radii: Option<Vec<i32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// Grid points per axis for the emitted CSV profiles.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_tail_tol")]
    pub tolerance: f64,
}

fn default_points() -> usize {
    1024
}

fn default_tail_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckOrderConfig {
    pub marginal_paths: Vec<String>,
    pub profile_path: String,
    #[serde(default = "default_order_tol")]
    pub tolerance: f64,
}

fn default_order_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub scaling: ScalingConfig,
    pub initial: InitialConfig,
    pub k_max: usize,
    /// Output cube radius of the evolved tensors.
    pub radius: i32,
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
    #[serde(default)]
    pub stationary: Option<StationaryConfig>,
    #[serde(default)]
    pub density: Option<DensityConfig>,
    #[serde(default)]
    pub check_order: Option<CheckOrderConfig>,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub reports: Vec<String>,
}

pub const KNOWN_REPORTS: &[&str] = &[
    "stationary",
    "evolve",
    "evolve-finite",
    "simulate",
    "compare",
    "check-order",
    "verify-bounds",
    "density",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).context("config does not match schema")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            bail!("k_max must be at least 1");
        }
        if self.radius < 0 {
            bail!("radius must be nonnegative");
        }
        if self.scaling.n_values.is_empty() {
            bail!("scaling.n_values must not be empty");
        }
        if self.scaling.lambda <= 0.0 {
            bail!("lambda must be positive");
        }
        for report in &self.reports {
            if !KNOWN_REPORTS.contains(&report.as_str()) {
                bail!("unknown report {report:?}; known: {KNOWN_REPORTS:?}");
            }
        }
        if let Some(mc) = &self.mc {
            if mc.runs == 0 || mc.tuple_samples == 0 {
                bail!("mc.runs and mc.tuple_samples must be positive");
            }
            let k = mc.indices.first().map(Vec::len).unwrap_or(0);
            if k == 0 {
                bail!("mc.indices must contain at least one nonempty index");
            }
            if mc.indices.iter().any(|i| i.len() != k) {
                bail!("mc.indices must all share one length");
            }
        }
        if self.reports.iter().any(|r| r == "simulate" || r == "compare") && self.mc.is_none() {
            bail!("simulate/compare reports need an mc section");
        }
        if self.reports.iter().any(|r| r == "check-order") && self.check_order.is_none() {
            bail!("check-order report needs a check_order section");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "seed": 7,
            "generator": {"family": "uniform"},
            "scaling": {"n_values": [16], "regime": "critical", "lambda": 1.0},
            "initial": {"kind": "chaotic", "family": {"kind": "h_kernel", "m2": 1.0}},
            "k_max": 2,
            "radius": 4,
            "t_grid": [0.5, 1.0],
            "reports": ["evolve"]
        })
    }

    #[test]
    fn minimal_config_parses() {
        let config = ExperimentConfig::parse(&minimal().to_string()).unwrap();
        assert_eq!(config.seed, 7);
        config.initial.build().unwrap();
        config.generator.build().unwrap();
        config.scaling.schedule(16).unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = minimal();
        v["extra_field"] = serde_json::json!(1);
        assert!(ExperimentConfig::parse(&v.to_string()).is_err());
    }

    #[test]
    fn semantic_violations_are_rejected() {
        let mut v = minimal();
        v["reports"] = serde_json::json!(["simulate"]);
        assert!(ExperimentConfig::parse(&v.to_string()).is_err());
        let mut v = minimal();
        v["scaling"]["epsilon"] = serde_json::json!(0.3);
        assert!(ExperimentConfig::parse(&v.to_string())
            .unwrap()
            .scaling
            .schedule(16)
            .is_err());
    }
}
