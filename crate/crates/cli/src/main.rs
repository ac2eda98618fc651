//! Command-line front end: declarative configs in, reproducible JSON/CSV
//! artifacts out. Exit codes: 0 all checks pass, 1 runtime failure or a
//! failed asserted check, 2 schema violation.

mod artifacts;
mod config;
mod pipelines;

use anyhow::{Context, Result};
use artifacts::OutputDir;
use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "clmf", version, about = "Spectral engine for the rescaled choose-the-leader model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config (JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides config and CLMF_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides CLMF_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every report pipeline requested in the config.
    Run(CommonArgs),
    /// Stationary hierarchy: f_infty and nu tensors per order.
    Stationary {
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        /// Second moment, e.g. `1`, `1/12` or `0.75`.
        #[arg(long, default_value = "1")]
        m2: String,
        /// Per-order truncation radii, comma separated.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<i32>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV density profiles of H and the deviation measures.
    Density {
        #[arg(long, default_value = "1")]
        m2: String,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean-field limit trajectories on the config time grid.
    Evolve(CommonArgs),
    /// Exact finite-N trajectories on the config time grid.
    EvolveFinite(CommonArgs),
    /// Jump-process Monte Carlo with empirical coefficient estimates.
    Simulate(CommonArgs),
    /// Monte Carlo versus the exact finite-N trajectories.
    Compare(CommonArgs),
    /// Partial-order factorization check of marginal files against a profile.
    CheckOrder {
        /// Marginal tensors (spectral JSON), order 1 upward.
        #[arg(long, value_delimiter = ',', required = true)]
        marginals: Vec<String>,
        /// Profile JSON: {"orders": [{"k", "eta", "nu"}]}.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constants ledger and convergence-bound verdicts.
    VerifyBounds(CommonArgs),
    /// Print the constants ledger for the configured generator and scaling.
    Constants(CommonArgs),
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("CLMF_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn resolve_out(flag: Option<PathBuf>, config_dir: Option<&str>) -> PathBuf {
    flag.or_else(|| std::env::var("CLMF_OUT").ok().map(PathBuf::from))
        .or_else(|| config_dir.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct Loaded {
    config: ExperimentConfig,
    text: String,
    out: OutputDir,
}

fn load(common: &CommonArgs) -> Result<Loaded> {
    init_threads(common.threads);
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = OutputDir::create(&resolve_out(
        common.out.clone(),
        config.output_dir.as_deref(),
    ))?;
    Ok(Loaded { config, text, out })
}

fn finalize(loaded: Loaded) -> Result<()> {
    let resolved = serde_json::to_value(&loaded.config)?;
    loaded.out.finalize(&loaded.text, &resolved)
}

/// Errors that mean "bad config", mapped to exit code 2.
fn is_schema_error(err: &anyhow::Error) -> bool {
    err.to_string().contains("config does not match schema")
        || err.chain().any(|c| c.is::<serde_json::Error>())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let mut loaded = load(&common)?;
            let pass = pipelines::run_all(&loaded.config, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(pass)
        }
        Command::Stationary { k_max, m2, radii, out } => {
            let m2 = pipelines::parse_m2(&m2)?;
            let mut dir = OutputDir::create(&resolve_out(out, None))?;
            pipelines::stationary_files(k_max, m2, radii.as_deref(), &mut dir)?;
            let args = serde_json::json!({"k_max": k_max, "m2": m2, "radii": radii});
            dir.finalize(&args.to_string(), &args)?;
            Ok(true)
        }
        Command::Density { m2, points, k_max, out } => {
            let m2 = pipelines::parse_m2(&m2)?;
            let mut dir = OutputDir::create(&resolve_out(out, None))?;
            let args = serde_json::json!({"m2": m2, "points": points, "k_max": k_max});
            let config = ExperimentConfig::parse(
                &serde_json::json!({
                    "seed": 0,
                    "generator": {"family": "uniform"},
                    "scaling": {"n_values": [4], "regime": "critical", "lambda": 1.0},
                    "initial": {"kind": "chaotic", "family": {"kind": "uniform"}},
                    "k_max": 1,
                    "radius": 1,
                    "t_grid": [1.0],
                    "stationary": {"k_max": k_max},
                    "density": {"points": points},
                    "reports": []
                })
                .to_string(),
            )?;
            // The uniform generator is a stand-in; densities only need m2.
            let gen = match m2.rational_parts() {
                Some((1, 12)) => clmf::interaction::InteractionGenerator::uniform(),
                _ => clmf::interaction::InteractionGenerator::laplace((m2.value() / 2.0).sqrt()),
            };
            pipelines::run_density(&config, &gen, &mut dir)?;
            dir.finalize(&args.to_string(), &args)?;
            Ok(true)
        }
        Command::Evolve(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            pipelines::run_evolve(&loaded.config, &gen, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(true)
        }
        Command::EvolveFinite(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            pipelines::run_evolve_finite(&loaded.config, &gen, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(true)
        }
        Command::Simulate(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            pipelines::run_simulate(&loaded.config, &gen, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(true)
        }
        Command::Compare(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            let pass = pipelines::run_compare(&loaded.config, &gen, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(pass)
        }
        Command::CheckOrder { marginals, profile, tol, out } => {
            let mut dir = OutputDir::create(&resolve_out(out, None))?;
            let pass = pipelines::check_order_files(&marginals, &profile, tol, &mut dir)?;
            let args = serde_json::json!({
                "marginals": marginals, "profile": profile, "tol": tol
            });
            dir.finalize(&args.to_string(), &args)?;
            Ok(pass)
        }
        Command::VerifyBounds(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            let pass = pipelines::run_verify_bounds(&loaded.config, &gen, &mut loaded.out)?;
            finalize(loaded)?;
            Ok(pass)
        }
        Command::Constants(common) => {
            let mut loaded = load(&common)?;
            let gen = loaded.config.generator.build()?;
            let l = loaded.config.bounds.as_ref().map(|b| b.l).unwrap_or(4);
            for &n in &loaded.config.scaling.n_values {
                let sched = loaded.config.scaling.schedule(n)?;
                let ledger =
                    clmf::bounds::constants_ledger(&gen, &sched, loaded.config.k_max, l)?;
                println!("{}", artifacts::to_json_string(&ledger)?);
                loaded
                    .out
                    .write_json(&format!("constants_N{n}.json"), &ledger)?;
            }
            finalize(loaded)?;
            Ok(true)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => std::process::exit(0),
        Ok(false) => {
            eprintln!("one or more asserted checks failed");
            std::process::exit(1);
        }
        Err(err) => {
            let code = if is_schema_error(&err) { 2 } else { 1 };
            eprintln!("error: {err:#}");
            std::process::exit(code);
        }
    }
}
