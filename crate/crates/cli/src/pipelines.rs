//! Report pipelines behind the subcommands and `run`.

use crate::artifacts::{estimates_csv, snapshots_to_bytes, OutputDir};
use crate::config::ExperimentConfig;
use anyhow::{bail, Context, Result};
use clmf::bounds::{constants_ledger, finite_distance_check, limit_distance_check};
use clmf::finite::evolve_finite_marginal;
use clmf::interaction::InteractionGenerator;
use clmf::limit::{
    evolve_limit_marginal, h_density, stationary_hierarchy, LimitMarginalSolution, M2,
};
use clmf::partial_order::{
    check_partial_order_factorization, PartialOrderProfile, ProfileOrder,
};
use clmf::particle::{compare_to_exact, empirical_coefficients, simulate, InitialSampler};
use clmf::spectral::{density_csv, SpectralCoefficients};
use serde_json::json;

fn theta_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / points as f64)
        .collect()
}

pub fn run_stationary(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<()> {
    let (k_max, radii) = match &config.stationary {
        Some(s) => (s.k_max, s.radii.clone()),
        None => (config.k_max, None),
    };
    stationary_files(k_max, gen.m2_exact(), radii.as_deref(), out)
}

/// Shared by the `stationary` report and subcommand.
pub fn stationary_files(
    k_max: usize,
    m2: M2,
    radii: Option<&[i32]>,
    out: &mut OutputDir,
) -> Result<()> {
    let hier = stationary_hierarchy(k_max, m2, radii)?;
    let mut max_radius = 0i32;
    for order in &hier.orders {
        out.write_json(&format!("f_infty_k{}.json", order.k), &order.f_infty.to_json())?;
        out.write_json(&format!("nu_k{}.json", order.k), &order.nu.to_json())?;
        max_radius = max_radius.max(order.f_infty.n_max());
    }
    // Ready-to-use profile for `check-order`: uniform leader law, hierarchy
    // deviations. The leader tensor covers every frequency sum the checks
    // can request.
    let eta_radius = (k_max as i32) * max_radius;
    let profile_orders: Vec<serde_json::Value> = (1..=k_max)
        .map(|k| {
            let eta = SpectralCoefficients::uniform(1, eta_radius);
            json!({
                "k": k,
                "eta": eta.to_json(),
                "nu": (k >= 2).then(|| hier.order(k - 1).nu.to_json()),
            })
        })
        .collect();
    out.write_json("stationary_profile.json", &json!({ "orders": profile_orders }))?;
    Ok(())
}

pub fn run_density(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<()> {
    let density = config.density.clone().unwrap_or_else(|| crate::config::DensityConfig {
        points: 1024,
        tolerance: 1e-8,
    });
    let m2 = gen.m2();
    let grid = theta_grid(density.points);
    let values = h_density(m2, &grid, density.tolerance);
    let rows: Vec<Vec<f64>> = grid.iter().map(|&t| vec![t]).collect();
    out.write_text("h_density.csv", &density_csv(&rows, &values))?;

    let k_max = config.stationary.as_ref().map(|s| s.k_max).unwrap_or(2).min(3);
    let hier = stationary_hierarchy(k_max, gen.m2_exact(), None)?;
    for k in 1..=k_max {
        let side = (density.points as f64).powf(1.0 / k as f64).round() as usize;
        let side = side.clamp(9, 1024);
        let axis = theta_grid(side);
        let mut grid = Vec::new();
        let mut stack = vec![0usize; k];
        loop {
            grid.push(stack.iter().map(|&i| axis[i]).collect::<Vec<f64>>());
            let mut d = k;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                stack[d] += 1;
                if stack[d] < side {
                    break;
                }
                stack[d] = 0;
            }
            if stack.iter().all(|&i| i == 0) {
                break;
            }
        }
        // Plain partial sums; truncation diagnostics go to the meta file
        // rather than gating the report.
        let eval = hier.order(k).nu.density_eval(&grid, 1e-6)?;
        let origin = hier.order(k).nu.density_eval(&[vec![0.0; k]], 1e-6)?.values[0];
        let min_value = eval.values.iter().cloned().fold(f64::INFINITY, f64::min);
        out.write_text(&format!("nu_density_k{k}.csv"), &density_csv(&grid, &eval.values))?;
        out.write_json(
            &format!("nu_density_k{k}_meta.json"),
            &json!({
                "k": k,
                "at_origin": origin,
                "min_value": min_value,
                "tail_estimate": eval.boundary_shell_mass * hier.order(k).nu.n_max() as f64,
            }),
        )?;
    }
    Ok(())
}

fn ordered_t_grid(config: &ExperimentConfig) -> Vec<f64> {
    let mut grid = config.t_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

pub fn run_evolve(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<LimitMarginalSolution> {
    let init = config.initial.build()?;
    let sol = evolve_limit_marginal(
        &init,
        gen.m2_exact(),
        config.scaling.lambda,
        config.k_max,
        config.radius,
    )?;
    for order in 1..=config.k_max {
        for (i, &t) in ordered_t_grid(config).iter().enumerate() {
            let tensor = sol.eval(order, t)?;
            out.write_json(&format!("evolve_limit_k{order}_t{i}.json"), &tensor.to_json())?;
        }
    }
    out.write_json(
        &format!("evolve_limit_terms_k{}.json", config.k_max),
        &trajectory_audit(config.k_max, config.radius, |idx| sol.poly(config.k_max, idx)),
    )?;
    let m2 = gen.m2_exact();
    let truncation = json!({
        "ell_product": clmf::limit::ell_products(config.k_max, &m2).last(),
        "boundary_sup": ordered_t_grid(config)
            .iter()
            .map(|&t| (t, sol.boundary_sup(config.k_max, t)))
            .collect::<Vec<_>>(),
    });
    out.write_json("evolve_limit_truncation.json", &truncation)?;
    Ok(sol)
}

fn trajectory_audit<'a>(
    k: usize,
    radius: i32,
    poly: impl Fn(&[i64]) -> Option<&'a clmf::spectral::ExpPolynomial>,
) -> serde_json::Value {
    let mut entries = Vec::new();
    for idx in clmf::hierarchy::cube_indices(k, radius) {
        if let Some(p) = poly(&idx) {
            entries.push(json!({
                "index": idx,
                "terms": p.terms(),
            }));
        }
    }
    json!(entries)
}

pub fn run_evolve_finite(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<()> {
    let init = config.initial.build()?;
    for &n in &config.scaling.n_values {
        let sched = config.scaling.schedule(n)?;
        let sol = evolve_finite_marginal(&init, &sched, gen, config.k_max, config.radius)?;
        for order in 1..=config.k_max {
            for (i, &t) in ordered_t_grid(config).iter().enumerate() {
                let tensor = sol.eval(order, t)?;
                out.write_json(
                    &format!("evolve_finite_N{n}_k{order}_t{i}.json"),
                    &tensor.to_json(),
                )?;
            }
        }
        out.write_json(
            &format!("evolve_finite_terms_N{n}_k{}.json", config.k_max),
            &trajectory_audit(config.k_max, config.radius, |idx| sol.poly(config.k_max, idx)),
        )?;
        let truncation = json!({
            "boundary_sup": ordered_t_grid(config)
                .iter()
                .map(|&t| (t, sol.boundary_sup(config.k_max, t)))
                .collect::<Vec<_>>(),
        });
        out.write_json(&format!("evolve_finite_truncation_N{n}.json"), &truncation)?;
    }
    Ok(())
}

fn initial_sampler(config: &ExperimentConfig) -> Result<InitialSampler> {
    use crate::config::{InitialConfig, OneDimSpec};
    let table_of = |m2: f64| {
        let grid = theta_grid(4097);
        let values = h_density(m2, &grid, 1e-10);
        clmf::particle::DensityTable::from_values(grid, values)
    };
    Ok(match &config.initial {
        InitialConfig::Chaotic { family } => match family {
            OneDimSpec::Uniform => InitialSampler::UniformIid,
            OneDimSpec::HKernel { m2 } => InitialSampler::DensityIid(table_of(*m2)),
            OneDimSpec::PointMass { theta } => {
                // iid point masses coincide with an ordered point mass
                InitialSampler::Ordered(clmf::particle::CommonDraw::PointMass(*theta))
            }
            OneDimSpec::Tabulated { .. } => {
                bail!("simulation from tabulated spectral initial data is not supported; supply a density")
            }
        },
        InitialConfig::Ordered { family } => InitialSampler::Ordered(match family {
            OneDimSpec::Uniform => clmf::particle::CommonDraw::Uniform,
            OneDimSpec::PointMass { theta } => clmf::particle::CommonDraw::PointMass(*theta),
            OneDimSpec::HKernel { m2 } => clmf::particle::CommonDraw::Density(table_of(*m2)),
            OneDimSpec::Tabulated { .. } => {
                bail!("simulation from tabulated spectral initial data is not supported; supply a density")
            }
        }),
        InitialConfig::Tensors { .. } => {
            bail!("simulation needs an analytic initial sampler, not raw tensors")
        }
    })
}

pub fn run_simulate(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<()> {
    let mc = config.mc.as_ref().context("simulate needs an mc section")?;
    let sampler = initial_sampler(config)?;
    let t_grid = ordered_t_grid(config);
    let horizon = mc.horizon.unwrap_or_else(|| {
        t_grid.iter().copied().fold(0.0, f64::max).max(1e-9)
    });
    let k = mc.indices[0].len();
    for &n in &config.scaling.n_values {
        let sched = config.scaling.schedule(n)?;
        let output = simulate(&sched, gen, &sampler, horizon, &t_grid, mc.runs, config.seed)?;
        out.write_bytes(&format!("snapshots_N{n}.bin"), &snapshots_to_bytes(&output.runs))?;
        out.write_json(
            &format!("snapshots_N{n}_manifest.json"),
            &json!({
                "N": n,
                "seed": config.seed,
                "sched": sched,
                "t_grid": output.t_grid,
                "runs": mc.runs,
                "layout": "run-major, then snapshot, then particle; f64 little-endian",
            }),
        )?;
        let estimates = empirical_coefficients(&output, k, &mc.indices, mc.tuple_samples, config.seed)?;
        out.write_text(&format!("estimates_N{n}.csv"), &estimates_csv(&estimates, k))?;
    }
    Ok(())
}

pub fn run_compare(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<bool> {
    let mc = config.mc.as_ref().context("compare needs an mc section")?;
    let sampler = initial_sampler(config)?;
    let init = config.initial.build()?;
    let t_grid = ordered_t_grid(config);
    let horizon = mc.horizon.unwrap_or_else(|| {
        t_grid.iter().copied().fold(0.0, f64::max).max(1e-9)
    });
    let k = mc.indices[0].len();
    let reach = mc
        .indices
        .iter()
        .flat_map(|i| i.iter().map(|n| n.unsigned_abs()))
        .max()
        .unwrap_or(0) as i32;
    let radius = config.radius.max(reach);
    let z = config.bounds.as_ref().map(|b| b.z).unwrap_or(4.0);
    let mut all_pass = true;
    for &n in &config.scaling.n_values {
        let sched = config.scaling.schedule(n)?;
        let output = simulate(&sched, gen, &sampler, horizon, &t_grid, mc.runs, config.seed)?;
        let estimates = empirical_coefficients(&output, k, &mc.indices, mc.tuple_samples, config.seed)?;
        let exact = evolve_finite_marginal(&init, &sched, gen, k, radius)?;
        let report = compare_to_exact(&estimates, &exact, z)?;
        all_pass &= report.pass_rate >= 0.95;
        out.write_json(&format!("compare_N{n}.json"), &report)?;
    }
    Ok(all_pass)
}

fn profile_from_json(value: &serde_json::Value) -> Result<PartialOrderProfile> {
    let orders = value
        .get("orders")
        .and_then(|o| o.as_array())
        .context("profile JSON needs an orders array")?;
    let mut parsed = Vec::new();
    for entry in orders {
        let k = entry
            .get("k")
            .and_then(|k| k.as_u64())
            .context("profile order needs integer k")? as usize;
        let eta = SpectralCoefficients::from_json(
            entry.get("eta").context("profile order needs eta")?,
        )?;
        let nu = match entry.get("nu") {
            Some(serde_json::Value::Null) | None => None,
            Some(v) => Some(SpectralCoefficients::from_json(v)?),
        };
        parsed.push(ProfileOrder { k, eta, nu });
    }
    Ok(PartialOrderProfile { orders: parsed })
}

pub fn check_order_files(
    marginal_paths: &[String],
    profile_path: &str,
    tol: f64,
    out: &mut OutputDir,
) -> Result<bool> {
    let mut family = Vec::new();
    for path in marginal_paths {
        let value: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        )?;
        family.push(SpectralCoefficients::from_json(&value)?);
    }
    let profile_value: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(profile_path).with_context(|| format!("reading {profile_path}"))?,
    )?;
    let profile = profile_from_json(&profile_value)?;
    let report = check_partial_order_factorization(&family, &profile, tol)?;
    let pass = report.pass;
    out.write_json("check_order.json", &report)?;
    Ok(pass)
}

pub fn run_check_order(config: &ExperimentConfig, out: &mut OutputDir) -> Result<bool> {
    let section = config
        .check_order
        .as_ref()
        .context("check-order needs a check_order section")?;
    check_order_files(
        &section.marginal_paths,
        &section.profile_path,
        section.tolerance,
        out,
    )
}

pub fn run_verify_bounds(config: &ExperimentConfig, gen: &InteractionGenerator, out: &mut OutputDir) -> Result<bool> {
    let l = config.bounds.as_ref().map(|b| b.l).unwrap_or(4);
    let k = config.k_max;
    let init = config.initial.build()?;
    let t_grid: Vec<f64> = ordered_t_grid(config).into_iter().filter(|&t| t > 0.0).collect();
    if t_grid.is_empty() {
        bail!("verify-bounds needs at least one positive time in t_grid");
    }
    let radii: Vec<i32> = (1..=k)
        .map(|r| clmf::limit::default_radius(r).max(config.radius))
        .collect();
    let hier = stationary_hierarchy(k, gen.m2_exact(), Some(&radii))?;
    let lim = evolve_limit_marginal(&init, gen.m2_exact(), config.scaling.lambda, k, config.radius)?;
    let mut all_pass = true;
    for &n in &config.scaling.n_values {
        let sched = config.scaling.schedule(n)?;
        let ledger = constants_ledger(gen, &sched, k, l)?;
        out.write_json(&format!("constants_N{n}.json"), &ledger)?;
        let limit_report = limit_distance_check(&lim, &hier, &ledger, &t_grid)?;
        all_pass &= limit_report.pass;
        out.write_json(&format!("bound_limit_N{n}.json"), &limit_report)?;
        out.write_text(&format!("bound_limit_N{n}.csv"), &limit_report.to_csv())?;
        let fin = evolve_finite_marginal(&init, &sched, gen, k, config.radius)?;
        let finite_report = finite_distance_check(&fin, &lim, &hier, &ledger, &t_grid)?;
        if !finite_report.informational {
            all_pass &= finite_report.pass;
        }
        out.write_json(&format!("bound_finite_N{n}.json"), &finite_report)?;
        out.write_text(&format!("bound_finite_N{n}.csv"), &finite_report.to_csv())?;
    }
    Ok(all_pass)
}

/// Execute every report listed in the config. Returns false when an
/// inequality pipeline reported a hard (asserted) violation.
pub fn run_all(config: &ExperimentConfig, out: &mut OutputDir) -> Result<bool> {
    let gen = config.generator.build()?;
    let mut all_pass = true;
    for report in &config.reports {
        match report.as_str() {
            "stationary" => run_stationary(config, &gen, out)?,
            "density" => run_density(config, &gen, out)?,
            "evolve" => {
                run_evolve(config, &gen, out)?;
            }
            "evolve-finite" => run_evolve_finite(config, &gen, out)?,
            "simulate" => run_simulate(config, &gen, out)?,
            "compare" => all_pass &= run_compare(config, &gen, out)?,
            "check-order" => all_pass &= run_check_order(config, out)?,
            "verify-bounds" => all_pass &= run_verify_bounds(config, &gen, out)?,
            other => bail!("unknown report {other}"),
        }
    }
    Ok(all_pass)
}

/// Parse `m2` given as `p/q`, an integer, or a decimal.
pub fn parse_m2(text: &str) -> Result<M2> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse()?;
        let den: i64 = den.trim().parse()?;
        if num <= 0 || den <= 0 {
            bail!("m2 must be positive");
        }
        return Ok(M2::rational(num, den));
    }
    if let Ok(int) = text.parse::<i64>() {
        if int <= 0 {
            bail!("m2 must be positive");
        }
        return Ok(M2::rational(int, 1));
    }
    let value: f64 = text.parse()?;
    if value <= 0.0 {
        bail!("m2 must be positive");
    }
    Ok(M2::from_f64(value))
}
