use hetcache_core::analytics::{
    association_matrix, total_sdp_general, total_sdp_interference_limited, SdpReport,
};
use hetcache_core::model::{validate_policy, watts_to_dbm};
use hetcache_core::optimizer::{
    baseline_popular, baseline_uniform, solve_p1, solve_p2_equivalent, P1Solution, SolveOptions,
};
use hetcache_core::quadrature::QuadratureSettings;
use hetcache_core::simulator::{estimate_sdp, SimSettings};
use hetcache_core::tradeoff::{
    cross_tier_curves, equivalent_cache_size, same_tier_density_curve, same_tier_power_curve,
    TradeoffCurve,
};
use hetcache_core::{CachingPolicy, ContentCatalog, NetworkConfig};
use serde::Serialize;

use crate::output::{emit, num, opt, Table};
use crate::spec::{
    CatalogSpec, Command, ExperimentSpec, NetworkSpec, PolicyChoice, PolicySpec, SweepParameter,
    Threshold, TradeoffLaw,
};
use crate::CliError;

pub fn execute(spec: &ExperimentSpec) -> Result<(), CliError> {
    let ctx = Context::new(spec)?;
    let outcome = match spec.command {
        Command::Eval => eval(&ctx)?,
        Command::Optimize => optimize(&ctx)?,
        Command::Simulate => simulate(&ctx)?,
        Command::Tradeoff => tradeoff(&ctx)?,
        Command::Sweep => sweep(&ctx)?,
        Command::Compare => compare(&ctx)?,
    };
    emit(&outcome.table, &outcome.summary, spec.output.as_deref())?;
    outcome.status
}

struct Outcome {
    table: Table,
    summary: Vec<String>,
    /// Reported after the table is written.
    status: Result<(), CliError>,
}

impl Outcome {
    fn ok(table: Table, summary: Vec<String>) -> Self {
        Outcome {
            table,
            summary,
            status: Ok(()),
        }
    }
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    config: NetworkConfig,
    catalog: ContentCatalog,
    solver: SolveOptions,
    quad: QuadratureSettings,
}

impl<'a> Context<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self, CliError> {
        let config = spec.network.build()?;
        let catalog = spec.catalog.build()?;
        config
            .check_catalog(&catalog)
            .map_err(|e| CliError::field("catalog", e))?;
        let solver = spec.solver.unwrap_or_default();
        solver.check().map_err(|e| CliError::field("solver", e))?;
        let quad = spec.quadrature.unwrap_or_default();
        quad.check().map_err(|e| CliError::field("quadrature", e))?;
        Ok(Context {
            spec,
            config,
            catalog,
            solver,
            quad,
        })
    }

    fn policy(&self) -> Result<(CachingPolicy, Option<P1Solution>), CliError> {
        let choice = self.spec.policy.clone().unwrap_or(PolicySpec::Uniform);
        if let Some(p) = choice.explicit() {
            let p = p?;
            let violations = validate_policy(&p, &self.config, &self.catalog)
                .map_err(|e| CliError::field("policy", e))?;
            if let Some(v) = violations.first() {
                return Err(CliError::Validation(format!(
                    "policy: {v:?} ({} violation(s))",
                    violations.len()
                )));
            }
            return Ok((p, None));
        }
        let choice = match choice {
            PolicySpec::Optimal => PolicyChoice::Optimal,
            PolicySpec::Popular => PolicyChoice::Popular,
            _ => PolicyChoice::Uniform,
        };
        resolve(choice, &self.config, &self.catalog, &self.solver)
    }

    /// SDP with the evaluator matching the configured noise.
    fn sdp(&self, config: &NetworkConfig, catalog: &ContentCatalog, policy: &CachingPolicy) -> Result<SdpReport, CliError> {
        if config.is_interference_limited() {
            total_sdp_interference_limited(config, catalog, policy)
        } else {
            total_sdp_general(config, catalog, policy, &self.quad)
        }
        .map_err(|e| CliError::field("sdp", e))
    }

    fn sim_settings(&self) -> Result<SimSettings, CliError> {
        let sim = self.spec.simulation.clone().unwrap_or_default();
        let seed = sim.seed.ok_or_else(|| {
            CliError::Validation("simulation.seed is required (or pass --seed)".into())
        })?;
        let defaults = SimSettings::new(seed);
        let s = SimSettings {
            window_side: sim.window_side.unwrap_or(defaults.window_side),
            realizations: sim.realizations.unwrap_or(defaults.realizations),
            seed,
            noise_power: None,
        };
        s.check().map_err(|e| CliError::field("simulation", e))?;
        Ok(s)
    }
}

fn resolve(
    choice: PolicyChoice,
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    solver: &SolveOptions,
) -> Result<(CachingPolicy, Option<P1Solution>), CliError> {
    match choice {
        PolicyChoice::Uniform => Ok((baseline_uniform(config, catalog)?, None)),
        PolicyChoice::Popular => Ok((baseline_popular(config, catalog)?, None)),
        PolicyChoice::Optimal => {
            let sol = solve_p1(config, catalog, solver).map_err(|e| CliError::field("solver", e))?;
            Ok((sol.policy.clone(), Some(sol)))
        }
    }
}

fn certified(sol: &P1Solution) -> Result<(), CliError> {
    if sol.certificate.certified() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "solver did not certify optimality: stationarity residual {:e}, budget residual {:e}",
            sol.certificate.stationarity_residual, sol.certificate.budget_residual
        )))
    }
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| num(*v)).collect();
    format!("[{}]", parts.join(", "))
}

fn eval(ctx: &Context) -> Result<Outcome, CliError> {
    let (policy, _) = ctx.policy()?;
    let report = ctx.sdp(&ctx.config, &ctx.catalog, &policy)?;
    let w = association_matrix(&ctx.config, &ctx.catalog, &policy)?;
    let f = ctx.catalog.popularity();
    let mut table = Table::new([
        "tier", "content", "popularity", "probability", "association", "delivery", "contribution",
    ]);
    for i in 0..ctx.config.num_tiers() {
        for j in 0..ctx.catalog.len() {
            let d = report.per_pair[i][j];
            table.push(vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(f[j]),
                num(policy.get(i, j)),
                num(w.get(i, j)),
                num(d),
                num(f[j] * d),
            ]);
        }
    }
    let summary = vec![
        format!("sdp: {}", num(report.total)),
        format!("mode: {}", report.mode.as_str()),
        format!("policy: {}", ctx.spec.policy.as_ref().map_or("uniform", |p| p.label())),
        format!("equivalent_cache_size: {}", num(equivalent_cache_size(&ctx.config))),
    ];
    Ok(Outcome::ok(table, summary))
}

fn optimize(ctx: &Context) -> Result<Outcome, CliError> {
    let (_, sol) = resolve(PolicyChoice::Optimal, &ctx.config, &ctx.catalog, &ctx.solver)?;
    let sol = sol.expect("optimal policy carries a solution");
    let f = ctx.catalog.popularity();
    let mut table = Table::new(["tier", "content", "popularity", "probability"]);
    for i in 0..ctx.config.num_tiers() {
        for j in 0..ctx.catalog.len() {
            table.push(vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(f[j]),
                num(sol.policy.get(i, j)),
            ]);
        }
    }
    let bound = solve_p2_equivalent(&ctx.config, &ctx.catalog).ok();
    let mut summary = vec![
        format!("sdp: {}", num(sol.objective)),
        format!("method: {}", label(&sol.method)),
        format!("iterations: {}", sol.iterations),
        format!("eta: {}", list(&sol.certificate.eta)),
        format!("stationarity_residual: {:e}", sol.certificate.stationarity_residual),
        format!("budget_residual: {:e}", sol.certificate.budget_residual),
        format!("certified: {}", sol.certificate.certified()),
        format!("equivalent_cache_size: {}", num(equivalent_cache_size(&ctx.config))),
    ];
    if let Some(b) = &bound {
        summary.push(format!("upper_bound: {}", num(b.bound)));
    }
    if !ctx.config.is_interference_limited() {
        let general = ctx.sdp(&ctx.config, &ctx.catalog, &sol.policy)?;
        summary.push(format!("sdp_with_noise: {}", num(general.total)));
    }
    Ok(Outcome {
        table,
        summary,
        status: certified(&sol),
    })
}

fn simulate(ctx: &Context) -> Result<Outcome, CliError> {
    let settings = ctx.sim_settings()?;
    let (policy, _) = ctx.policy()?;
    let est = estimate_sdp(&ctx.config, &ctx.catalog, &policy, &settings)
        .map_err(|e| CliError::field("simulation", e))?;
    let analytic = ctx.sdp(&ctx.config, &ctx.catalog, &policy)?;
    let mut table = Table::new([
        "tier",
        "content",
        "requests",
        "served",
        "successes",
        "association_frequency",
        "mean_serving_distance",
    ]);
    for i in 0..ctx.config.num_tiers() {
        for j in 0..ctx.catalog.len() {
            table.push(vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                est.requests[j].to_string(),
                est.associations[i][j].to_string(),
                est.pair_successes[i][j].to_string(),
                opt(est.association_frequency(i, j)),
                opt(est.mean_serving_distance(i, j)),
            ]);
        }
    }
    let summary = vec![
        format!("sdp_hat: {}", num(est.sdp_hat)),
        format!("stderr: {}", num(est.stderr)),
        format!("sdp_analytic: {}", num(analytic.total)),
        format!("realizations: {}", est.realizations),
        format!("seed: {}", settings.seed),
        format!("window_side: {}", num(settings.window_side)),
    ];
    Ok(Outcome::ok(table, summary))
}

fn tier_index(tier: usize, n: usize, field: &str) -> Result<usize, CliError> {
    if tier == 0 || tier > n {
        return Err(CliError::Validation(format!(
            "{field}: tier {tier} out of range 1..={n}"
        )));
    }
    Ok(tier - 1)
}

fn tradeoff(ctx: &Context) -> Result<Outcome, CliError> {
    let t = ctx
        .spec
        .tradeoff
        .as_ref()
        .ok_or_else(|| CliError::Validation("tradeoff section is required".into()))?;
    let n = ctx.config.num_tiers();
    let source = tier_index(t.source_tier, n, "tradeoff.source_tier")?;
    let cross = matches!(t.law, TradeoffLaw::CrossTierDensity | TradeoffLaw::CrossTierPower);
    let varied = match (cross, t.varied_tier) {
        (true, Some(v)) => tier_index(v, n, "tradeoff.varied_tier")?,
        (true, None) => {
            return Err(CliError::Validation(
                "tradeoff.varied_tier is required for cross-tier laws".into(),
            ))
        }
        (false, Some(v)) if v != t.source_tier => {
            return Err(CliError::Validation(
                "tradeoff.varied_tier must equal source_tier for same-tier laws".into(),
            ))
        }
        (false, _) => source,
    };
    let grid = t.grid.values("tradeoff.grid")?;

    let mut networks = Vec::new();
    if t.cases.is_empty() {
        networks.push(ctx.spec.network.clone());
    }
    for (k, case) in t.cases.iter().enumerate() {
        let field = format!("tradeoff.cases[{}]", k + 1);
        let idx = tier_index(case.tier, n, &field)?;
        let mut net = ctx.spec.network.clone();
        let tier = &mut net.tiers[idx];
        if let Some(d) = case.density {
            tier.density = d;
        }
        if let Some(p) = case.power {
            tier.power = p;
        }
        if let Some(q) = case.cache_size {
            tier.cache_size = q;
        }
        networks.push(net);
    }

    let mut curves: Vec<TradeoffCurve> = Vec::new();
    let mut summary = Vec::new();
    for (k, net) in networks.iter().enumerate() {
        let cfg = net.build()?;
        let target = t.target_q_e.unwrap_or_else(|| equivalent_cache_size(&cfg));
        let (curve, case) = match t.law {
            TradeoffLaw::SameTierDensity => (same_tier_density_curve(&cfg, source, target, &grid), None),
            TradeoffLaw::SameTierPower => (same_tier_power_curve(&cfg, source, target, &grid), None),
            TradeoffLaw::CrossTierDensity | TradeoffLaw::CrossTierPower => {
                match cross_tier_curves(&cfg, source, varied, target, &grid) {
                    Ok(c) if t.law == TradeoffLaw::CrossTierDensity => (Ok(c.density), Some(c.case)),
                    Ok(c) => (Ok(c.power), Some(c.case)),
                    Err(e) => (Err(e), None),
                }
            }
        };
        let curve = curve.map_err(|e| CliError::field("tradeoff", e))?;
        let c = &curve.constants;
        let ks: Vec<String> = [c.k1, c.k2, c.k3, c.k4, c.k5, c.k6]
            .iter()
            .enumerate()
            .filter_map(|(m, v)| v.map(|v| format!("K{}={}", m + 1, num(v))))
            .collect();
        let mut line = format!("case{}: target_q_e={} {}", k + 1, num(target), ks.join(" "));
        if let Some(iv) = &curve.validity_interval {
            line.push_str(&format!(
                " valid={}{}, {}{}",
                if iv.lo_closed { '[' } else { '(' },
                num(iv.lo),
                num(iv.hi),
                if iv.hi_closed { ']' } else { ')' }
            ));
        }
        if let Some(case) = case {
            line.push_str(&format!(" regime={}", label(&case)));
        }
        summary.push(line);
        curves.push(curve);
    }

    let density = matches!(t.law, TradeoffLaw::SameTierDensity | TradeoffLaw::CrossTierDensity);
    let symbol = if density { "lambda" } else { "S_dbm" };
    let mut header = vec![format!("Q{}", source + 1)];
    for k in 0..curves.len() {
        if curves.len() == 1 {
            header.push(format!("{symbol}{}", varied + 1));
        } else {
            header.push(format!("{symbol}{}_case{}", varied + 1, k + 1));
        }
    }
    header.push("flag".into());
    let mut table = Table::new(header);
    let mut cursors = vec![(0usize, 0usize); curves.len()];
    for &q in &grid {
        let mut row = vec![num(q)];
        let mut flags = Vec::new();
        for (k, curve) in curves.iter().enumerate() {
            let (pi, ri) = &mut cursors[k];
            if curve.points.get(*pi).is_some_and(|p| p.q == q) {
                let v = curve.points[*pi].value;
                row.push(num(if density { v } else { watts_to_dbm(v) }));
                *pi += 1;
            } else if curve.rejected.get(*ri).is_some_and(|r| r.q == q) {
                row.push(String::new());
                let reason = curve.rejected[*ri].reason.as_str();
                flags.push(if curves.len() == 1 {
                    reason.to_string()
                } else {
                    format!("case{}:{reason}", k + 1)
                });
                *ri += 1;
            } else {
                row.push(String::new());
            }
        }
        row.push(flags.join(";"));
        table.push(row);
    }
    Ok(Outcome::ok(table, summary))
}

fn apply_sweep(
    param: &SweepParameter,
    value: f64,
    net: &NetworkSpec,
    catalog: &CatalogSpec,
) -> Result<(NetworkSpec, CatalogSpec), CliError> {
    let mut net = net.clone();
    let mut catalog = catalog.clone();
    let n = net.tiers.len();
    match *param {
        SweepParameter::Gamma => match &mut catalog {
            CatalogSpec::Zipf { gamma, .. } => *gamma = value,
            CatalogSpec::Explicit(_) => {
                return Err(CliError::Validation(
                    "sweeping gamma needs a zipf catalog".into(),
                ))
            }
        },
        SweepParameter::PathLossExponent => net.path_loss_exponent = value,
        SweepParameter::SinrThresholdDb => net.sinr_threshold = Threshold::Db(value),
        SweepParameter::CacheSize { tier } => {
            net.tiers[tier_index(tier, n, "sweep.parameter")?].cache_size = value
        }
        SweepParameter::DensityK { tier, r } => {
            net.tiers[tier_index(tier, n, "sweep.parameter")?].density =
                crate::spec::Density::KOverPiR2 { k: value, r }
        }
        SweepParameter::PowerDbm { tier } => {
            net.tiers[tier_index(tier, n, "sweep.parameter")?].power = crate::spec::Power::Dbm(value)
        }
    }
    Ok((net, catalog))
}

fn sweep_name(param: &SweepParameter) -> String {
    match param {
        SweepParameter::Gamma => "gamma".into(),
        SweepParameter::PathLossExponent => "path_loss_exponent".into(),
        SweepParameter::SinrThresholdDb => "sinr_threshold_db".into(),
        SweepParameter::CacheSize { tier } => format!("Q{tier}"),
        SweepParameter::DensityK { tier, .. } => format!("lambda{tier}_k"),
        SweepParameter::PowerDbm { tier } => format!("S{tier}_dbm"),
    }
}

fn sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx
        .spec
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("sweep section is required".into()))?;
    if s.policies.is_empty() {
        return Err(CliError::Validation("sweep.policies is empty".into()));
    }
    let grid = s.grid.values("sweep.grid")?;
    let mut header = vec![sweep_name(&s.parameter), "q_e".into()];
    header.extend(s.policies.iter().map(|p| format!("sdp_{}", p.label())));
    header.push("bound".into());
    let mut table = Table::new(header);
    for &v in &grid {
        let (net, cat) = apply_sweep(&s.parameter, v, &ctx.spec.network, &ctx.spec.catalog)?;
        let cfg = net.build()?;
        let catalog = cat.build()?;
        cfg.check_catalog(&catalog)
            .map_err(|e| CliError::field("catalog", e))?;
        let mut row = vec![num(v), num(equivalent_cache_size(&cfg))];
        for p in &s.policies {
            let (policy, sol) = resolve(*p, &cfg, &catalog, &ctx.solver)?;
            if let Some(sol) = &sol {
                certified(sol)?;
            }
            row.push(num(ctx.sdp(&cfg, &catalog, &policy)?.total));
        }
        row.push(opt(solve_p2_equivalent(&cfg, &catalog).ok().map(|b| b.bound)));
        table.push(row);
    }
    let summary = vec![
        format!("parameter: {}", sweep_name(&s.parameter)),
        format!("points: {}", grid.len()),
    ];
    Ok(Outcome::ok(table, summary))
}

fn compare(ctx: &Context) -> Result<Outcome, CliError> {
    let c = ctx
        .spec
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Validation("compare section is required".into()))?;
    let size = ctx.spec.catalog.zipf_size().ok_or_else(|| {
        CliError::Validation("compare needs a zipf catalog".into())
    })?;
    let gammas = c.gammas.values("compare.gammas")?;
    let settings = if c.simulate {
        Some(ctx.sim_settings()?)
    } else {
        None
    };
    let mut table = Table::new([
        "gamma",
        "sdp_optimal",
        "sdp_popular",
        "sdp_uniform",
        "sdp_sim_optimal",
        "sim_stderr",
    ]);
    for &g in &gammas {
        let catalog = ContentCatalog::zipf(size, g).map_err(|e| CliError::field("compare.gammas", e))?;
        let mut row = vec![num(g)];
        let mut optimal = None;
        for p in [PolicyChoice::Optimal, PolicyChoice::Popular, PolicyChoice::Uniform] {
            let (policy, sol) = resolve(p, &ctx.config, &catalog, &ctx.solver)?;
            if let Some(sol) = &sol {
                certified(sol)?;
            }
            row.push(num(ctx.sdp(&ctx.config, &catalog, &policy)?.total));
            if p == PolicyChoice::Optimal {
                optimal = Some(policy);
            }
        }
        match &settings {
            Some(s) => {
                let policy = optimal.expect("optimal policy resolved");
                let est = estimate_sdp(&ctx.config, &catalog, &policy, s)
                    .map_err(|e| CliError::field("simulation", e))?;
                row.push(num(est.sdp_hat));
                row.push(num(est.stderr));
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        table.push(row);
    }
    let mut summary = vec![
        format!("catalog_size: {size}"),
        format!("equivalent_cache_size: {}", num(equivalent_cache_size(&ctx.config))),
    ];
    if let Some(s) = &settings {
        summary.push(format!("seed: {}", s.seed));
        summary.push(format!("realizations: {}", s.realizations));
    }
    Ok(Outcome::ok(table, summary))
}
