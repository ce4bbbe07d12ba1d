//! Out-of-sample evaluation of hardening plans and parameter sweeps.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::formulations::{
    add_allocation, add_squares, solve_formulation, Formulation, SdduScenarioSet, SquareEncoding,
};
use crate::instance::{generate, GenConfig, Instance};
use crate::milp::{LinExpr, MilpModel, Sense};
use crate::plan::{Allocation, HardeningPlan};
use crate::rng::{PortableRng, Stream};
use crate::solver::{solve, SolveStatus, SolverConfig};

/// Realised deviation fractions `g`, one per link.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub g: Vec<f64>,
}

impl Scenario {
    pub fn check(&self, inst: &Instance, plan: &HardeningPlan) -> std::result::Result<(), String> {
        if self.g.len() != inst.num_links() {
            return Err(format!(
                "scenario has {} entries, expected {}",
                self.g.len(),
                inst.num_links()
            ));
        }
        let tol = 1e-9;
        for (l, &g) in self.g.iter().enumerate() {
            let ub = plan.deviation_cap(inst, l);
            if !(g >= 0.0 && g <= ub + tol) {
                return Err(format!("g[{l}] = {g} outside [0, {ub}]"));
            }
        }
        let total: f64 = self.g.iter().sum();
        let cap = inst.uncertainty_budget_ddu;
        if total > cap + tol * cap.max(1.0) {
            return Err(format!("sum of g is {total}, above the budget {cap}"));
        }
        Ok(())
    }

    /// Realised delay `d̄ + d̂(g + u x)` of a link carrying `x` units.
    pub fn delay(&self, inst: &Instance, link: usize, x: u32) -> f64 {
        inst.delay_min[link] + inst.delay_dev[link] * (self.g[link] + inst.workload_impact[link] * f64::from(x))
    }
}

/// Draws `g ~ U[0, ub]` per link, then scales the vector down onto `Σ g ≤ Γ2`.
/// The same seed yields the same underlying uniforms for every plan.
pub fn sample_scenarios(inst: &Instance, plan: &HardeningPlan, n: usize, seed: u64) -> Result<Vec<Scenario>> {
    if n == 0 {
        return Err(Error::InvalidArgument("scenario count must be positive".into()));
    }
    plan.check(inst).map_err(Error::InvalidArgument)?;
    let ub: Vec<f64> = (0..inst.num_links()).map(|l| plan.deviation_cap(inst, l)).collect();
    let cap = inst.uncertainty_budget_ddu;
    let mut rng = PortableRng::new(seed, Stream::Scenarios);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g: Vec<f64> = ub.iter().map(|&b| rng.unit() * b).collect();
        let total: f64 = g.iter().sum();
        if total > cap {
            let scale = if total > 0.0 { cap / total } else { 0.0 };
            g.iter_mut().for_each(|v| *v *= scale);
        }
        let s = Scenario { g };
        s.check(inst, plan)
            .map_err(|m| Error::Model(format!("sampler produced an invalid scenario: {m}")))?;
        out.push(s);
    }
    Ok(out)
}

/// `Σ h t + ρ Σ d^a x + Σ s w`.
pub fn actual_cost(inst: &Instance, plan: &HardeningPlan, alloc: &Allocation, scenario: &Scenario) -> f64 {
    let delay: f64 = (0..inst.num_links())
        .map(|l| scenario.delay(inst, l, alloc.x[l]) * f64::from(alloc.x[l]))
        .sum();
    plan.payment(inst) + inst.delay_penalty * delay + alloc.unmet_cost(inst)
}

/// Result of re-optimising the allocation in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ActualOutcome {
    pub allocation: Allocation,
    pub cost: f64,
    /// No allocation met the realised delay caps; cost is `Σ h t + Σ s λ`.
    pub infeasible: bool,
}

/// Builds the allocation model for one realised scenario.
pub fn actual_allocation_model(
    inst: &Instance,
    plan: &HardeningPlan,
    scenario: &Scenario,
) -> Result<(MilpModel, Vec<crate::milp::VarRef>, Vec<crate::milp::VarRef>)> {
    let mut model = MilpModel::new("actual");
    let (x, w) = add_allocation(&mut model, inst, "")?;
    let squares = add_squares(&mut model, inst, &x, "", SquareEncoding::default())?;
    let rho = inst.delay_penalty;
    let mut obj = LinExpr::constant(plan.payment(inst));
    for (i, &wv) in w.iter().enumerate() {
        obj.add_term(wv, inst.unmet_penalty[i]);
    }
    for (l, &xv) in x.iter().enumerate() {
        let base = inst.delay_min[l] + inst.delay_dev[l] * scenario.g[l];
        obj.add_term(xv, rho * base);
        obj.add_scaled(&squares[l], rho * inst.delay_dev[l] * inst.workload_impact[l]);
    }
    for i in 0..inst.num_areas {
        if inst.demand[i] == 0 {
            continue;
        }
        let lambda = f64::from(inst.demand[i]);
        let mut row = LinExpr::new();
        for j in 0..inst.num_nodes {
            let l = inst.link(i, j);
            let base = inst.delay_min[l] + inst.delay_dev[l] * scenario.g[l];
            row.add_term(x[l], base / lambda);
            row.add_scaled(&squares[l], inst.delay_dev[l] * inst.workload_impact[l] / lambda);
        }
        model.add_constr(row, Sense::Le, inst.delay_cap[i], format!("delay_{i}"))?;
    }
    model.set_objective(obj)?;
    Ok((model, x, w))
}

/// Cheapest allocation under the realised delays of `scenario`.
pub fn actual_allocation(
    inst: &Instance,
    plan: &HardeningPlan,
    scenario: &Scenario,
    config: &SolverConfig,
) -> Result<ActualOutcome> {
    scenario.check(inst, plan).map_err(Error::InvalidArgument)?;
    if inst.total_demand() == 0 {
        let allocation = Allocation {
            x: vec![0; inst.num_links()],
            w: vec![0; inst.num_areas],
        };
        let cost = actual_cost(inst, plan, &allocation, scenario);
        return Ok(ActualOutcome {
            allocation,
            cost,
            infeasible: false,
        });
    }
    let (model, x, w) = actual_allocation_model(inst, plan, scenario)?;
    let result = solve(&model, config)?;
    match result.status {
        SolveStatus::Infeasible => Ok(ActualOutcome {
            allocation: Allocation {
                x: vec![0; inst.num_links()],
                w: inst.demand.clone(),
            },
            cost: plan.payment(inst)
                + inst
                    .demand
                    .iter()
                    .zip(&inst.unmet_penalty)
                    .map(|(&d, &s)| f64::from(d) * s)
                    .sum::<f64>(),
            infeasible: true,
        }),
        _ => {
            let values = result.require_values()?;
            let get = |v: crate::milp::VarRef| -> Result<u32> {
                let raw = values[v.index()];
                let r = raw.round();
                if (raw - r).abs() > 1e-6 || r < 0.0 {
                    return Err(Error::CorruptSolution(format!(
                        "allocation value {raw} is not a nonnegative integer"
                    )));
                }
                Ok(r as u32)
            };
            let allocation = Allocation {
                x: x.iter().map(|&v| get(v)).collect::<Result<_>>()?,
                w: w.iter().map(|&v| get(v)).collect::<Result<_>>()?,
            };
            allocation.check(inst).map_err(Error::CorruptSolution)?;
            let cost = actual_cost(inst, plan, &allocation, scenario);
            Ok(ActualOutcome {
                allocation,
                cost,
                infeasible: false,
            })
        }
    }
}

/// Random plan: repeatedly harden a random unhardened link at a random
/// affordable level until nothing fits the remaining budget.
pub fn rand_hardening(inst: &Instance, seed: u64) -> HardeningPlan {
    let mut rng = PortableRng::new(seed, Stream::RandomHardening);
    let mut plan = HardeningPlan::none(inst);
    let mut left = inst.budget;
    let eps = 1e-9 * inst.budget.max(1.0);
    loop {
        let candidates: Vec<(usize, usize)> = (0..inst.num_links())
            .filter(|&l| plan.level(inst, l).is_none())
            .flat_map(|l| (0..inst.num_levels).map(move |r| (l, r)))
            .filter(|&(l, r)| inst.cost(l, r) <= left + eps)
            .collect();
        if candidates.is_empty() {
            return plan;
        }
        let (l, r) = candidates[rng.index(candidates.len())];
        plan.t[inst.level_index(l, r)] = 1;
        left -= inst.cost(l, r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Nh,
    Rand,
    Sddu,
    Rddu,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Nh, Scheme::Rand, Scheme::Sddu, Scheme::Rddu];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nh => "nh",
            Scheme::Rand => "rand",
            Scheme::Sddu => "sddu",
            Scheme::Rddu => "rddu",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}` (expected nh, rand, sddu or rddu)")))
    }
}

/// Mean, standard deviation and 5th/95th percentiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
}

impl Summary {
    /// Population standard deviation; percentiles by linear interpolation.
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                p5: f64::NAN,
                p95: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary {
            mean,
            std: var.sqrt(),
            p5: percentile(&sorted, 0.05),
            p95: percentile(&sorted, 0.95),
        }
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone)]
pub struct SchemeReport {
    pub scheme: Scheme,
    pub plan: Option<HardeningPlan>,
    pub payment: f64,
    pub outcomes: Vec<ActualOutcome>,
    /// Set when obtaining the plan or evaluating it failed.
    pub error: Option<String>,
}

impl SchemeReport {
    pub fn costs(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.cost).collect()
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.costs())
    }

    pub fn num_infeasible(&self) -> usize {
        self.outcomes.iter().filter(|o| o.infeasible).count()
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub num_scenarios: usize,
    pub seed: u64,
    pub schemes: Vec<SchemeReport>,
}

#[derive(Debug, Clone)]
pub struct EvaluationConfig {
    pub num_scenarios: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Scenario count of the stochastic benchmark model.
    pub sddu_scenarios: usize,
    /// Solver settings for the planning models.
    pub plan_solver: SolverConfig,
    /// Solver settings for the per-scenario allocation models.
    pub allocation_solver: SolverConfig,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            num_scenarios: 200,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            sddu_scenarios: 4,
            plan_solver: SolverConfig::sweep(),
            allocation_solver: SolverConfig::default(),
        }
    }
}

/// Plan a scheme would deploy.
pub fn scheme_plan(inst: &Instance, scheme: Scheme, config: &EvaluationConfig) -> Result<HardeningPlan> {
    match scheme {
        Scheme::Nh => Ok(HardeningPlan::none(inst)),
        Scheme::Rand => Ok(rand_hardening(inst, config.seed)),
        Scheme::Rddu => Ok(solve_formulation(inst, Formulation::Rddu, None, &config.plan_solver)?
            .solution
            .plan),
        Scheme::Sddu => {
            let scen = SdduScenarioSet::uniform(config.sddu_scenarios, config.seed)?;
            Ok(
                solve_formulation(inst, Formulation::Sddu, Some(&scen), &config.plan_solver)?
                    .solution
                    .plan,
            )
        }
    }
}

/// Evaluates each scheme's plan on its own scenario set, all drawn from the
/// same underlying uniforms.
pub fn compare_schemes(inst: &Instance, config: &EvaluationConfig) -> Result<EvaluationReport> {
    if config.num_scenarios == 0 {
        return Err(Error::InvalidArgument("scenario count must be positive".into()));
    }
    let mut schemes = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let start = Instant::now();
        let evaluated = scheme_plan(inst, scheme, config).and_then(|plan| {
            let scenarios = sample_scenarios(inst, &plan, config.num_scenarios, config.seed)?;
            let outcomes = scenarios
                .iter()
                .map(|s| actual_allocation(inst, &plan, s, &config.allocation_solver))
                .collect::<Result<Vec<_>>>()?;
            Ok((plan, outcomes))
        });
        let report = match evaluated {
            Ok((plan, outcomes)) => SchemeReport {
                scheme,
                payment: plan.payment(inst),
                plan: Some(plan),
                outcomes,
                error: None,
            },
            Err(e) => {
                log::warn!("scheme {scheme} failed: {e}");
                SchemeReport {
                    scheme,
                    plan: None,
                    payment: f64::NAN,
                    outcomes: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        };
        log::info!("scheme {scheme} evaluated in {:.1}s", start.elapsed().as_secs_f64());
        schemes.push(report);
    }
    Ok(EvaluationReport {
        num_scenarios: config.num_scenarios,
        seed: config.seed,
        schemes,
    })
}

impl EvaluationReport {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeReport> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    /// One row per scheme.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("scheme,payment,mean,std,p5,p95,scenarios,infeasible,error\n");
        for s in &self.schemes {
            let m = s.summary();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.scheme,
                s.payment,
                m.mean,
                m.std,
                m.p5,
                m.p95,
                s.outcomes.len(),
                s.num_infeasible(),
                s.error.as_deref().unwrap_or("").replace(',', ";")
            );
        }
        out
    }

    /// One row per scheme and scenario.
    pub fn costs_csv(&self) -> String {
        let mut out = String::from("scheme,scenario,cost,infeasible\n");
        for s in &self.schemes {
            for (k, o) in s.outcomes.iter().enumerate() {
                let _ = writeln!(out, "{},{k},{},{}", s.scheme, o.cost, u8::from(o.infeasible));
            }
        }
        out
    }

    /// Writes `<prefix>_summary.csv` and `<prefix>_costs.csv`.
    pub fn write(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref().display().to_string();
        for (suffix, text) in [("summary", self.summary_csv()), ("costs", self.costs_csv())] {
            let path = format!("{prefix}_{suffix}.csv");
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Budget,
    Psi,
    Gamma2,
    Rho,
    DeltaGamma,
    Gamma1,
    U,
    Delta,
    Areas,
    Nodes,
}

impl SweepParam {
    pub const ALL: [SweepParam; 10] = [
        SweepParam::Budget,
        SweepParam::Psi,
        SweepParam::Gamma2,
        SweepParam::Rho,
        SweepParam::DeltaGamma,
        SweepParam::Gamma1,
        SweepParam::U,
        SweepParam::Delta,
        SweepParam::Areas,
        SweepParam::Nodes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Budget => "B",
            SweepParam::Psi => "psi",
            SweepParam::Gamma2 => "Gamma2",
            SweepParam::Rho => "rho",
            SweepParam::DeltaGamma => "dgamma",
            SweepParam::Gamma1 => "gamma1",
            SweepParam::U => "u",
            SweepParam::Delta => "Delta",
            SweepParam::Areas => "I",
            SweepParam::Nodes => "J",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            SweepParam::Budget => &["b", "budget"],
            SweepParam::Psi => &["psi"],
            SweepParam::Gamma2 => &["gamma2", "g2"],
            SweepParam::Rho => &["rho"],
            SweepParam::DeltaGamma => &["dgamma", "delta_gamma"],
            SweepParam::Gamma1 => &["gamma1", "gamma_level1"],
            SweepParam::U => &["u", "workload_impact"],
            SweepParam::Delta => &["delta", "delay_cap"],
            SweepParam::Areas => &["i", "areas"],
            SweepParam::Nodes => &["j", "nodes"],
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, SweepParam::Areas | SweepParam::Nodes)
    }

    /// Applies the value to a generator config.
    pub fn apply_config(self, cfg: &mut GenConfig, value: f64) -> Result<()> {
        match self {
            SweepParam::Budget => cfg.budget = value,
            SweepParam::Psi => cfg.psi = value,
            SweepParam::Gamma2 => cfg.uncertainty_budget_ddu = value,
            SweepParam::Rho => cfg.delay_penalty = value,
            SweepParam::DeltaGamma => cfg.delta_gamma = value,
            SweepParam::Gamma1 => cfg.gamma_level1 = value,
            SweepParam::U => cfg.workload_impact = value,
            SweepParam::Delta => cfg.delay_cap = value,
            SweepParam::Areas | SweepParam::Nodes => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "{} must be a positive integer, got {value}",
                        self.name()
                    )));
                }
                if self == SweepParam::Areas {
                    cfg.num_areas = value as usize;
                } else {
                    cfg.num_nodes = value as usize;
                }
            }
        }
        cfg.validate()
    }

    /// Applies the value to an existing instance. Hardening costs are assumed
    /// to carry a scale of 1, and impacts to be evenly spaced per link.
    pub fn apply_instance(self, inst: &mut Instance, value: f64) -> Result<()> {
        let nr = inst.num_levels;
        match self {
            SweepParam::Budget => inst.budget = value,
            SweepParam::Psi => inst.harden_cost.iter_mut().for_each(|h| *h *= value),
            SweepParam::Gamma2 => inst.uncertainty_budget_ddu = value,
            SweepParam::Rho => inst.delay_penalty = value,
            SweepParam::DeltaGamma | SweepParam::Gamma1 => {
                for l in 0..inst.num_links() {
                    let g1 = inst.impact(l, 0);
                    let step = if nr > 1 { inst.impact(l, 1) - g1 } else { 0.0 };
                    let (g1, step) = if self == SweepParam::DeltaGamma {
                        (g1, value)
                    } else {
                        (value, step)
                    };
                    for r in 0..nr {
                        let k = inst.level_index(l, r);
                        inst.harden_impact[k] = g1 + r as f64 * step;
                    }
                }
            }
            SweepParam::U => inst.workload_impact.iter_mut().for_each(|u| *u = value),
            SweepParam::Delta => inst.delay_cap.iter_mut().for_each(|d| *d = value),
            SweepParam::Areas | SweepParam::Nodes => {
                return Err(Error::InvalidArgument(format!(
                    "sweeping {} needs a generator config, not an instance file",
                    self.name()
                )))
            }
        }
        inst.ensure_valid()
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SweepParam::ALL
            .into_iter()
            .find(|p| p.aliases().contains(&lower.as_str()))
            .ok_or_else(|| {
                let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown sweep parameter `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Starting point of a sweep.
#[derive(Debug, Clone)]
pub enum SweepBase {
    Instance(Instance),
    Config(GenConfig),
}

impl SweepBase {
    pub fn instance_at(&self, param: SweepParam, value: f64) -> Result<Instance> {
        match self {
            SweepBase::Instance(inst) => {
                let mut inst = inst.clone();
                param.apply_instance(&mut inst, value)?;
                Ok(inst)
            }
            SweepBase::Config(cfg) => {
                let mut cfg = cfg.clone();
                param.apply_config(&mut cfg, value)?;
                generate(&cfg)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub formulation: Formulation,
    pub status: String,
    pub objective: f64,
    pub payment: f64,
    pub gap: f64,
    pub runtime: f64,
    pub rows: usize,
    pub cols: usize,
    pub binaries: usize,
    pub num_hardened: usize,
}

/// Solves each formulation at every grid point.
pub fn sweep(
    base: &SweepBase,
    param: SweepParam,
    grid: &[f64],
    formulations: &[Formulation],
    config: &SolverConfig,
    sddu_scenarios: Option<&SdduScenarioSet>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len() * formulations.len());
    for &value in grid {
        let inst = base.instance_at(param, value)?;
        for &f in formulations {
            let solved = solve_formulation(&inst, f, sddu_scenarios, config);
            let row = match solved {
                Ok(s) => SweepRow {
                    param,
                    value,
                    formulation: f,
                    status: s.result.status.to_string(),
                    objective: s.solution.objective,
                    payment: s.solution.hardening_payment,
                    gap: s.result.gap(),
                    runtime: s.result.runtime,
                    rows: s.stats.rows,
                    cols: s.stats.cols,
                    binaries: s.stats.binaries,
                    num_hardened: s.solution.plan.num_hardened(&inst),
                },
                Err(e @ (Error::Infeasible(_) | Error::Solver(_))) => {
                    log::warn!("{param}={value} {f}: {e}");
                    let stats = crate::formulations::build(&inst, f, sddu_scenarios)?.model.stats();
                    SweepRow {
                        param,
                        value,
                        formulation: f,
                        status: if matches!(e, Error::Infeasible(_)) {
                            "infeasible"
                        } else {
                            "error"
                        }
                        .into(),
                        objective: f64::NAN,
                        payment: f64::NAN,
                        gap: f64::NAN,
                        runtime: f64::NAN,
                        rows: stats.rows,
                        cols: stats.cols,
                        binaries: stats.binaries,
                        num_hardened: 0,
                    }
                }
                Err(e) => return Err(e),
            };
            log::info!(
                "{param}={value} {f}: {} objective {} in {:.2}s",
                row.status,
                row.objective,
                row.runtime
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Wide table: one row per grid point and formulation.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("param,value,formulation,status,objective,payment,gap,runtime,rows,cols,binaries,hardened\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.param,
            r.value,
            r.formulation,
            r.status,
            r.objective,
            r.payment,
            r.gap,
            r.runtime,
            r.rows,
            r.cols,
            r.binaries,
            r.num_hardened
        );
    }
    out
}

/// Long table for plotting: `param,value,formulation,metric,amount`.
pub fn sweep_long_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,formulation,metric,amount\n");
    for r in rows {
        for (metric, amount) in [
            ("total_cost", r.objective),
            ("payment", r.payment),
            ("runtime", r.runtime),
            ("rows", r.rows as f64),
            ("cols", r.cols as f64),
        ] {
            let _ = writeln!(out, "{},{},{},{metric},{amount}", r.param, r.value, r.formulation);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate;

    fn small() -> Instance {
        generate(&GenConfig {
            num_areas: 3,
            num_nodes: 3,
            num_levels: 3,
            demand_range: (2, 8),
            capacity_pool: vec![6, 10],
            ..GenConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn hardened_link_caps_deviation() {
        let inst = small();
        let plan = HardeningPlan::from_levels(&inst, &[(0, 2)]);
        let cap = 1.0 - inst.impact(0, 2);
        for s in sample_scenarios(&inst, &plan, 500, 9).unwrap() {
            assert!(s.g[0] <= cap + 1e-12);
        }
    }

    #[test]
    fn zero_budget_gives_zero_deviation() {
        let mut inst = small();
        inst.uncertainty_budget_ddu = 0.0;
        let plan = HardeningPlan::none(&inst);
        for s in sample_scenarios(&inst, &plan, 50, 2).unwrap() {
            assert!(s.g.iter().all(|&g| g == 0.0));
        }
        assert!(sample_scenarios(&inst, &plan, 0, 2).is_err());
    }

    #[test]
    fn rand_hardening_respects_budget() {
        let mut inst = small();
        inst.budget = 0.0;
        assert_eq!(rand_hardening(&inst, 1).num_hardened(&inst), 0);
        inst.budget = 1e6;
        let plan = rand_hardening(&inst, 1);
        assert_eq!(plan.num_hardened(&inst), inst.num_links());
        assert!(plan.check(&inst).is_ok());
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.p5 - 1.2).abs() < 1e-12);
        assert!((s.p95 - 4.8).abs() < 1e-12);
    }

    #[test]
    fn sweep_params_parse() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        assert!("alpha".parse::<SweepParam>().is_err());
        let mut inst = small();
        assert!(SweepParam::Areas.apply_instance(&mut inst, 3.0).is_err());
    }
}
