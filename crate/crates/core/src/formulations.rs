//! The hardening models as MILPs.
//!
//! | name    | hardening | delays                                   |
//! |---------|-----------|------------------------------------------|
//! | `det`   | yes       | nominal `d̄`                              |
//! | `nh`    | no        | nominal `d̄`                              |
//! | `ro-nh` | no        | budgeted set, `Γ1`, decision independent  |
//! | `rddu`  | yes       | decision-dependent set, big-M products   |
//! | `erddu` | yes       | decision-dependent set, `v = 1 - t` form |
//! | `sddu`  | yes       | sampled scenarios, expected cost         |
//!
//! The robust models dualize the inner maximisation of the objective and of
//! every area's delay row separately, each against the full `Σ g ≤ Γ2` set.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linearize::{
    binary_expand, linearize_square, mccormick_bin_cont, product_bin_int, square_envelope, square_secant_cuts,
};
use crate::milp::{LinExpr, MilpModel, ModelStats, Sense, VarRef, Variable};
use crate::plan::{Allocation, HardeningPlan, Solution};
use crate::rng::{PortableRng, Stream};
use crate::solver::{solve, SolverConfig, SolverResult};

/// Smallest big-M used, so links with `d̂ = 0` or `L = 0` still get a valid row.
const MIN_BIG_M: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Det,
    Nh,
    RoNh,
    Rddu,
    Erddu,
    Sddu,
}

impl Formulation {
    pub const ALL: [Formulation; 6] = [
        Formulation::Det,
        Formulation::Nh,
        Formulation::RoNh,
        Formulation::Rddu,
        Formulation::Erddu,
        Formulation::Sddu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Det => "det",
            Formulation::Nh => "nh",
            Formulation::RoNh => "ro-nh",
            Formulation::Rddu => "rddu",
            Formulation::Erddu => "erddu",
            Formulation::Sddu => "sddu",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown formulation `{s}` (expected one of det, nh, ro-nh, rddu, erddu, sddu)"
                ))
            })
    }
}

/// Scenario draws `ξ_n ∈ [0, 1]` with probabilities `p_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdduScenarioSet {
    draws: Vec<f64>,
    probs: Vec<f64>,
}

impl SdduScenarioSet {
    pub fn new(draws: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::InvalidArgument("scenario set is empty".into()));
        }
        if draws.len() != probs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} draws but {} probabilities",
                draws.len(),
                probs.len()
            )));
        }
        if let Some(d) = draws.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::InvalidArgument(format!("scenario draw {d} outside [0, 1]")));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("negative scenario probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { draws, probs })
    }

    /// `n` i.i.d. `U[0, 1]` draws with equal weight.
    pub fn uniform(n: usize, seed: u64) -> Result<Self> {
        let mut rng = PortableRng::new(seed, Stream::SdduDraws);
        let draws = (0..n).map(|_| rng.unit()).collect();
        Self::new(draws, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// How hardening decisions appear in a model.
#[derive(Debug, Clone)]
pub enum HardeningVars {
    None,
    /// `t[i][j][r]` binaries.
    Direct(Vec<VarRef>),
    /// `v = 1 - t` binaries.
    Complement(Vec<VarRef>),
}

/// A built model plus the handles needed to decode its solutions.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub formulation: Formulation,
    pub model: MilpModel,
    pub hardening: HardeningVars,
    /// Allocation of the model, or of the first scenario for `sddu`.
    pub x: Vec<VarRef>,
    pub w: Vec<VarRef>,
    pub eta: Option<VarRef>,
}

pub fn build(inst: &Instance, formulation: Formulation, scenarios: Option<&SdduScenarioSet>) -> Result<BuiltModel> {
    build_with(inst, formulation, scenarios, &BuildOptions::default())
}

pub fn build_with(
    inst: &Instance,
    formulation: Formulation,
    scenarios: Option<&SdduScenarioSet>,
    opts: &BuildOptions,
) -> Result<BuiltModel> {
    match formulation {
        Formulation::Det => build_det(inst),
        Formulation::Nh => build_nh(inst),
        Formulation::RoNh => build_ro_nh(inst),
        Formulation::Rddu => build_ddu(inst, Products::BigM, opts),
        Formulation::Erddu => build_ddu(inst, Products::Enhanced, opts),
        Formulation::Sddu => {
            let scen = scenarios.ok_or_else(|| Error::InvalidArgument("sddu needs a scenario set".into()))?;
            sddu_with(inst, scen, opts)
        }
    }
}

fn t_expr(h: &HardeningVars, k: usize) -> LinExpr {
    match h {
        HardeningVars::None => LinExpr::new(),
        HardeningVars::Direct(t) => LinExpr::from(t[k]),
        HardeningVars::Complement(v) => LinExpr::constant(1.0).term(v[k], -1.0),
    }
}

/// `Σ h t`.
fn payment_expr(inst: &Instance, h: &HardeningVars) -> LinExpr {
    let mut e = LinExpr::new();
    if !matches!(h, HardeningVars::None) {
        for (k, &cost) in inst.harden_cost.iter().enumerate() {
            e.add_scaled(&t_expr(h, k), cost);
        }
    }
    e
}

fn add_hardening(model: &mut MilpModel, inst: &Instance, complement: bool) -> Result<HardeningVars> {
    let mut vars = Vec::with_capacity(inst.num_links() * inst.num_levels);
    let prefix = if complement { "v" } else { "t" };
    for link in 0..inst.num_links() {
        let (i, j) = inst.endpoints(link);
        for r in 0..inst.num_levels {
            vars.push(model.add_var(Variable::binary(format!("{prefix}_{i}_{j}_{}", r + 1)))?);
        }
    }
    let h = if complement {
        HardeningVars::Complement(vars)
    } else {
        HardeningVars::Direct(vars)
    };
    model.add_constr(payment_expr(inst, &h), Sense::Le, inst.budget, "budget")?;
    for link in 0..inst.num_links() {
        let (i, j) = inst.endpoints(link);
        let mut e = LinExpr::new();
        for r in 0..inst.num_levels {
            e.add_scaled(&t_expr(&h, inst.level_index(link, r)), 1.0);
        }
        model.add_constr(e, Sense::Le, 1.0, format!("one_level_{i}_{j}"))?;
    }
    Ok(h)
}

/// `x`, `w` with capacity and demand-balance rows. `tag` separates scenarios.
pub(crate) fn add_allocation(model: &mut MilpModel, inst: &Instance, tag: &str) -> Result<(Vec<VarRef>, Vec<VarRef>)> {
    let mut x = Vec::with_capacity(inst.num_links());
    for link in 0..inst.num_links() {
        let (i, j) = inst.endpoints(link);
        let bound = f64::from(inst.link_bound(link));
        x.push(model.add_var(Variable::integer(format!("x{tag}_{i}_{j}"), 0.0, bound))?);
    }
    let mut w = Vec::with_capacity(inst.num_areas);
    for i in 0..inst.num_areas {
        let cap = f64::from(inst.unmet_cap(i));
        w.push(model.add_var(Variable::integer(format!("w{tag}_{i}"), 0.0, cap))?);
    }
    for j in 0..inst.num_nodes {
        let e = LinExpr::from_terms((0..inst.num_areas).map(|i| (x[inst.link(i, j)], 1.0)));
        model.add_constr(e, Sense::Le, f64::from(inst.capacity[j]), format!("capacity{tag}_{j}"))?;
    }
    for i in 0..inst.num_areas {
        let mut e = LinExpr::from_terms((0..inst.num_nodes).map(|j| (x[inst.link(i, j)], 1.0)));
        e.add_term(w[i], 1.0);
        model.add_constr(e, Sense::Eq, f64::from(inst.demand[i]), format!("demand{tag}_{i}"))?;
    }
    Ok((x, w))
}

fn unmet_expr(inst: &Instance, w: &[VarRef]) -> LinExpr {
    LinExpr::from_terms(w.iter().zip(&inst.unmet_penalty).map(|(&v, &s)| (v, s)))
}

/// `Σ_j d_j x_ij / λ_i` for one area.
fn area_delay_expr(inst: &Instance, x: &[VarRef], i: usize, delay: &[f64]) -> LinExpr {
    let lambda = f64::from(inst.demand[i]);
    LinExpr::from_terms((0..inst.num_nodes).map(|j| {
        let l = inst.link(i, j);
        (x[l], delay[l] / lambda)
    }))
}

fn add_nominal_delay_rows(model: &mut MilpModel, inst: &Instance, x: &[VarRef], delay: &[f64]) -> Result<()> {
    for i in 0..inst.num_areas {
        if inst.demand[i] == 0 {
            continue;
        }
        let e = area_delay_expr(inst, x, i, delay);
        model.add_constr(e, Sense::Le, inst.delay_cap[i], format!("delay_{i}"))?;
    }
    Ok(())
}

fn check_instance(inst: &Instance) -> Result<()> {
    inst.ensure_valid()
}

/// Deterministic model with hardening and nominal delays `d̄`.
pub fn build_det(inst: &Instance) -> Result<BuiltModel> {
    check_instance(inst)?;
    let mut model = MilpModel::new("det");
    let h = add_hardening(&mut model, inst, false)?;
    let (x, w) = add_allocation(&mut model, inst, "")?;
    add_nominal_delay_rows(&mut model, inst, &x, &inst.delay_min)?;
    let mut obj = payment_expr(inst, &h);
    obj.add_scaled(&unmet_expr(inst, &w), 1.0);
    for (l, &xv) in x.iter().enumerate() {
        obj.add_term(xv, inst.delay_penalty * inst.delay_min[l]);
    }
    model.set_objective(obj)?;
    Ok(BuiltModel {
        formulation: Formulation::Det,
        model,
        hardening: h,
        x,
        w,
        eta: None,
    })
}

/// Deterministic model without hardening decisions.
pub fn build_nh(inst: &Instance) -> Result<BuiltModel> {
    check_instance(inst)?;
    let mut model = MilpModel::new("nh");
    let (x, w) = add_allocation(&mut model, inst, "")?;
    add_nominal_delay_rows(&mut model, inst, &x, &inst.delay_min)?;
    let mut obj = unmet_expr(inst, &w);
    for (l, &xv) in x.iter().enumerate() {
        obj.add_term(xv, inst.delay_penalty * inst.delay_min[l]);
    }
    model.set_objective(obj)?;
    Ok(BuiltModel {
        formulation: Formulation::Nh,
        model,
        hardening: HardeningVars::None,
        x,
        w,
        eta: None,
    })
}

/// Robust model over the decision-independent set
/// `{d̄ + d̂ g : 0 ≤ g ≤ 1, Σ g ≤ Γ1}`, no hardening.
pub fn build_ro_nh(inst: &Instance) -> Result<BuiltModel> {
    check_instance(inst)?;
    let mut model = MilpModel::new("ro-nh");
    let (x, w) = add_allocation(&mut model, inst, "")?;
    let gamma = inst.uncertainty_budget_diu;

    for i in 0..inst.num_areas {
        if inst.demand[i] == 0 {
            continue;
        }
        let lambda = f64::from(inst.demand[i]);
        let beta = model.add_var(Variable::nonneg(format!("beta0_{i}")))?;
        let mut row = area_delay_expr(inst, &x, i, &inst.delay_min);
        row.add_term(beta, gamma);
        for j in 0..inst.num_nodes {
            let l = inst.link(i, j);
            let xi = model.add_var(Variable::nonneg(format!("xi0_{i}_{j}")))?;
            model.add_constr(
                LinExpr::new()
                    .term(beta, 1.0)
                    .term(xi, 1.0)
                    .term(x[l], -inst.delay_dev[l] / lambda),
                Sense::Ge,
                0.0,
                format!("dual0_{i}_{j}"),
            )?;
            row.add_term(xi, 1.0);
        }
        model.add_constr(row, Sense::Le, inst.delay_cap[i], format!("delay_{i}"))?;
    }

    let rho = inst.delay_penalty;
    let beta = model.add_var(Variable::nonneg("beta1"))?;
    let mut obj = unmet_expr(inst, &w);
    obj.add_term(beta, gamma);
    for (l, &xv) in x.iter().enumerate() {
        let (i, j) = inst.endpoints(l);
        let xi = model.add_var(Variable::nonneg(format!("xi1_{i}_{j}")))?;
        model.add_constr(
            LinExpr::new()
                .term(beta, 1.0)
                .term(xi, 1.0)
                .term(xv, -rho * inst.delay_dev[l]),
            Sense::Ge,
            0.0,
            format!("dual1_{i}_{j}"),
        )?;
        obj.add_term(xv, rho * inst.delay_min[l]);
        obj.add_term(xi, 1.0);
    }
    model.set_objective(obj)?;
    Ok(BuiltModel {
        formulation: Formulation::RoNh,
        model,
        hardening: HardeningVars::None,
        x,
        w,
        eta: None,
    })
}

/// Encoding of the `x²` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquareEncoding {
    /// One variable per link above the secant cuts of `x²`.
    #[default]
    Envelope,
    /// Bits `y`, products `Y = y·x` and `Σ 2^k Y_k`, plus the secant cuts.
    Binary,
}

impl FromStr for SquareEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "envelope" => Ok(SquareEncoding::Envelope),
            "binary" => Ok(SquareEncoding::Binary),
            _ => Err(Error::InvalidArgument(format!(
                "unknown square encoding `{s}` (expected envelope or binary)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    pub squares: SquareEncoding,
}

/// An expression equal to `x²` at the optimum, per link. Links with `L = 0`
/// or `u = 0` get an empty expression.
pub(crate) fn add_squares(
    model: &mut MilpModel,
    inst: &Instance,
    x: &[VarRef],
    tag: &str,
    encoding: SquareEncoding,
) -> Result<Vec<LinExpr>> {
    let mut out = Vec::with_capacity(x.len());
    for (l, &xv) in x.iter().enumerate() {
        let bound = u64::from(inst.link_bound(l));
        if bound == 0 || inst.workload_impact[l] == 0.0 {
            out.push(LinExpr::new());
            continue;
        }
        let (i, j) = inst.endpoints(l);
        match encoding {
            SquareEncoding::Envelope => {
                let s = square_envelope(model, xv, bound, &format!("S{tag}_{i}_{j}"))?;
                out.push(LinExpr::from(s));
            }
            SquareEncoding::Binary => {
                let e = binary_expand(model, xv, bound, &format!("y{tag}_{i}_{j}"))?;
                let sq = linearize_square(model, xv, &e, bound, &format!("Y{tag}_{i}_{j}"))?;
                square_secant_cuts(model, xv, &sq.expr, bound, &format!("Y{tag}_{i}_{j}"))?;
                out.push(sq.expr);
            }
        }
    }
    Ok(out)
}

/// Upper bounds on the deviation duals of the delay rows (`ξ⁰`) and of the
/// objective (`ξ¹`): an optimal dual never exceeds the matching coefficient.
fn xi_bounds(inst: &Instance, link: usize) -> (f64, f64) {
    let (i, _) = inst.endpoints(link);
    let l = f64::from(inst.link_bound(link));
    let lambda = f64::from(inst.demand[i]).max(1.0);
    let m_delay = (inst.delay_dev[link] * l / lambda).max(MIN_BIG_M);
    let m_obj = (inst.delay_penalty * inst.delay_dev[link] * l).max(MIN_BIG_M);
    (m_delay, m_obj)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Products {
    /// `T = t·ξ` with three McCormick rows per level.
    BigM,
    /// `V ≥ γ v ξ` with one row per level.
    Enhanced,
}

/// Shared body of the two decision-dependent reformulations.
fn build_ddu(inst: &Instance, products: Products, opts: &BuildOptions) -> Result<BuiltModel> {
    check_instance(inst)?;
    let (name, formulation) = match products {
        Products::BigM => ("rddu", Formulation::Rddu),
        Products::Enhanced => ("erddu", Formulation::Erddu),
    };
    let mut model = MilpModel::new(name);
    let h = add_hardening(&mut model, inst, products == Products::Enhanced)?;
    let (x, w) = add_allocation(&mut model, inst, "")?;
    let squares = add_squares(&mut model, inst, &x, "", opts.squares)?;
    let gamma2 = inst.uncertainty_budget_ddu;
    let nr = inst.num_levels;
    let rho = inst.delay_penalty;

    // Adds the dual variable ξ of one link and its hardening correction, and
    // returns the terms standing for ξ(1 - Σ_r γ_r t_r).
    let deviation_terms = |model: &mut MilpModel, tag: String, link: usize, big_m: f64| -> Result<(VarRef, LinExpr)> {
        let xi = model.add_var(Variable::continuous(format!("xi{tag}"), 0.0, big_m))?;
        let mut e = LinExpr::new();
        match (&h, products) {
            (HardeningVars::Direct(t), Products::BigM) => {
                e.add_term(xi, 1.0);
                for r in 0..nr {
                    let k = inst.level_index(link, r);
                    let prod = mccormick_bin_cont(model, t[k], xi, big_m, &format!("T{tag}_{}", r + 1))?;
                    e.add_term(prod, -inst.impact(link, r));
                }
            }
            (HardeningVars::Complement(v), Products::Enhanced) => {
                let total: f64 = (0..nr).map(|r| inst.impact(link, r)).sum();
                e.add_term(xi, 1.0 - total);
                for r in 0..nr {
                    let k = inst.level_index(link, r);
                    let g = inst.impact(link, r);
                    let m = (g * big_m).max(MIN_BIG_M);
                    let prod = model.add_var(Variable::nonneg(format!("V{tag}_{}", r + 1)))?;
                    // V ≥ γ ξ - M(1 - v)
                    model.add_constr(
                        LinExpr::new().term(prod, 1.0).term(xi, -g).term(v[k], -m),
                        Sense::Ge,
                        -m,
                        format!("V{tag}_{}_lb", r + 1),
                    )?;
                    e.add_term(prod, 1.0);
                }
            }
            _ => unreachable!("hardening variables match the product style"),
        }
        Ok((xi, e))
    };

    for i in 0..inst.num_areas {
        if inst.demand[i] == 0 {
            continue;
        }
        let lambda = f64::from(inst.demand[i]);
        let beta = model.add_var(Variable::nonneg(format!("beta0_{i}")))?;
        let mut row = area_delay_expr(inst, &x, i, &inst.delay_min);
        row.add_term(beta, gamma2);
        for j in 0..inst.num_nodes {
            let l = inst.link(i, j);
            let (m_delay, _) = xi_bounds(inst, l);
            let (xi, dev) = deviation_terms(&mut model, format!("0_{i}_{j}"), l, m_delay)?;
            model.add_constr(
                LinExpr::new()
                    .term(beta, 1.0)
                    .term(xi, 1.0)
                    .term(x[l], -inst.delay_dev[l] / lambda),
                Sense::Ge,
                0.0,
                format!("dual0_{i}_{j}"),
            )?;
            row.add_scaled(&dev, 1.0);
            row.add_scaled(&squares[l], inst.delay_dev[l] * inst.workload_impact[l] / lambda);
        }
        model.add_constr(row, Sense::Le, inst.delay_cap[i], format!("delay_{i}"))?;
    }

    let eta = model.add_var(Variable::continuous("eta", f64::NEG_INFINITY, f64::INFINITY))?;
    let beta = model.add_var(Variable::nonneg("beta1"))?;
    let mut cost = payment_expr(inst, &h);
    cost.add_scaled(&unmet_expr(inst, &w), 1.0);
    cost.add_term(beta, gamma2);
    for (l, &xv) in x.iter().enumerate() {
        let (i, j) = inst.endpoints(l);
        let (_, m_obj) = xi_bounds(inst, l);
        let (xi, dev) = deviation_terms(&mut model, format!("1_{i}_{j}"), l, m_obj)?;
        model.add_constr(
            LinExpr::new()
                .term(beta, 1.0)
                .term(xi, 1.0)
                .term(xv, -rho * inst.delay_dev[l]),
            Sense::Ge,
            0.0,
            format!("dual1_{i}_{j}"),
        )?;
        cost.add_term(xv, rho * inst.delay_min[l]);
        cost.add_scaled(&dev, 1.0);
        cost.add_scaled(&squares[l], rho * inst.delay_dev[l] * inst.workload_impact[l]);
    }
    // η ≥ worst-case cost
    let mut epi = LinExpr::from(eta);
    epi.add_scaled(&cost, -1.0);
    model.add_constr(epi, Sense::Ge, 0.0, "epigraph")?;
    model.set_objective(LinExpr::from(eta))?;

    Ok(BuiltModel {
        formulation,
        model,
        hardening: h,
        x,
        w,
        eta: Some(eta),
    })
}

/// Decision-dependent robust model, McCormick products `T = t·ξ`.
pub fn build_rddu(inst: &Instance) -> Result<BuiltModel> {
    build_ddu(inst, Products::BigM, &BuildOptions::default())
}

/// Decision-dependent robust model in the `v = 1 - t` form with one
/// big-M row per hardening level.
pub fn build_erddu(inst: &Instance) -> Result<BuiltModel> {
    build_ddu(inst, Products::Enhanced, &BuildOptions::default())
}

/// Scenario model: first-stage hardening, per-scenario allocation, with
/// `d^n = d̄ + ξ_n d̂ (1 - Σ γ t + u x^n)`.
pub fn build_sddu(inst: &Instance, scen: &SdduScenarioSet) -> Result<BuiltModel> {
    sddu_with(inst, scen, &BuildOptions::default())
}

fn sddu_with(inst: &Instance, scen: &SdduScenarioSet, opts: &BuildOptions) -> Result<BuiltModel> {
    check_instance(inst)?;
    if scen.is_empty() {
        return Err(Error::InvalidArgument("scenario set is empty".into()));
    }
    let mut model = MilpModel::new("sddu");
    let h = add_hardening(&mut model, inst, false)?;
    let HardeningVars::Direct(t) = &h else { unreachable!() };
    let t = t.clone();
    let rho = inst.delay_penalty;
    let mut obj = payment_expr(inst, &h);
    let mut first: Option<(Vec<VarRef>, Vec<VarRef>)> = None;

    for (n, (&xi_n, &p)) in scen.draws().iter().zip(scen.probs()).enumerate() {
        let tag = format!("_s{n}");
        let (x, w) = add_allocation(&mut model, inst, &tag)?;
        let squares = if xi_n > 0.0 {
            add_squares(&mut model, inst, &x, &tag, opts.squares)?
        } else {
            vec![LinExpr::new(); x.len()]
        };
        // realised delay cost of link l, without the hardening correction
        let mut hardening_terms: Vec<LinExpr> = vec![LinExpr::new(); x.len()];
        if xi_n > 0.0 {
            for (l, &xv) in x.iter().enumerate() {
                let bound = u64::from(inst.link_bound(l));
                if bound == 0 {
                    continue;
                }
                let (i, j) = inst.endpoints(l);
                for r in 0..inst.num_levels {
                    let k = inst.level_index(l, r);
                    let z = product_bin_int(&mut model, t[k], xv, bound, &format!("Z{tag}_{i}_{j}_{}", r + 1))?;
                    hardening_terms[l].add_term(z, inst.impact(l, r));
                }
            }
        }

        for i in 0..inst.num_areas {
            if inst.demand[i] == 0 {
                continue;
            }
            let mut row = LinExpr::new();
            for j in 0..inst.num_nodes {
                let l = inst.link(i, j);
                let dev = xi_n * inst.delay_dev[l];
                row.add_term(x[l], inst.delay_min[l] + dev);
                row.add_scaled(&hardening_terms[l], -dev);
                row.add_scaled(&squares[l], dev * inst.workload_impact[l]);
            }
            let rhs = inst.delay_cap[i] * f64::from(inst.demand[i]);
            model.add_constr(row, Sense::Le, rhs, format!("delay{tag}_{i}"))?;
        }

        let mut cost = unmet_expr(inst, &w);
        for (l, &xv) in x.iter().enumerate() {
            let dev = xi_n * inst.delay_dev[l];
            cost.add_term(xv, rho * (inst.delay_min[l] + dev));
            cost.add_scaled(&hardening_terms[l], -rho * dev);
            cost.add_scaled(&squares[l], rho * dev * inst.workload_impact[l]);
        }
        obj.add_scaled(&cost, p);
        if first.is_none() {
            first = Some((x, w));
        }
    }
    model.set_objective(obj)?;
    let (x, w) = first.expect("at least one scenario");
    Ok(BuiltModel {
        formulation: Formulation::Sddu,
        model,
        hardening: h,
        x,
        w,
        eta: None,
    })
}

const INTEGRALITY_TOL: f64 = 1e-6;

fn round_integral(model: &MilpModel, v: VarRef, values: &[f64]) -> Result<i64> {
    let raw = values[v.index()];
    let r = raw.round();
    if !raw.is_finite() || (raw - r).abs() > INTEGRALITY_TOL {
        return Err(Error::CorruptSolution(format!(
            "`{}` = {raw} is not integral",
            model.variable(v).name
        )));
    }
    Ok(r as i64)
}

/// Decodes solver values into a [`Solution`] and re-checks its invariants.
pub fn extract_solution(inst: &Instance, built: &BuiltModel, values: &[f64], objective: f64) -> Result<Solution> {
    if values.len() != built.model.num_vars() {
        return Err(Error::CorruptSolution(format!(
            "expected {} values, got {}",
            built.model.num_vars(),
            values.len()
        )));
    }
    let model = &built.model;
    let mut plan = HardeningPlan::none(inst);
    match &built.hardening {
        HardeningVars::None => {}
        HardeningVars::Direct(t) => {
            for (k, &v) in t.iter().enumerate() {
                plan.t[k] = binary_value(model, v, values)?;
            }
        }
        HardeningVars::Complement(vs) => {
            for (k, &v) in vs.iter().enumerate() {
                plan.t[k] = 1 - binary_value(model, v, values)?;
            }
        }
    }
    let to_u32 = |v: VarRef| -> Result<u32> {
        let n = round_integral(model, v, values)?;
        u32::try_from(n).map_err(|_| Error::CorruptSolution(format!("`{}` = {n} is negative", model.variable(v).name)))
    };
    let allocation = Allocation {
        x: built.x.iter().map(|&v| to_u32(v)).collect::<Result<_>>()?,
        w: built.w.iter().map(|&v| to_u32(v)).collect::<Result<_>>()?,
    };
    plan.check(inst).map_err(Error::CorruptSolution)?;
    allocation.check(inst).map_err(Error::CorruptSolution)?;
    let payment = plan.payment(inst);
    Ok(Solution {
        formulation: built.formulation.name().to_string(),
        plan,
        allocation,
        objective,
        hardening_payment: payment,
        allocation_cost: objective - payment,
    })
}

fn binary_value(model: &MilpModel, v: VarRef, values: &[f64]) -> Result<u8> {
    match round_integral(model, v, values)? {
        0 => Ok(0),
        1 => Ok(1),
        other => Err(Error::CorruptSolution(format!(
            "`{}` = {other} is not binary",
            model.variable(v).name
        ))),
    }
}

/// Outcome of [`solve_formulation`].
#[derive(Debug, Clone)]
pub struct SolvedFormulation {
    pub solution: Solution,
    pub result: SolverResult,
    pub stats: ModelStats,
}

/// Builds, solves and decodes one formulation.
pub fn solve_formulation(
    inst: &Instance,
    formulation: Formulation,
    scenarios: Option<&SdduScenarioSet>,
    config: &SolverConfig,
) -> Result<SolvedFormulation> {
    solve_formulation_with(inst, formulation, scenarios, &BuildOptions::default(), config)
}

pub fn solve_formulation_with(
    inst: &Instance,
    formulation: Formulation,
    scenarios: Option<&SdduScenarioSet>,
    opts: &BuildOptions,
    config: &SolverConfig,
) -> Result<SolvedFormulation> {
    let built = build_with(inst, formulation, scenarios, opts)?;
    let stats = built.model.stats();
    let result = solve(&built.model, config)?;
    let values = result.require_values()?;
    let solution = extract_solution(inst, &built, values, result.objective)?;
    Ok(SolvedFormulation {
        solution,
        result,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GenConfig};

    fn tiny() -> Instance {
        generate(&GenConfig {
            num_areas: 2,
            num_nodes: 2,
            num_levels: 2,
            demand_range: (3, 6),
            capacity_pool: vec![4, 6],
            ..GenConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn names_parse() {
        for f in Formulation::ALL {
            assert_eq!(f.name().parse::<Formulation>().unwrap(), f);
        }
        assert!("lp".parse::<Formulation>().is_err());
    }

    #[test]
    fn nh_has_no_hardening_variables() {
        let b = build_nh(&tiny()).unwrap();
        assert_eq!(b.model.stats().binaries, 0);
        assert!(b.model.variables().iter().all(|v| !v.name.starts_with("t_")));
    }

    #[test]
    fn row_difference_is_four_r_per_link() {
        let inst = tiny();
        let a = build_rddu(&inst).unwrap().model.stats();
        let b = build_erddu(&inst).unwrap().model.stats();
        assert_eq!(a.rows - b.rows, 4 * inst.num_levels * inst.num_links());
    }

    #[test]
    fn extraction_rejects_fractional_hardening() {
        let inst = tiny();
        let built = build_det(&inst).unwrap();
        let mut values = vec![0.0; built.model.num_vars()];
        for i in 0..inst.num_areas {
            // serve everything on node 0 is not always feasible, so drop into w up to cap
            let mut left = inst.demand[i];
            for j in 0..inst.num_nodes {
                let l = inst.link(i, j);
                let take = left.min(inst.link_bound(l));
                values[built.x[l].index()] = f64::from(take);
                left -= take;
            }
            values[built.w[i].index()] = f64::from(left);
        }
        let HardeningVars::Direct(t) = &built.hardening else {
            panic!()
        };
        values[t[0].index()] = 0.4;
        match extract_solution(&inst, &built, &values, 0.0) {
            Err(Error::CorruptSolution(msg)) => assert!(msg.contains("t_0_0_1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scenario_set_validation() {
        assert!(SdduScenarioSet::new(vec![], vec![]).is_err());
        assert!(SdduScenarioSet::new(vec![0.5], vec![0.9]).is_err());
        assert!(SdduScenarioSet::new(vec![1.5], vec![1.0]).is_err());
        let s = SdduScenarioSet::uniform(4, 3).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(build_sddu(&tiny(), &s).is_ok());
    }
}
