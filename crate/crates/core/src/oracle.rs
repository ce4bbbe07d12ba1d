//! Reference evaluations that do not go through any reformulation.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::plan::{Allocation, HardeningPlan, Solution};

/// Largest instance [`brute_force_optimal`] accepts.
pub const BRUTE_FORCE_MAX_LINKS: usize = 4;
pub const BRUTE_FORCE_MAX_DEMAND: u32 = 6;
pub const BRUTE_FORCE_MAX_LEVELS: usize = 2;

const DELAY_TOL: f64 = 1e-9;

/// `max Σ c_k g_k  s.t.  Σ g_k ≤ Γ, 0 ≤ g_k ≤ ub_k`, filled greedily by
/// decreasing coefficient (ties by index).
pub fn inner_max_greedy(c: &[f64], ub: &[f64], gamma: f64) -> Result<(Vec<f64>, f64)> {
    if c.len() != ub.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients but {} bounds",
            c.len(),
            ub.len()
        )));
    }
    if let Some(k) = (0..c.len()).find(|&k| !(c[k] >= 0.0 && c[k].is_finite() && ub[k] >= 0.0 && ub[k].is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "entry {k}: coefficient {} and bound {} must be finite and nonnegative",
            c[k], ub[k]
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("budget {gamma} is negative")));
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(a.cmp(&b)));
    let mut g = vec![0.0; c.len()];
    let mut left = gamma;
    let mut value = 0.0;
    for k in order {
        if left <= 0.0 || c[k] == 0.0 {
            break;
        }
        let take = ub[k].min(left);
        g[k] = take;
        value += c[k] * take;
        left -= take;
    }
    Ok((g, value))
}

fn check_input(inst: &Instance, plan: &HardeningPlan, alloc: &Allocation) -> Result<()> {
    plan.check(inst)
        .and_then(|()| alloc.check(inst))
        .map_err(|m| Error::InvalidArgument(format!("infeasible solution: {m}")))
}

/// Worst-case total cost of a plan and allocation over the decision-dependent set.
pub fn worst_case_cost(inst: &Instance, solution: &Solution) -> Result<f64> {
    check_input(inst, &solution.plan, &solution.allocation)?;
    Ok(worst_cost_unchecked(inst, &solution.plan, &solution.allocation))
}

fn worst_cost_unchecked(inst: &Instance, plan: &HardeningPlan, alloc: &Allocation) -> f64 {
    let rho = inst.delay_penalty;
    let n = inst.num_links();
    let mut cost = plan.payment(inst) + alloc.unmet_cost(inst);
    let mut c = Vec::with_capacity(n);
    let mut ub = Vec::with_capacity(n);
    for l in 0..n {
        let x = f64::from(alloc.x[l]);
        cost += rho * inst.delay_min[l] * x + rho * inst.delay_dev[l] * inst.workload_impact[l] * x * x;
        c.push(rho * inst.delay_dev[l] * x);
        ub.push(plan.deviation_cap(inst, l));
    }
    let (_, dev) = inner_max_greedy(&c, &ub, inst.uncertainty_budget_ddu).expect("nonnegative inputs");
    cost + dev
}

/// Worst-case average delay of area `i`. Zero for areas without demand.
pub fn worst_case_delay(inst: &Instance, solution: &Solution, area: usize) -> Result<f64> {
    check_input(inst, &solution.plan, &solution.allocation)?;
    if area >= inst.num_areas {
        return Err(Error::InvalidArgument(format!("area {area} out of range")));
    }
    Ok(worst_delay_unchecked(inst, &solution.plan, &solution.allocation, area))
}

fn worst_delay_unchecked(inst: &Instance, plan: &HardeningPlan, alloc: &Allocation, area: usize) -> f64 {
    if inst.demand[area] == 0 {
        return 0.0;
    }
    let lambda = f64::from(inst.demand[area]);
    let mut total = 0.0;
    let mut c = Vec::with_capacity(inst.num_nodes);
    let mut ub = Vec::with_capacity(inst.num_nodes);
    for j in 0..inst.num_nodes {
        let l = inst.link(area, j);
        let x = f64::from(alloc.x[l]);
        total += inst.delay_min[l] * x + inst.delay_dev[l] * inst.workload_impact[l] * x * x;
        c.push(inst.delay_dev[l] * x);
        ub.push(plan.deviation_cap(inst, l));
    }
    let (_, dev) = inner_max_greedy(&c, &ub, inst.uncertainty_budget_ddu).expect("nonnegative inputs");
    (total + dev) / lambda
}

/// `max uᵀζ s.t. Aζ ≤ rhs` by enumerating basic solutions, for small dense
/// systems whose feasible set is a nonempty polytope. `None` when no vertex
/// is feasible.
pub fn polytope_max(a: &[Vec<f64>], rhs: &[f64], u: &[f64]) -> Result<Option<f64>> {
    let n = u.len();
    let m = a.len();
    if rhs.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("polytope_max: inconsistent dimensions".into()));
    }
    if n == 0 || m < n {
        return Err(Error::InvalidArgument(
            "polytope_max needs at least as many rows as columns".into(),
        ));
    }
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let mut mat: Vec<Vec<f64>> = subset
            .iter()
            .map(|&r| {
                let mut row = a[r].clone();
                row.push(rhs[r]);
                row
            })
            .collect();
        if let Some(z) = solve_square(&mut mat) {
            if (0..m).all(|r| dot(&a[r], &z) <= rhs[r] + 1e-9) {
                let v = dot(u, &z);
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
        // next n-subset of 0..m in lexicographic order
        let Some(k) = (0..n).rev().find(|&k| subset[k] < m - n + k) else {
            return Ok(best);
        };
        subset[k] += 1;
        for j in k + 1..n {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Gauss-Jordan on an augmented `n × (n+1)` matrix; `None` if singular.
fn solve_square(mat: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = mat.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))?;
        if mat[piv][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, piv);
        let pivot = mat[col].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot[col];
                for (a, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *a -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| mat[i][n] / mat[i][i]).collect())
}

/// Exhaustive search for the robust optimum of a tiny instance.
/// `Ok(None)` means no plan and allocation meet every robust delay cap.
pub fn brute_force_optimal(inst: &Instance) -> Result<Option<Solution>> {
    inst.ensure_valid()?;
    let n = inst.num_links();
    if n > BRUTE_FORCE_MAX_LINKS
        || inst.num_levels > BRUTE_FORCE_MAX_LEVELS
        || inst.demand.iter().any(|&d| d > BRUTE_FORCE_MAX_DEMAND)
    {
        return Err(Error::InvalidArgument(format!(
            "instance too large for enumeration (need I*J <= {BRUTE_FORCE_MAX_LINKS}, \
             R <= {BRUTE_FORCE_MAX_LEVELS}, demand <= {BRUTE_FORCE_MAX_DEMAND})"
        )));
    }

    let allocations = enumerate_allocations(inst);
    let nr = inst.num_levels;
    // choice[l] = 0 for no hardening, r + 1 for level r
    let mut choice = vec![0usize; n];
    let mut best: Option<(f64, HardeningPlan, Allocation)> = None;
    loop {
        let mut plan = HardeningPlan::none(inst);
        for (l, &c) in choice.iter().enumerate() {
            if c > 0 {
                plan.t[inst.level_index(l, c - 1)] = 1;
            }
        }
        if plan.check(inst).is_ok() {
            for alloc in &allocations {
                let feasible = (0..inst.num_areas)
                    .all(|i| worst_delay_unchecked(inst, &plan, alloc, i) <= inst.delay_cap[i] + DELAY_TOL);
                if !feasible {
                    continue;
                }
                let cost = worst_cost_unchecked(inst, &plan, alloc);
                if !best.as_ref().is_some_and(|(b, _, _)| cost >= *b) {
                    best = Some((cost, plan.clone(), alloc.clone()));
                }
            }
        }
        // next choice vector, lexicographic with link 0 most significant
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best.map(|(cost, plan, allocation)| {
                    let payment = plan.payment(inst);
                    Solution {
                        formulation: "brute-force".into(),
                        plan,
                        allocation,
                        objective: cost,
                        hardening_payment: payment,
                        allocation_cost: cost - payment,
                    }
                }));
            }
            k -= 1;
            if choice[k] < nr {
                choice[k] += 1;
                break;
            }
            choice[k] = 0;
        }
    }
}

/// All allocations meeting capacity, demand balance and unmet caps, in
/// lexicographic order of `x`.
fn enumerate_allocations(inst: &Instance) -> Vec<Allocation> {
    let n = inst.num_links();
    let mut out = Vec::new();
    let mut x = vec![0u32; n];
    loop {
        let w: Option<Vec<u32>> = (0..inst.num_areas)
            .map(|i| {
                let served: u32 = (0..inst.num_nodes).map(|j| x[inst.link(i, j)]).sum();
                inst.demand[i].checked_sub(served)
            })
            .collect();
        if let Some(w) = w {
            let alloc = Allocation { x: x.clone(), w };
            if alloc.check(inst).is_ok() {
                out.push(alloc);
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if x[k] < inst.link_bound(k) {
                x[k] += 1;
                break;
            }
            x[k] = 0;
        }
    }
}
