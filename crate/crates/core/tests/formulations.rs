//! Optimal values of the formulations against closed forms, degenerate
//! cases and the exhaustive oracle.

use edgeharden_core::formulations::{
    build, solve_formulation, solve_formulation_with, BuildOptions, SdduScenarioSet, SquareEncoding,
};
use edgeharden_core::oracle::{brute_force_optimal, worst_case_cost};
use edgeharden_core::{generate, Error, Formulation, GenConfig, Instance, SolverConfig};

fn small(seed: u64) -> Instance {
    small_with_levels(seed, 3)
}

fn small_with_levels(seed: u64, num_levels: usize) -> Instance {
    generate(&GenConfig {
        seed,
        num_levels,
        num_areas: 3,
        num_nodes: 3,
        demand_range: (4, 10),
        capacity_pool: vec![4, 6, 8],
        delay_min_range: (1.0, 5.0),
        delay_dev_range: (2.0, 8.0),
        delay_penalty: 1.0,
        budget: 4.0,
        uncertainty_budget_diu: 2.0,
        uncertainty_budget_ddu: 2.0,
        ..GenConfig::default()
    })
    .unwrap()
}

fn tiny(seed: u64) -> Instance {
    generate(&GenConfig {
        seed,
        num_areas: 2,
        num_nodes: 2,
        num_levels: 2,
        demand_range: (1, 6),
        capacity_pool: vec![3, 4, 6],
        base_harden_cost_range: (0.5, 3.0),
        delay_min_range: (1.0, 5.0),
        delay_dev_range: (2.0, 8.0),
        delay_penalty: 1.0,
        budget: 3.0,
        uncertainty_budget_ddu: 1.5,
        ..GenConfig::default()
    })
    .unwrap()
}

/// One hardening level with no effect.
fn without_impacts(seed: u64) -> Instance {
    let mut inst = small_with_levels(seed, 1);
    inst.harden_impact.iter_mut().for_each(|g| *g = 0.0);
    inst.workload_impact.iter_mut().for_each(|u| *u = 0.0);
    inst
}

/// Optimal value, or `None` when the model is infeasible.
fn opt(inst: &Instance, f: Formulation) -> Option<f64> {
    match solve_formulation(inst, f, None, &SolverConfig::exact()) {
        Ok(s) => Some(s.solution.objective),
        Err(Error::Infeasible(_)) => None,
        Err(e) => panic!("{f}: {e}"),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn assert_same(a: Option<f64>, b: Option<f64>, what: &str) {
    match (a, b) {
        (Some(x), Some(y)) => assert!(close(x, y), "{what}: {x} vs {y}"),
        (None, None) => {}
        _ => panic!("{what}: feasibility differs ({a:?} vs {b:?})"),
    }
}

fn single_link() -> Instance {
    let mut inst = generate(&GenConfig {
        num_areas: 1,
        num_nodes: 1,
        num_levels: 1,
        ..GenConfig::default()
    })
    .unwrap();
    inst.demand = vec![2];
    inst.capacity = vec![4];
    inst.delay_min = vec![1.0];
    inst.delay_penalty = 0.1;
    inst.unmet_penalty = vec![40.0];
    inst.unmet_fraction_cap = vec![0.5];
    inst.delay_cap = vec![15.0];
    inst
}

#[test]
fn single_link_det_and_nh() {
    let inst = single_link();
    for f in [Formulation::Det, Formulation::Nh] {
        let s = solve_formulation(&inst, f, None, &SolverConfig::exact())
            .unwrap()
            .solution;
        assert!(close(s.objective, 0.2), "{f}: {}", s.objective);
        assert_eq!(s.allocation.x, vec![2]);
        assert_eq!(s.allocation.w, vec![0]);
    }
}

#[test]
fn zero_demand_costs_nothing() {
    let mut inst = small(3);
    inst.demand = vec![0; inst.num_areas];
    for f in [Formulation::Det, Formulation::Nh, Formulation::Rddu, Formulation::Erddu] {
        let s = solve_formulation(&inst, f, None, &SolverConfig::exact())
            .unwrap()
            .solution;
        assert!(s.objective.abs() < 1e-9, "{f}: {}", s.objective);
        assert!(s.allocation.x.iter().all(|&v| v == 0));
        assert!(s.allocation.w.iter().all(|&v| v == 0));
    }
}

#[test]
fn det_never_hardens_and_matches_nh() {
    for seed in 0..8 {
        let inst = small(seed);
        match solve_formulation(&inst, Formulation::Det, None, &SolverConfig::exact()) {
            Ok(det) => {
                assert!(det.solution.plan.t.iter().all(|&t| t == 0), "seed {seed}");
                assert_same(Some(det.solution.objective), opt(&inst, Formulation::Nh), "det vs nh");
            }
            Err(Error::Infeasible(_)) => assert!(opt(&inst, Formulation::Nh).is_none()),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn ro_nh_with_no_deviation_is_nh() {
    for seed in 0..5 {
        let mut inst = small(seed);
        inst.uncertainty_budget_diu = 0.0;
        assert_same(opt(&inst, Formulation::RoNh), opt(&inst, Formulation::Nh), "gamma1 = 0");
    }
}

#[test]
fn ro_nh_with_full_budget_is_shifted_nh() {
    for seed in 0..5 {
        let mut inst = small(seed);
        inst.uncertainty_budget_diu = inst.num_links() as f64;
        let mut shifted = inst.clone();
        for (d, h) in shifted.delay_min.iter_mut().zip(&inst.delay_dev) {
            *d += h;
        }
        assert_same(
            opt(&inst, Formulation::RoNh),
            opt(&shifted, Formulation::Nh),
            "gamma1 = |E|",
        );
    }
}

#[test]
fn ro_nh_nondecreasing_in_gamma1() {
    let mut inst = (0..20).map(small).find(|i| opt(i, Formulation::Nh).is_some()).unwrap();
    let mut last = f64::NEG_INFINITY;
    for g in [0.0, 1.0, 2.0, 4.0, 9.0] {
        inst.uncertainty_budget_diu = g;
        let Some(v) = opt(&inst, Formulation::RoNh) else { break };
        assert!(v >= last - 1e-6, "gamma1 {g}: {v} < {last}");
        last = v;
    }
    assert!(last.is_finite());
}

#[test]
fn ddu_without_impacts_is_ro_nh() {
    for seed in 0..4 {
        let mut inst = without_impacts(seed);
        inst.uncertainty_budget_ddu = inst.uncertainty_budget_diu;
        let ro = opt(&inst, Formulation::RoNh);
        assert_same(opt(&inst, Formulation::Rddu), ro, "rddu vs ro-nh");
        assert_same(opt(&inst, Formulation::Erddu), ro, "erddu vs ro-nh");
        if ro.is_some() {
            let s = solve_formulation(&inst, Formulation::Rddu, None, &SolverConfig::exact()).unwrap();
            assert_eq!(s.solution.hardening_payment, 0.0);
        }
    }
}

#[test]
fn ddu_without_deviation_is_nh() {
    for seed in 0..4 {
        let mut inst = small(seed);
        inst.workload_impact.iter_mut().for_each(|u| *u = 0.0);
        inst.uncertainty_budget_ddu = 0.0;
        let nh = opt(&inst, Formulation::Nh);
        assert_same(opt(&inst, Formulation::Rddu), nh, "rddu vs nh");
        assert_same(opt(&inst, Formulation::Erddu), nh, "erddu vs nh");
    }
}

#[test]
fn ddu_matches_exhaustive_search() {
    let mut feasible = 0;
    for seed in 0..10 {
        let inst = tiny(seed);
        let best = brute_force_optimal(&inst).unwrap();
        for f in [Formulation::Rddu, Formulation::Erddu] {
            for squares in [SquareEncoding::Envelope, SquareEncoding::Binary] {
                let opts = BuildOptions { squares };
                let got = match solve_formulation_with(&inst, f, None, &opts, &SolverConfig::exact()) {
                    Ok(s) => Some(s.solution),
                    Err(Error::Infeasible(_)) => None,
                    Err(e) => panic!("{e}"),
                };
                match (&best, got) {
                    (Some(b), Some(s)) => {
                        assert!(
                            close(b.objective, s.objective),
                            "seed {seed} {f} {squares:?}: {} vs {}",
                            b.objective,
                            s.objective
                        );
                        let wc = worst_case_cost(&inst, &s).unwrap();
                        assert!(
                            close(wc, s.objective),
                            "seed {seed} {f}: worst case {wc} vs {}",
                            s.objective
                        );
                    }
                    (None, None) => {}
                    (b, s) => panic!(
                        "seed {seed} {f}: oracle {:?} vs model {:?}",
                        b.as_ref().map(|b| b.objective),
                        s.map(|s| s.objective)
                    ),
                }
            }
        }
        feasible += usize::from(best.is_some());
    }
    assert!(feasible >= 3, "only {feasible} feasible instances");
}

#[test]
fn square_encodings_agree_on_small_instances() {
    for seed in 0..3 {
        let inst = small(seed);
        let solve = |squares| match solve_formulation_with(
            &inst,
            Formulation::Erddu,
            None,
            &BuildOptions { squares },
            &SolverConfig::exact(),
        ) {
            Ok(s) => Some(s.solution.objective),
            Err(Error::Infeasible(_)) => None,
            Err(e) => panic!("{e}"),
        };
        assert_same(
            solve(SquareEncoding::Envelope),
            solve(SquareEncoding::Binary),
            "encodings",
        );
    }
}

#[test]
fn sddu_with_zero_draw_is_det() {
    let scen = SdduScenarioSet::new(vec![0.0], vec![1.0]).unwrap();
    for seed in 0..4 {
        let inst = small(seed);
        let det = opt(&inst, Formulation::Det);
        let sddu = match solve_formulation(&inst, Formulation::Sddu, Some(&scen), &SolverConfig::exact()) {
            Ok(s) => {
                assert_eq!(s.solution.hardening_payment, 0.0);
                Some(s.solution.objective)
            }
            Err(Error::Infeasible(_)) => None,
            Err(e) => panic!("{e}"),
        };
        assert_same(sddu, det, "sddu vs det");
    }
}

#[test]
fn sddu_with_full_draw_is_shifted_det() {
    let scen = SdduScenarioSet::new(vec![1.0], vec![1.0]).unwrap();
    for seed in 0..4 {
        let inst = without_impacts(seed);
        let mut shifted = inst.clone();
        for (d, h) in shifted.delay_min.iter_mut().zip(&inst.delay_dev) {
            *d += h;
        }
        let sddu = match solve_formulation(&inst, Formulation::Sddu, Some(&scen), &SolverConfig::exact()) {
            Ok(s) => Some(s.solution.objective),
            Err(Error::Infeasible(_)) => None,
            Err(e) => panic!("{e}"),
        };
        assert_same(sddu, opt(&shifted, Formulation::Det), "sddu vs shifted det");
    }
}

#[test]
fn sddu_nonincreasing_in_budget() {
    let scen = SdduScenarioSet::uniform(3, 5).unwrap();
    let mut inst = feasible_small();
    let mut last = f64::INFINITY;
    for b in [0.0, 2.0, 6.0] {
        inst.budget = b;
        let v = solve_formulation(&inst, Formulation::Sddu, Some(&scen), &SolverConfig::exact())
            .unwrap()
            .solution
            .objective;
        assert!(v <= last + 1e-6, "budget {b}: {v} > {last}");
        last = v;
    }
}

/// Feasible instance for the monotonicity sweeps.
fn feasible_small() -> Instance {
    (0..20)
        .map(small)
        .find(|inst| opt(inst, Formulation::Rddu).is_some())
        .expect("a feasible small instance")
}

fn assert_monotone(values: &[f64], nondecreasing: bool, what: &str) {
    for w in values.windows(2) {
        if nondecreasing {
            assert!(w[1] >= w[0] - 1e-6, "{what}: {values:?}");
        } else {
            assert!(w[1] <= w[0] + 1e-6, "{what}: {values:?}");
        }
    }
}

#[test]
fn rddu_monotone_in_parameters() {
    let base = feasible_small();
    let sweep = |edit: &dyn Fn(&mut Instance, f64), grid: &[f64]| -> Vec<f64> {
        grid.iter()
            .map(|&v| {
                let mut inst = base.clone();
                edit(&mut inst, v);
                opt(&inst, Formulation::Rddu).unwrap_or(f64::INFINITY)
            })
            .collect()
    };
    assert_monotone(&sweep(&|i, v| i.budget = v, &[0.0, 1.0, 2.0, 4.0]), false, "budget");
    assert_monotone(
        &sweep(&|i, v| i.uncertainty_budget_ddu = v, &[0.0, 1.0, 2.0, 4.0]),
        true,
        "gamma2",
    );
    let u0 = base.workload_impact.clone();
    assert_monotone(
        &sweep(
            &|i, v| i.workload_impact.iter_mut().zip(&u0).for_each(|(u, b)| *u = b * v),
            &[0.0, 0.5, 1.0, 2.0],
        ),
        true,
        "u",
    );
    assert_monotone(&sweep(&|i, v| i.delay_penalty = v, &[0.1, 0.5, 1.0, 2.0]), true, "rho");
}

#[test]
fn enhanced_model_is_smaller_by_four_rows_per_link_and_level() {
    let inst = generate(&GenConfig::default()).unwrap();
    let per_link = 4 * inst.num_levels * inst.num_links();
    let rddu = build(&inst, Formulation::Rddu, None).unwrap().model.stats();
    let erddu = build(&inst, Formulation::Erddu, None).unwrap().model.stats();
    assert_eq!(rddu.rows - erddu.rows, per_link);
    assert_eq!(per_link, 1200);
}
