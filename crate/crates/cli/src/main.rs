use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use edgeharden_core::evaluate::{self, compare_schemes, sweep_csv, sweep_long_csv};
use edgeharden_core::formulations::{build_with, extract_solution, BuildOptions, SquareEncoding};
use edgeharden_core::oracle::{worst_case_cost, worst_case_delay};
use edgeharden_core::solver::{self, probe_backends};
use edgeharden_core::{
    generate, Error, EvaluationConfig, Formulation, GenConfig, Instance, Scheme, SdduScenarioSet, Solution,
    SolverConfig, SweepBase, SweepParam,
};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_SOLVER: u8 = 5;

#[derive(Parser)]
#[command(name = "edgeharden", version, about = "Robust edge-link hardening planner")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build and solve one formulation.
    Solve {
        instance: PathBuf,
        #[arg(short, long, value_parser = parse_formulation)]
        formulation: Formulation,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sddu: SdduArgs,
        /// Square-term encoding: envelope or binary.
        #[arg(long, default_value = "envelope", value_parser = parse_squares)]
        squares: SquareEncoding,
    },
    /// Recompute worst-case cost and delays of a solution.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        /// Allowed gap between the stored and recomputed worst-case cost.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Out-of-sample comparison of hardening schemes.
    Evaluate {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "nh,rand,sddu,rddu", value_parser = parse_scheme)]
        schemes: Vec<Scheme>,
        /// Number of evaluation scenarios.
        #[arg(short = 'N', long = "scenarios", default_value_t = 200)]
        num_scenarios: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write `<prefix>_summary.csv` and `<prefix>_costs.csv`.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 4)]
        sddu_scenarios: usize,
    },
    /// Solve formulations over a grid of one parameter.
    Sweep {
        /// Base instance; without it the generator flags define the base.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "rddu", value_parser = parse_formulation)]
        formulations: Vec<Formulation>,
        /// Wide table; a `_long` file is written next to it.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sddu: SdduArgs,
    },
    /// Write a formulation as MPS or LP.
    Export {
        instance: PathBuf,
        #[arg(short, long, value_parser = parse_formulation)]
        formulation: Formulation,
        #[arg(long, value_enum, default_value_t = ExportFormat::Mps)]
        format: ExportFormat,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        sddu: SdduArgs,
        /// Square-term encoding: envelope or binary.
        #[arg(long, default_value = "envelope", value_parser = parse_squares)]
        squares: SquareEncoding,
    },
    /// List solver backends that pass a smoke test.
    Probe,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Mps,
    Lp,
}

#[derive(Args, Clone)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    areas: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    /// Hardening budget B.
    #[arg(long)]
    budget: Option<f64>,
    /// Hardening cost scale.
    #[arg(long)]
    psi: Option<f64>,
    /// Uncertainty budget of the decision-independent set.
    #[arg(long)]
    gamma1: Option<f64>,
    /// Uncertainty budget of the decision-dependent set.
    #[arg(long)]
    gamma2: Option<f64>,
    /// Impact of the first hardening level.
    #[arg(long)]
    gamma_level1: Option<f64>,
    /// Impact increment between levels.
    #[arg(long)]
    dgamma: Option<f64>,
    /// Cost increment between levels.
    #[arg(long)]
    dh: Option<f64>,
    /// Delay penalty.
    #[arg(long)]
    rho: Option<f64>,
    /// Workload impact on delay.
    #[arg(long)]
    u: Option<f64>,
    /// Average delay cap.
    #[arg(long)]
    delta: Option<f64>,
    /// Fraction of demand that may go unmet.
    #[arg(long)]
    alpha: Option<f64>,
    /// Nominal delay range `LO,HI`.
    #[arg(long, value_parser = parse_range)]
    delay_min: Option<(f64, f64)>,
    /// Maximum delay deviation range `LO,HI`.
    #[arg(long, value_parser = parse_range)]
    delay_dev: Option<(f64, f64)>,
}

impl GenArgs {
    fn config(&self) -> GenConfig {
        let mut c = GenConfig {
            seed: self.seed,
            ..GenConfig::default()
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(areas => num_areas, nodes => num_nodes, levels => num_levels, budget => budget, psi => psi,
             gamma1 => uncertainty_budget_diu, gamma2 => uncertainty_budget_ddu, gamma_level1 => gamma_level1,
             dgamma => delta_gamma, dh => delta_h, rho => delay_penalty, u => workload_impact,
             delta => delay_cap, alpha => unmet_fraction_cap, delay_min => delay_min_range,
             delay_dev => delay_dev_range);
        c
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Backend name (highs or cbc); defaults to $EDGEHARDEN_SOLVER or highs.
    #[arg(long)]
    backend: Option<String>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    solver_seed: Option<u64>,
}

impl SolverArgs {
    fn config(&self, base: SolverConfig) -> SolverConfig {
        let mut c = base;
        if let Some(b) = &self.backend {
            c.backend = b.clone();
        }
        if let Some(g) = self.gap {
            c.mip_gap = g;
        }
        if let Some(t) = self.time_limit {
            c.time_limit = t;
        }
        if let Some(t) = self.threads {
            c.threads = t;
        }
        if let Some(s) = self.solver_seed {
            c.seed = s;
        }
        c
    }
}

#[derive(Args, Clone)]
struct SdduArgs {
    /// Scenario count of the stochastic model.
    #[arg(long, default_value_t = 4)]
    sddu_scenarios: usize,
    #[arg(long, default_value_t = 1)]
    sddu_seed: u64,
}

impl SdduArgs {
    fn scenarios(&self, f: &[Formulation]) -> edgeharden_core::Result<Option<SdduScenarioSet>> {
        if f.contains(&Formulation::Sddu) {
            SdduScenarioSet::uniform(self.sddu_scenarios, self.sddu_seed).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn parse_squares(s: &str) -> Result<SquareEncoding, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::InvalidConfig(_) | Error::InvalidArgument(_)) => EXIT_USAGE,
        Some(Error::Parse { .. } | Error::Io { .. } | Error::InvalidInstance(_)) => EXIT_PARSE,
        Some(Error::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(_) => EXIT_SOLVER,
        None => EXIT_USAGE,
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Ok(Instance::load(path)?)
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Gen { gen, out } => {
            let inst = generate(&gen.config())?;
            inst.save(&out)?;
            println!("wrote {}", out.display());
            println!(
                "areas {}  nodes {}  levels {}  links {}",
                inst.num_areas,
                inst.num_nodes,
                inst.num_levels,
                inst.num_links()
            );
            println!(
                "total demand {}  total capacity {}",
                inst.total_demand(),
                inst.total_capacity()
            );
            Ok(0)
        }
        Command::Solve {
            instance,
            formulation,
            out,
            solver,
            sddu,
            squares,
        } => {
            let inst = load_instance(&instance)?;
            let config = solver.config(SolverConfig::default());
            let scen = sddu.scenarios(&[formulation])?;
            let built = build_with(&inst, formulation, scen.as_ref(), &BuildOptions { squares })?;
            let stats = built.model.stats();
            let result = solver::solve(&built.model, &config)?;
            let values = result.require_values()?;
            let sol = extract_solution(&inst, &built, values, result.objective)?;
            println!("formulation {formulation}");
            println!(
                "status      {}{}",
                result.status,
                if result.timed_out { " (time limit)" } else { "" }
            );
            println!("objective   {}", sol.objective);
            println!("payment     {}", sol.hardening_payment);
            println!("hardened    {} links", sol.plan.num_hardened(&inst));
            println!("gap         {:.3e}", result.gap());
            println!("runtime     {:.3}s ({})", result.runtime, result.backend);
            println!(
                "model       {} rows, {} cols ({} binary, {} integer, {} continuous), {} nonzeros",
                stats.rows, stats.cols, stats.binaries, stats.integers, stats.continuous, stats.nonzeros
            );
            if let Some(out) = out {
                sol.save(&inst, &out)?;
                println!("wrote {}", out.display());
            }
            Ok(0)
        }
        Command::Verify {
            instance,
            solution,
            tol,
        } => {
            let inst = load_instance(&instance)?;
            let sol = Solution::load(&inst, &solution)?;
            verify(&inst, &sol, tol)
        }
        Command::Evaluate {
            instance,
            schemes,
            num_scenarios,
            seed,
            out_prefix,
            solver,
            sddu_scenarios,
        } => {
            let inst = load_instance(&instance)?;
            let config = EvaluationConfig {
                num_scenarios,
                seed,
                schemes,
                sddu_scenarios,
                plan_solver: solver.config(SolverConfig::sweep()),
                allocation_solver: solver.config(SolverConfig::default()),
            };
            let report = compare_schemes(&inst, &config)?;
            println!(
                "{:<6} {:>10} {:>12} {:>10} {:>12} {:>12} {:>6}",
                "scheme", "payment", "mean", "std", "p5", "p95", "infeas"
            );
            for s in &report.schemes {
                if let Some(err) = &s.error {
                    println!("{:<6} failed: {err}", s.scheme);
                    continue;
                }
                let m = s.summary();
                println!(
                    "{:<6} {:>10.4} {:>12.4} {:>10.4} {:>12.4} {:>12.4} {:>6}",
                    s.scheme,
                    s.payment,
                    m.mean,
                    m.std,
                    m.p5,
                    m.p95,
                    s.num_infeasible()
                );
            }
            if let Some(prefix) = out_prefix {
                report.write(&prefix)?;
            }
            Ok(0)
        }
        Command::Sweep {
            instance,
            param,
            grid,
            formulations,
            out,
            gen,
            solver,
            sddu,
        } => {
            let base = match instance {
                Some(path) => SweepBase::Instance(load_instance(&path)?),
                None => SweepBase::Config(gen.config()),
            };
            let config = solver.config(SolverConfig::sweep());
            let scen = sddu.scenarios(&formulations)?;
            let rows = evaluate::sweep(&base, param, &grid, &formulations, &config, scen.as_ref())?;
            write_file(&out, &sweep_csv(&rows))?;
            let long = long_path(&out);
            write_file(&long, &sweep_long_csv(&rows))?;
            println!(
                "{:<10} {:<6} {:>10} {:>14} {:>10} {:>9} {:>7}",
                param.name(),
                "model",
                "status",
                "cost",
                "payment",
                "runtime",
                "rows"
            );
            for r in &rows {
                println!(
                    "{:<10} {:<6} {:>10} {:>14.4} {:>10.4} {:>8.2}s {:>7}",
                    r.value, r.formulation, r.status, r.objective, r.payment, r.runtime, r.rows
                );
            }
            println!("wrote {} and {}", out.display(), long.display());
            Ok(0)
        }
        Command::Export {
            instance,
            formulation,
            format,
            out,
            sddu,
            squares,
        } => {
            let inst = load_instance(&instance)?;
            let scen = sddu.scenarios(&[formulation])?;
            let built = build_with(&inst, formulation, scen.as_ref(), &BuildOptions { squares })?;
            let exported = match format {
                ExportFormat::Mps => built.model.write_mps()?,
                ExportFormat::Lp => built.model.write_lp()?,
            };
            write_file(&out, &exported.text)?;
            if !exported.renamed.is_empty() {
                let map = out.with_extension("names");
                write_file(&map, &exported.name_map())?;
                println!("names mangled; map in {}", map.display());
            }
            let s = built.model.stats();
            println!("wrote {} ({} rows, {} cols)", out.display(), s.rows, s.cols);
            Ok(0)
        }
        Command::Probe => {
            let found = probe_backends();
            if found.is_empty() {
                println!("no working backend");
            }
            for name in found {
                println!("{name}");
            }
            Ok(0)
        }
    }
}

fn verify(inst: &Instance, sol: &Solution, tol: f64) -> anyhow::Result<u8> {
    let mut ok = true;
    if let Err(msg) = sol.check(inst) {
        println!("FAIL {msg}");
        return Ok(EXIT_VERIFY_FAILED);
    }
    let payment = sol.plan.payment(inst);
    if (payment - sol.hardening_payment).abs() > 1e-9 * payment.abs().max(1.0) {
        println!(
            "FAIL stored payment {} differs from recomputed {payment}",
            sol.hardening_payment
        );
        ok = false;
    }
    let wc = worst_case_cost(inst, sol)?;
    println!("worst-case cost {wc}");
    let robust = matches!(sol.formulation.as_str(), "rddu" | "erddu" | "brute-force");
    if robust {
        let diff = (wc - sol.objective).abs();
        let pass = diff <= tol * sol.objective.abs().max(1.0);
        println!(
            "stored objective {} (difference {diff:.3e}) {}",
            sol.objective,
            if pass { "ok" } else { "FAIL" }
        );
        ok &= pass;
    } else {
        println!(
            "stored objective {} ({} objective, not compared)",
            sol.objective, sol.formulation
        );
    }
    for i in 0..inst.num_areas {
        let d = worst_case_delay(inst, sol, i)?;
        let cap = inst.delay_cap[i];
        let pass = d <= cap + tol;
        println!(
            "area {i}: worst-case delay {d:.6} cap {cap} {}",
            if pass { "ok" } else { "FAIL" }
        );
        if robust {
            ok &= pass;
        }
    }
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { 0 } else { EXIT_VERIFY_FAILED })
}

fn long_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_long.{ext}"))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    Ok(())
}
