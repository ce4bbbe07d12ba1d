//! Solving a [`MilpModel`] through a named backend.
//!
//! Two backends are registered: `highs` (linked in-process) and `cbc`
//! (external executable fed an MPS file). Every result is re-checked against
//! the model before it is returned.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::milp::{LinExpr, MilpModel, Sense, VarKind, VarRef, Variable};

/// Environment variable naming the default backend.
pub const SOLVER_ENV: &str = "EDGEHARDEN_SOLVER";
/// Environment variable pointing at a CBC executable.
pub const CBC_ENV: &str = "EDGEHARDEN_CBC";

/// When set, backends print their own progress logs.
pub const LOG_ENV: &str = "EDGEHARDEN_SOLVER_LOG";
/// Row, bound and integrality tolerance used when re-checking solutions.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub backend: String,
    /// Relative optimality gap.
    pub mip_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub threads: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: std::env::var(SOLVER_ENV)
                .ok()
                .filter(|s| !s.trim().is_empty())
                .unwrap_or_else(|| "highs".to_string()),
            mip_gap: 1e-4,
            time_limit: 3600.0,
            threads: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Looser gap used for parameter sweeps.
    pub fn sweep() -> Self {
        Self {
            mip_gap: 2e-3,
            ..Self::default()
        }
    }

    /// Gap small enough to compare optimal values across formulations.
    pub fn exact() -> Self {
        Self {
            mip_gap: 1e-9,
            ..Self::default()
        }
    }

    pub fn with_backend(mut self, name: impl Into<String>) -> Self {
        self.backend = name.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mip_gap >= 0.0 && self.mip_gap.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mip gap must be >= 0, got {}",
                self.mip_gap
            )));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time limit must be positive, got {}",
                self.time_limit
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Timeout,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Error => "error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolveStatus,
    pub backend: String,
    /// Objective at `values`, including the model's constant term.
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    /// One entry per model variable, present iff the status has a solution.
    pub values: Option<Vec<f64>>,
    /// Seconds spent inside the backend.
    pub runtime: f64,
    /// Stopped by the time limit (possibly with an incumbent).
    pub timed_out: bool,
    pub message: Option<String>,
}

impl SolverResult {
    pub fn value(&self, v: VarRef) -> Option<f64> {
        self.values.as_ref().map(|vals| vals[v.index()])
    }

    /// Relative gap `|objective - bound| / max(1, |objective|)`.
    pub fn gap(&self) -> f64 {
        if self.status.has_solution() {
            (self.objective - self.bound).abs() / self.objective.abs().max(1.0)
        } else {
            f64::NAN
        }
    }

    /// Values or a typed error describing why there are none.
    pub fn require_values(&self) -> Result<&[f64]> {
        match (&self.values, self.status) {
            (Some(v), _) => Ok(v),
            (None, SolveStatus::Infeasible) => Err(Error::Infeasible(format!(
                "{} reported the model infeasible",
                self.backend
            ))),
            (None, status) => Err(Error::Solver(format!(
                "{} finished with status {status}{}",
                self.backend,
                self.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default()
            ))),
        }
    }
}

/// What a backend reports before the crate's own checks.
#[derive(Debug, Clone)]
pub struct RawSolve {
    pub status: SolveStatus,
    pub timed_out: bool,
    /// Lower bound without the objective constant, if the backend reports one.
    pub bound: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub message: Option<String>,
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    /// `Err(reason)` when the backend cannot be used in this environment.
    fn check_available(&self) -> std::result::Result<(), String>;
    fn run(&self, model: &MilpModel, config: &SolverConfig) -> Result<RawSolve>;
}

pub fn backend_names() -> &'static [&'static str] {
    &["highs", "cbc"]
}

pub fn backend(name: &str) -> Result<Box<dyn Backend>> {
    match name.to_ascii_lowercase().as_str() {
        "highs" => Ok(Box::new(HighsBackend)),
        "cbc" => Ok(Box::new(CbcBackend::from_env())),
        other => Err(Error::BackendUnavailable {
            backend: other.to_string(),
            reason: format!("unknown backend; known backends: {}", backend_names().join(", ")),
        }),
    }
}

/// Solves with the backend named in `config`.
pub fn solve(model: &MilpModel, config: &SolverConfig) -> Result<SolverResult> {
    let b = backend(&config.backend)?;
    solve_with(b.as_ref(), model, config)
}

pub fn solve_with(backend: &dyn Backend, model: &MilpModel, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    if model.is_empty() {
        return Err(Error::InvalidArgument("cannot solve an empty model".into()));
    }
    backend.check_available().map_err(|reason| Error::BackendUnavailable {
        backend: backend.name().to_string(),
        reason,
    })?;
    let start = Instant::now();
    let raw = backend.run(model, config)?;
    let runtime = start.elapsed().as_secs_f64();
    Ok(finish(backend.name(), model, config, raw, runtime))
}

fn finish(name: &str, model: &MilpModel, config: &SolverConfig, raw: RawSolve, runtime: f64) -> SolverResult {
    let constant = model.objective().constant_term();
    let mut result = SolverResult {
        status: raw.status,
        backend: name.to_string(),
        objective: f64::NAN,
        bound: raw.bound.map_or(f64::NAN, |b| b + constant),
        values: None,
        runtime,
        timed_out: raw.timed_out,
        message: raw.message,
    };
    if !raw.status.has_solution() {
        return result;
    }
    let Some(values) = raw.values else {
        result.status = SolveStatus::Error;
        result.message = Some("backend reported a solution but returned no values".into());
        return result;
    };
    let violations = model.check_point(&values, FEASIBILITY_TOL);
    if !violations.is_empty() {
        let worst = violations
            .iter()
            .max_by(|a, b| a.amount.total_cmp(&b.amount))
            .expect("nonempty");
        log::warn!(
            "{name}: solution violates {} checks, worst {} by {:e}",
            violations.len(),
            worst.what,
            worst.amount
        );
        result.status = SolveStatus::Error;
        result.message = Some(format!(
            "solution failed re-check: {} violated by {:e}",
            worst.what, worst.amount
        ));
        return result;
    }
    result.objective = model.objective().evaluate(&values);
    if result.status == SolveStatus::Optimal && !(result.bound <= result.objective) {
        // missing, or above the incumbent by round-off
        result.bound = result.objective;
    }
    if result.status == SolveStatus::Optimal {
        // allow the backend's own feasibility slack on top of the gap
        let allowed = (config.mip_gap + FEASIBILITY_TOL) * result.objective.abs().max(1.0);
        if (result.objective - result.bound).abs() > allowed {
            log::warn!(
                "{name}: optimal status with gap {:e} above tolerance; reporting as feasible",
                result.gap()
            );
            result.status = SolveStatus::Feasible;
        }
    }
    result.values = Some(values);
    result
}

/// Backends that solve the one-variable smoke model to its optimum of 1.
pub fn probe_backends() -> Vec<String> {
    let all: Vec<Box<dyn Backend>> = backend_names().iter().filter_map(|n| backend(n).ok()).collect();
    probe(&all)
}

pub fn probe(backends: &[Box<dyn Backend>]) -> Vec<String> {
    let model = smoke_model();
    let config = SolverConfig {
        time_limit: 60.0,
        ..SolverConfig::default()
    };
    let mut out = Vec::new();
    for b in backends {
        match solve_with(b.as_ref(), &model, &config) {
            Ok(r) if r.status == SolveStatus::Optimal && (r.objective - 1.0).abs() < 1e-9 => {
                out.push(b.name().to_string());
            }
            Ok(r) => log::info!(
                "backend {} excluded: smoke model gave {} {}",
                b.name(),
                r.status,
                r.objective
            ),
            Err(e) => log::info!("backend {} excluded: {e}", b.name()),
        }
    }
    out
}

/// `min x  s.t.  x ≥ 1,  x integer`.
pub fn smoke_model() -> MilpModel {
    let mut m = MilpModel::new("smoke");
    let x = m
        .add_var(Variable::integer("x", 0.0, f64::INFINITY))
        .expect("fresh model");
    m.add_constr(x.into(), Sense::Ge, 1.0, "c1").expect("fresh model");
    m.set_objective(LinExpr::from(x)).expect("fresh model");
    m
}

/// HiGHS linked into the process.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn check_available(&self) -> std::result::Result<(), String> {
        Ok(())
    }

    fn run(&self, model: &MilpModel, config: &SolverConfig) -> Result<RawSolve> {
        use highs::{HighsModelStatus as H, RowProblem, Sense as HSense};

        let mut pb = RowProblem::default();
        let mut obj = vec![0.0; model.num_vars()];
        for &(v, c) in model.objective().terms() {
            obj[v.index()] += c;
        }
        let has_integers = model.variables().iter().any(|v| v.kind.is_integral());
        let cols: Vec<highs::Col> = model
            .variables()
            .iter()
            .zip(&obj)
            .map(|(v, &c)| {
                let bounds = v.lower..=v.upper;
                match v.kind {
                    VarKind::Continuous => pb.add_column(c, bounds),
                    VarKind::Integer | VarKind::Binary => pb.add_integer_column(c, bounds),
                }
            })
            .collect();
        for row in model.constraints() {
            let factors: Vec<(highs::Col, f64)> = row.expr.terms().iter().map(|&(v, a)| (cols[v.index()], a)).collect();
            match row.sense {
                Sense::Le => pb.add_row(..=row.rhs, &factors),
                Sense::Ge => pb.add_row(row.rhs.., &factors),
                Sense::Eq => pb.add_row(row.rhs..=row.rhs, &factors),
            }
        }

        let mut hm = pb
            .try_optimise(HSense::Minimise)
            .map_err(|s| Error::Solver(format!("HiGHS rejected the model: {s:?}")))?;
        if std::env::var_os(LOG_ENV).is_some() {
            hm.set_option("output_flag", true);
            hm.set_option("log_to_console", true);
        } else {
            hm.make_quiet();
        }
        hm.set_option("mip_rel_gap", config.mip_gap);
        if config.mip_gap < 1e-6 {
            hm.set_option("mip_abs_gap", 1e-9);
        }
        hm.set_option("time_limit", config.time_limit);
        hm.set_option("threads", config.threads as i32);
        hm.set_option("random_seed", (config.seed % (i32::MAX as u64)) as i32);
        hm.set_option("mip_feasibility_tolerance", 1e-7);
        let solved = hm
            .try_solve()
            .map_err(|s| Error::Solver(format!("HiGHS failed: {s:?}")))?;

        let status = solved.status();
        let has_incumbent = matches!(solved.primal_solution_status(), highs::HighsSolutionStatus::Feasible);
        let bound = if has_integers {
            solved
                .double_info_value(c"mip_dual_bound")
                .ok()
                .filter(|b| b.is_finite())
        } else {
            None
        };
        let values = || Some(solved.get_solution().columns().to_vec());
        let raw = match status {
            H::Optimal => RawSolve {
                status: SolveStatus::Optimal,
                timed_out: false,
                bound: bound.or(Some(solved.objective_value())),
                values: values(),
                message: None,
            },
            H::ModelEmpty => RawSolve {
                status: SolveStatus::Optimal,
                timed_out: false,
                bound: Some(0.0),
                values: Some(vec![0.0; model.num_vars()]),
                message: None,
            },
            H::Infeasible => no_solution(SolveStatus::Infeasible, None),
            H::Unbounded => no_solution(SolveStatus::Unbounded, None),
            H::UnboundedOrInfeasible => {
                // ambiguous in presolve; integrality-free models here are always bounded
                no_solution(SolveStatus::Infeasible, Some("HiGHS: unbounded or infeasible".into()))
            }
            H::ReachedTimeLimit | H::ReachedIterationLimit | H::ReachedInterrupt | H::ReachedSolutionLimit => {
                if has_incumbent {
                    RawSolve {
                        status: SolveStatus::Feasible,
                        timed_out: true,
                        bound,
                        values: values(),
                        message: Some(format!("stopped early: {status:?}")),
                    }
                } else {
                    RawSolve {
                        status: SolveStatus::Timeout,
                        timed_out: true,
                        bound,
                        values: None,
                        message: Some(format!("stopped early: {status:?}")),
                    }
                }
            }
            other => no_solution(SolveStatus::Error, Some(format!("HiGHS status {other:?}"))),
        };
        Ok(raw)
    }
}

fn no_solution(status: SolveStatus, message: Option<String>) -> RawSolve {
    RawSolve {
        status,
        timed_out: false,
        bound: None,
        values: None,
        message,
    }
}

/// CBC run as a subprocess on an MPS export.
#[derive(Debug, Clone)]
pub struct CbcBackend {
    path: Option<PathBuf>,
}

impl CbcBackend {
    /// Uses `$EDGEHARDEN_CBC`, else `cbc` on `PATH`.
    pub fn from_env() -> Self {
        let path = std::env::var_os(CBC_ENV)
            .map(PathBuf::from)
            .or_else(|| find_on_path("cbc"));
        Self { path }
    }

    pub fn with_path(path: impl Into<PathBuf>) -> Self {
        Self {
            path: Some(path.into()),
        }
    }

    fn exe(&self) -> std::result::Result<&Path, String> {
        match &self.path {
            Some(p) if p.is_file() => Ok(p),
            Some(p) => Err(format!(
                "{} does not exist; set {CBC_ENV} to a CBC executable",
                p.display()
            )),
            None => Err(format!("no `cbc` executable on PATH; install CBC or set {CBC_ENV}")),
        }
    }
}

fn find_on_path(exe: &str) -> Option<PathBuf> {
    let paths = std::env::var_os("PATH")?;
    std::env::split_paths(&paths)
        .map(|dir| dir.join(exe))
        .find(|p| p.is_file())
}

impl Backend for CbcBackend {
    fn name(&self) -> &str {
        "cbc"
    }

    fn check_available(&self) -> std::result::Result<(), String> {
        self.exe().map(|_| ())
    }

    fn run(&self, model: &MilpModel, config: &SolverConfig) -> Result<RawSolve> {
        let exe = self.exe().map_err(|reason| Error::BackendUnavailable {
            backend: "cbc".into(),
            reason,
        })?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let mps_path = dir.path().join("model.mps");
        let sol_path = dir.path().join("model.sol");
        let export = model.write_mps()?;
        std::fs::write(&mps_path, &export.text).map_err(|e| Error::io(&mps_path, e))?;

        let output = Command::new(exe)
            .arg(&mps_path)
            .args(["-ratioGap", &config.mip_gap.to_string()])
            .args(["-allowableGap", if config.mip_gap < 1e-6 { "1e-9" } else { "1e-6" }])
            .args(["-seconds", &config.time_limit.to_string()])
            .args(["-threads", &config.threads.to_string()])
            .args(["-randomCbcSeed", &(config.seed % (i32::MAX as u64)).max(1).to_string()])
            .arg("-solve")
            .arg("-solution")
            .arg(&sol_path)
            .output()
            .map_err(|e| Error::Solver(format!("failed to start {}: {e}", exe.display())))?;
        let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
        if !output.status.success() && !sol_path.exists() {
            return Err(Error::Solver(format!(
                "cbc exited with {}:\n{}{}",
                output.status,
                stdout,
                String::from_utf8_lossy(&output.stderr)
            )));
        }
        let text = std::fs::read_to_string(&sol_path)
            .map_err(|e| Error::Solver(format!("cbc wrote no solution file ({e}); output:\n{stdout}")))?;
        parse_cbc_solution(&text, &stdout, model.num_vars())
    }
}

/// Parses a CBC `-solution` file. Columns absent from the file are zero.
pub fn parse_cbc_solution(text: &str, stdout: &str, num_vars: usize) -> Result<RawSolve> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Solver("empty cbc solution file".into()))?
        .trim()
        .to_string();
    let lower = header.to_ascii_lowercase();
    let has_objective = lower.contains("objective value");
    let stopped = lower.starts_with("stopped");

    let status = if lower.starts_with("optimal") {
        SolveStatus::Optimal
    } else if lower.contains("infeasible") {
        SolveStatus::Infeasible
    } else if lower.contains("unbounded") {
        SolveStatus::Unbounded
    } else if stopped
        && has_objective
        && !lower.contains("no solution")
        && !lower.contains("no integer solution")
        && !stdout.contains("No feasible solution found")
    {
        SolveStatus::Feasible
    } else if stopped {
        SolveStatus::Timeout
    } else {
        return Err(Error::Solver(format!("unrecognised cbc status line `{header}`")));
    };
    if !status.has_solution() {
        return Ok(RawSolve {
            status,
            timed_out: stopped,
            bound: None,
            values: None,
            message: Some(header),
        });
    }

    let mut values = vec![0.0; num_vars];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        // infeasible-row listings start with `**`
        let fields: Vec<&str> = if fields[0] == "**" {
            fields[1..].to_vec()
        } else {
            fields
        };
        if fields.len() < 3 {
            return Err(Error::CorruptSolution(format!("cbc solution line {}: `{line}`", n + 2)));
        }
        let idx: usize = fields[0]
            .parse()
            .map_err(|_| Error::CorruptSolution(format!("cbc solution line {}: bad index", n + 2)))?;
        let val: f64 = fields[2]
            .parse()
            .map_err(|_| Error::CorruptSolution(format!("cbc solution line {}: bad value", n + 2)))?;
        if idx >= num_vars {
            return Err(Error::CorruptSolution(format!(
                "cbc solution names column {idx}, model has {num_vars}"
            )));
        }
        values[idx] = val;
    }

    let bound = stdout
        .lines()
        .find_map(|l| l.trim().strip_prefix("Lower bound:"))
        .and_then(|s| s.trim().parse::<f64>().ok());
    Ok(RawSolve {
        status,
        timed_out: stopped,
        bound,
        values: Some(values),
        message: stopped.then_some(header),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig {
            mip_gap: -1.0,
            ..SolverConfig::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            time_limit: 0.0,
            ..SolverConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(SolverConfig::sweep().mip_gap, 2e-3);
    }

    #[test]
    fn unknown_backend_is_an_environment_error() {
        let cfg = SolverConfig::default().with_backend("nope");
        match solve(&smoke_model(), &cfg) {
            Err(Error::BackendUnavailable { backend, .. }) => assert_eq!(backend, "nope"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn highs_solves_smoke_model() {
        let r = solve_with(&HighsBackend, &smoke_model(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 1.0);
        assert_eq!(r.values.as_deref(), Some(&[1.0][..]));
    }

    #[test]
    fn highs_reports_infeasible() {
        let mut m = MilpModel::new("inf");
        let x = m.add_var(Variable::integer("x", 0.0, 10.0)).unwrap();
        m.add_constr(x.into(), Sense::Ge, 1.0, "lo").unwrap();
        m.add_constr(x.into(), Sense::Le, 0.0, "hi").unwrap();
        m.set_objective(x.into()).unwrap();
        let r = solve_with(&HighsBackend, &m, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.values.is_none());
        assert!(matches!(r.require_values(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn objective_constant_is_added() {
        let mut m = smoke_model();
        let x = m.find_var("x").unwrap();
        m.set_objective(LinExpr::constant(2.5).term(x, 1.0)).unwrap();
        let r = solve_with(&HighsBackend, &m, &SolverConfig::default()).unwrap();
        assert_eq!(r.objective, 3.5);
        assert!((r.bound - 3.5).abs() < 1e-9);
    }

    #[test]
    fn misconfigured_cbc_is_excluded() {
        let bad: Vec<Box<dyn Backend>> = vec![Box::new(CbcBackend::with_path("/nonexistent/cbc"))];
        assert!(probe(&bad).is_empty());
        assert!(probe(&[]).is_empty());
    }

    #[test]
    fn cbc_solution_parsing() {
        let text = "Optimal - objective value 1.00000000\n      0 x                      1                       0\n";
        let raw = parse_cbc_solution(text, "", 2).unwrap();
        assert_eq!(raw.status, SolveStatus::Optimal);
        assert_eq!(raw.values, Some(vec![1.0, 0.0]));
        let stopped = parse_cbc_solution(
            "Stopped on time - objective value 4.5\n      1 y 2 0\n",
            "Lower bound: 4.25\n",
            2,
        )
        .unwrap();
        assert_eq!(stopped.status, SolveStatus::Feasible);
        assert!(stopped.timed_out);
        assert_eq!(stopped.bound, Some(4.25));
        let relaxed = parse_cbc_solution(
            "Stopped on time (no integer solution - continuous used) - objective value -7.1\n      0 v 0.5 0\n",
            "No feasible solution found\n",
            2,
        )
        .unwrap();
        assert_eq!(relaxed.status, SolveStatus::Timeout);
        assert!(relaxed.values.is_none());
        let inf = parse_cbc_solution("Infeasible - objective value 0\n", "", 2).unwrap();
        assert_eq!(inf.status, SolveStatus::Infeasible);
        assert!(parse_cbc_solution("Optimal - objective value 1\n 9 z 1 0\n", "", 2).is_err());
    }
}
