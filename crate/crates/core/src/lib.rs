//! Robust link hardening for edge computing under decision-dependent delay
//! uncertainty.
//!
//! The crate generates synthetic instances, builds the deterministic, robust
//! and stochastic hardening models as MILPs, solves them through HiGHS or an
//! external CBC binary, certifies robust solutions with brute-force oracles,
//! and evaluates hardening plans out of sample.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluate;
pub mod formulations;
pub mod instance;
pub mod linearize;
pub mod milp;
pub mod oracle;
pub mod plan;
pub mod rng;
pub mod solver;
mod textfmt;

pub use error::{Error, Result};
pub use evaluate::{EvaluationConfig, EvaluationReport, Scenario, Scheme, SweepBase, SweepParam, SweepRow};
pub use formulations::{BuiltModel, Formulation, SdduScenarioSet, SolvedFormulation};
pub use instance::{generate, GenConfig, Instance};
pub use milp::{LinExpr, MilpModel, ModelStats, Sense, VarRef, Variable};
pub use plan::{Allocation, HardeningPlan, Solution};
pub use solver::{SolveStatus, SolverConfig, SolverResult};
