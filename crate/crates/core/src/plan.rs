//! Decisions: hardening plans, allocations, and full solutions.

use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::textfmt::{TextDoc, TextWriter};

/// Hardening choices `t[i][j][r]`, flattened like [`Instance::harden_cost`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardeningPlan {
    pub t: Vec<u8>,
}

impl HardeningPlan {
    pub fn none(inst: &Instance) -> Self {
        Self {
            t: vec![0; inst.num_links() * inst.num_levels],
        }
    }

    /// Plan with the given 0-based level on each listed link.
    pub fn from_levels(inst: &Instance, levels: &[(usize, usize)]) -> Self {
        let mut plan = Self::none(inst);
        for &(link, level) in levels {
            plan.t[inst.level_index(link, level)] = 1;
        }
        plan
    }

    pub fn is_set(&self, inst: &Instance, link: usize, level: usize) -> bool {
        self.t[inst.level_index(link, level)] != 0
    }

    /// 0-based level chosen on a link, if any (the lowest when several are set).
    pub fn level(&self, inst: &Instance, link: usize) -> Option<usize> {
        (0..inst.num_levels).find(|&r| self.is_set(inst, link, r))
    }

    /// `Σ h t`.
    pub fn payment(&self, inst: &Instance) -> f64 {
        self.t
            .iter()
            .zip(&inst.harden_cost)
            .filter(|(t, _)| **t != 0)
            .fold(0.0, |acc, (_, h)| acc + h)
    }

    /// `Σ_r γ^r t^r` on a link.
    pub fn impact(&self, inst: &Instance, link: usize) -> f64 {
        (0..inst.num_levels)
            .filter(|&r| self.is_set(inst, link, r))
            .map(|r| inst.impact(link, r))
            .sum()
    }

    /// Upper bound `1 - Σ_r γ^r t^r` on the deviation fraction of a link.
    pub fn deviation_cap(&self, inst: &Instance, link: usize) -> f64 {
        (1.0 - self.impact(inst, link)).max(0.0)
    }

    pub fn num_hardened(&self, inst: &Instance) -> usize {
        (0..inst.num_links()).filter(|&l| self.level(inst, l).is_some()).count()
    }

    /// Shape, one-level-per-link and budget checks.
    pub fn check(&self, inst: &Instance) -> std::result::Result<(), String> {
        let n = inst.num_links() * inst.num_levels;
        if self.t.len() != n {
            return Err(format!("plan has {} entries, expected {n}", self.t.len()));
        }
        if let Some(k) = self.t.iter().position(|&v| v > 1) {
            return Err(format!("t entry {k} is {} (not binary)", self.t[k]));
        }
        for link in 0..inst.num_links() {
            let count = (0..inst.num_levels).filter(|&r| self.is_set(inst, link, r)).count();
            if count > 1 {
                let (i, j) = inst.endpoints(link);
                return Err(format!("link ({i}, {j}) is hardened at {count} levels"));
            }
        }
        let pay = self.payment(inst);
        if pay > inst.budget + 1e-9 * inst.budget.max(1.0) {
            return Err(format!("payment {pay} exceeds budget {}", inst.budget));
        }
        Ok(())
    }
}

/// Workload allocation `x[i][j]` and dropped demand `w[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub x: Vec<u32>,
    pub w: Vec<u32>,
}

impl Allocation {
    /// Capacity, demand balance and unmet-demand checks.
    pub fn check(&self, inst: &Instance) -> std::result::Result<(), String> {
        if self.x.len() != inst.num_links() || self.w.len() != inst.num_areas {
            return Err("allocation has wrong dimensions".into());
        }
        for j in 0..inst.num_nodes {
            let load: u64 = (0..inst.num_areas).map(|i| u64::from(self.x[inst.link(i, j)])).sum();
            if load > u64::from(inst.capacity[j]) {
                return Err(format!("capacity row of node {j}: load {load} > {}", inst.capacity[j]));
            }
        }
        for i in 0..inst.num_areas {
            let served: u64 = (0..inst.num_nodes).map(|j| u64::from(self.x[inst.link(i, j)])).sum();
            if served + u64::from(self.w[i]) != u64::from(inst.demand[i]) {
                return Err(format!(
                    "demand row of area {i}: served {served} + unmet {} != {}",
                    self.w[i], inst.demand[i]
                ));
            }
            if self.w[i] > inst.unmet_cap(i) {
                return Err(format!(
                    "unmet-demand cap of area {i}: {} > {}",
                    self.w[i],
                    inst.unmet_cap(i)
                ));
            }
        }
        Ok(())
    }

    /// `Σ_i s_i w_i`.
    pub fn unmet_cost(&self, inst: &Instance) -> f64 {
        self.w
            .iter()
            .zip(&inst.unmet_penalty)
            .map(|(&w, &s)| f64::from(w) * s)
            .sum()
    }
}

/// A decoded solution of one of the formulations.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub formulation: String,
    pub plan: HardeningPlan,
    pub allocation: Allocation,
    /// Optimal value reported for the model (η for the robust ones).
    pub objective: f64,
    /// `Σ h t`, recomputed from the plan.
    pub hardening_payment: f64,
    /// `objective - hardening_payment`.
    pub allocation_cost: f64,
}

impl Solution {
    pub fn check(&self, inst: &Instance) -> std::result::Result<(), String> {
        self.plan.check(inst)?;
        self.allocation.check(inst)
    }

    pub fn to_text(&self, inst: &Instance) -> String {
        let (ni, nj, nr) = (inst.num_areas, inst.num_nodes, inst.num_levels);
        let mut w = TextWriter::new("solution");
        w.scalar("formulation", &self.formulation);
        w.scalar("num_areas", ni);
        w.scalar("num_nodes", nj);
        w.scalar("num_levels", nr);
        w.real("objective", self.objective);
        w.real("hardening_payment", self.hardening_payment);
        w.real("allocation_cost", self.allocation_cost);
        w.array("t", &[ni, nj, nr], &self.plan.t);
        w.array("x", &[ni, nj], &self.allocation.x);
        w.array("w", &[ni], &self.allocation.w);
        w.finish()
    }

    /// Parses a solution; the dimensions must match `inst`.
    pub fn from_text(text: &str, inst: &Instance, origin: &str) -> Result<Self> {
        let mut doc = TextDoc::parse(text, "solution", origin)?;
        let dims: [usize; 3] = [
            doc.scalar("num_areas")?,
            doc.scalar("num_nodes")?,
            doc.scalar("num_levels")?,
        ];
        if dims != [inst.num_areas, inst.num_nodes, inst.num_levels] {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: 0,
                message: format!(
                    "solution dimensions {dims:?} do not match the instance ({}, {}, {})",
                    inst.num_areas, inst.num_nodes, inst.num_levels
                ),
            });
        }
        let [ni, nj, nr] = dims;
        let sol = Solution {
            formulation: doc.scalar("formulation")?,
            objective: doc.scalar("objective")?,
            hardening_payment: doc.scalar("hardening_payment")?,
            allocation_cost: doc.scalar("allocation_cost")?,
            plan: HardeningPlan {
                t: doc.array("t", &[ni, nj, nr])?,
            },
            allocation: Allocation {
                x: doc.array("x", &[ni, nj])?,
                w: doc.array("w", &[ni])?,
            },
        };
        for warning in doc.leftover_warnings() {
            log::warn!("{warning}");
        }
        Ok(sol)
    }

    pub fn save(&self, inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(inst)).map_err(|e| Error::io(path, e))
    }

    pub fn load(inst: &Instance, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, inst, &path.display().to_string())
    }
}
