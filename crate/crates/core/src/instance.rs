//! Problem data: the edge network, its demands and capacities, link delay
//! bounds, and the hardening menu. Also the synthetic generator and the
//! on-disk format.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{PortableRng, Stream};
use crate::textfmt::{TextDoc, TextWriter};

/// All parameters of one hardening problem.
///
/// Per-link arrays are stored row-major: link `(i, j)` lives at `i * J + j`,
/// and level `r` (0-based) of that link at `(i * J + j) * R + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub num_areas: usize,
    pub num_nodes: usize,
    pub num_levels: usize,
    /// Resource units requested by each area.
    pub demand: Vec<u32>,
    /// Resource units available at each edge node.
    pub capacity: Vec<u32>,
    /// Cost per dropped unit, per area.
    pub unmet_penalty: Vec<f64>,
    /// Cost per unit of delay-weighted workload.
    pub delay_penalty: f64,
    /// Largest fraction of an area's demand that may be dropped.
    pub unmet_fraction_cap: Vec<f64>,
    /// Bound on the demand-weighted average delay of each area (ms).
    pub delay_cap: Vec<f64>,
    /// Total hardening budget.
    pub budget: f64,
    /// Cost of hardening a link at a level; strictly increasing in the level.
    pub harden_cost: Vec<f64>,
    /// Fraction of the delay deviation removed by a level; strictly increasing, below 1.
    pub harden_impact: Vec<f64>,
    /// Extra normalised deviation per allocated unit on a link.
    pub workload_impact: Vec<f64>,
    /// Minimum link delay (ms).
    pub delay_min: Vec<f64>,
    /// Maximum delay deviation (ms).
    pub delay_dev: Vec<f64>,
    /// Uncertainty budget of the decision-independent set.
    pub uncertainty_budget_diu: f64,
    /// Uncertainty budget of the decision-dependent set.
    pub uncertainty_budget_ddu: f64,
}

impl Instance {
    pub fn num_links(&self) -> usize {
        self.num_areas * self.num_nodes
    }

    #[inline]
    pub fn link(&self, area: usize, node: usize) -> usize {
        area * self.num_nodes + node
    }

    #[inline]
    pub fn level_index(&self, link: usize, level: usize) -> usize {
        link * self.num_levels + level
    }

    #[inline]
    pub fn cost(&self, link: usize, level: usize) -> f64 {
        self.harden_cost[self.level_index(link, level)]
    }

    #[inline]
    pub fn impact(&self, link: usize, level: usize) -> f64 {
        self.harden_impact[self.level_index(link, level)]
    }

    /// Area and node of a link index.
    pub fn endpoints(&self, link: usize) -> (usize, usize) {
        (link / self.num_nodes, link % self.num_nodes)
    }

    /// Upper bound on the allocation over a link: `min(C_j, λ_i)`.
    pub fn link_bound(&self, link: usize) -> u32 {
        let (i, j) = self.endpoints(link);
        self.demand[i].min(self.capacity[j])
    }

    /// Largest integral amount of unmet demand allowed in an area.
    pub fn unmet_cap(&self, area: usize) -> u32 {
        let raw = self.unmet_fraction_cap[area] * f64::from(self.demand[area]);
        // w is integral, so the floor is exact; the epsilon absorbs products
        // such as 0.05 * 60 = 3.0000000000000004.
        (raw + 1e-9).floor().max(0.0) as u32
    }

    pub fn total_demand(&self) -> u64 {
        self.demand.iter().map(|&d| u64::from(d)).sum()
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacity.iter().map(|&c| u64::from(c)).sum()
    }

    /// Invariant violations, empty when the instance is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (ni, nj, nr) = (self.num_areas, self.num_nodes, self.num_levels);
        if ni == 0 {
            out.push(Violation::new("num_areas", None, "must be positive"));
        }
        if nj == 0 {
            out.push(Violation::new("num_nodes", None, "must be positive"));
        }
        if nr == 0 {
            out.push(Violation::new("num_levels", None, "must be positive"));
        }

        let mut dims_ok = true;
        let mut check_len = |field: &'static str, len: usize, expected: usize| {
            if len != expected {
                dims_ok = false;
                out.push(Violation::new(
                    field,
                    None,
                    format!("dimension mismatch: {len} entries, expected {expected}"),
                ));
            }
        };
        check_len("demand", self.demand.len(), ni);
        check_len("capacity", self.capacity.len(), nj);
        check_len("unmet_penalty", self.unmet_penalty.len(), ni);
        check_len("unmet_fraction_cap", self.unmet_fraction_cap.len(), ni);
        check_len("delay_cap", self.delay_cap.len(), ni);
        check_len("harden_cost", self.harden_cost.len(), ni * nj * nr);
        check_len("harden_impact", self.harden_impact.len(), ni * nj * nr);
        check_len("workload_impact", self.workload_impact.len(), ni * nj);
        check_len("delay_min", self.delay_min.len(), ni * nj);
        check_len("delay_dev", self.delay_dev.len(), ni * nj);

        let nonneg = |out: &mut Vec<Violation>, field: &'static str, v: f64, index: Option<Vec<usize>>| {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(
                    field,
                    index,
                    format!("range: must be finite and >= 0, got {v}"),
                ));
            }
        };
        nonneg(&mut out, "delay_penalty", self.delay_penalty, None);
        nonneg(&mut out, "budget", self.budget, None);
        nonneg(&mut out, "uncertainty_budget_diu", self.uncertainty_budget_diu, None);
        nonneg(&mut out, "uncertainty_budget_ddu", self.uncertainty_budget_ddu, None);
        if !dims_ok {
            return out;
        }

        for i in 0..ni {
            nonneg(&mut out, "unmet_penalty", self.unmet_penalty[i], Some(vec![i]));
            nonneg(&mut out, "delay_cap", self.delay_cap[i], Some(vec![i]));
            let a = self.unmet_fraction_cap[i];
            if !(0.0..=1.0).contains(&a) {
                out.push(Violation::new(
                    "unmet_fraction_cap",
                    Some(vec![i]),
                    format!("range: must lie in [0, 1], got {a}"),
                ));
            }
        }
        for link in 0..ni * nj {
            let (i, j) = self.endpoints(link);
            nonneg(
                &mut out,
                "workload_impact",
                self.workload_impact[link],
                Some(vec![i, j]),
            );
            nonneg(&mut out, "delay_min", self.delay_min[link], Some(vec![i, j]));
            nonneg(&mut out, "delay_dev", self.delay_dev[link], Some(vec![i, j]));
            for r in 0..nr {
                let h = self.cost(link, r);
                let g = self.impact(link, r);
                nonneg(&mut out, "harden_cost", h, Some(vec![i, j, r]));
                if !(g.is_finite() && (0.0..1.0).contains(&g)) {
                    out.push(Violation::new(
                        "harden_impact",
                        Some(vec![i, j, r]),
                        format!("range: must lie in [0, 1), got {g}"),
                    ));
                }
                if r + 1 < nr {
                    if !(self.cost(link, r + 1) > h) {
                        out.push(Violation::new(
                            "harden_cost",
                            Some(vec![i, j, r + 1]),
                            "monotonicity: cost must strictly increase with the level",
                        ));
                    }
                    if !(self.impact(link, r + 1) > g) {
                        out.push(Violation::new(
                            "harden_impact",
                            Some(vec![i, j, r + 1]),
                            "monotonicity: impact must strictly increase with the level",
                        ));
                    }
                }
            }
        }
        out
    }

    /// `validate` as a `Result`, joining all violations into one message.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::InvalidInstance(msgs.join("; ")))
        }
    }

    pub fn to_text(&self) -> String {
        let (ni, nj, nr) = (self.num_areas, self.num_nodes, self.num_levels);
        let mut w = TextWriter::new("instance");
        w.scalar("num_areas", ni);
        w.scalar("num_nodes", nj);
        w.scalar("num_levels", nr);
        w.real("delay_penalty", self.delay_penalty);
        w.real("budget", self.budget);
        w.real("uncertainty_budget_diu", self.uncertainty_budget_diu);
        w.real("uncertainty_budget_ddu", self.uncertainty_budget_ddu);
        w.array("demand", &[ni], &self.demand);
        w.array("capacity", &[nj], &self.capacity);
        w.real_array("unmet_penalty", &[ni], &self.unmet_penalty);
        w.real_array("unmet_fraction_cap", &[ni], &self.unmet_fraction_cap);
        w.real_array("delay_cap", &[ni], &self.delay_cap);
        w.comment("per link and level, area-major");
        w.real_array("harden_cost", &[ni, nj, nr], &self.harden_cost);
        w.real_array("harden_impact", &[ni, nj, nr], &self.harden_impact);
        w.real_array("workload_impact", &[ni, nj], &self.workload_impact);
        w.real_array("delay_min", &[ni, nj], &self.delay_min);
        w.real_array("delay_dev", &[ni, nj], &self.delay_dev);
        w.finish()
    }

    /// Parses an instance; unknown fields are returned as warnings.
    pub fn from_text(text: &str, origin: &str) -> Result<(Self, Vec<String>)> {
        let mut doc = TextDoc::parse(text, "instance", origin)?;
        let ni: usize = doc.scalar("num_areas")?;
        let nj: usize = doc.scalar("num_nodes")?;
        let nr: usize = doc.scalar("num_levels")?;
        let inst = Instance {
            num_areas: ni,
            num_nodes: nj,
            num_levels: nr,
            delay_penalty: doc.scalar("delay_penalty")?,
            budget: doc.scalar("budget")?,
            uncertainty_budget_diu: doc.scalar("uncertainty_budget_diu")?,
            uncertainty_budget_ddu: doc.scalar("uncertainty_budget_ddu")?,
            demand: doc.array("demand", &[ni])?,
            capacity: doc.array("capacity", &[nj])?,
            unmet_penalty: doc.array("unmet_penalty", &[ni])?,
            unmet_fraction_cap: doc.array("unmet_fraction_cap", &[ni])?,
            delay_cap: doc.array("delay_cap", &[ni])?,
            harden_cost: doc.array("harden_cost", &[ni, nj, nr])?,
            harden_impact: doc.array("harden_impact", &[ni, nj, nr])?,
            workload_impact: doc.array("workload_impact", &[ni, nj])?,
            delay_min: doc.array("delay_min", &[ni, nj])?,
            delay_dev: doc.array("delay_dev", &[ni, nj])?,
        };
        Ok((inst, doc.leftover_warnings()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Loads an instance, logging a warning for every unknown field.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (inst, warnings) = Self::load_with_warnings(path)?;
        for w in warnings {
            log::warn!("{w}");
        }
        Ok(inst)
    }

    pub fn load_with_warnings(path: impl AsRef<Path>) -> Result<(Self, Vec<String>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }
}

/// One failed instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<Vec<usize>>,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, index: Option<Vec<usize>>, message: impl Into<String>) -> Self {
        Self {
            field,
            index,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            Some(idx) => write!(f, "{}{:?}: {}", self.field, idx, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Synthetic instance generator settings. Defaults reproduce the reference
/// simulation setting (10 areas, 10 nodes, 3 levels).
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub num_areas: usize,
    pub num_nodes: usize,
    pub num_levels: usize,
    pub demand_range: (u32, u32),
    pub penalty_range: (f64, f64),
    pub base_harden_cost_range: (f64, f64),
    /// Cost increment between adjacent levels.
    pub delta_h: f64,
    /// Impact of the first level.
    pub gamma_level1: f64,
    /// Impact increment between adjacent levels.
    pub delta_gamma: f64,
    pub workload_impact: f64,
    /// Scaling factor applied to every hardening cost.
    pub psi: f64,
    pub capacity_pool: Vec<u32>,
    pub delay_min_range: (f64, f64),
    pub delay_dev_range: (f64, f64),
    pub delay_penalty: f64,
    pub unmet_fraction_cap: f64,
    pub delay_cap: f64,
    pub budget: f64,
    pub uncertainty_budget_diu: f64,
    pub uncertainty_budget_ddu: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            num_areas: 10,
            num_nodes: 10,
            num_levels: 3,
            demand_range: (40, 60),
            penalty_range: (40.0, 50.0),
            base_harden_cost_range: (1.0, 1.05),
            delta_h: 0.2,
            gamma_level1: 0.1,
            delta_gamma: 0.4,
            workload_impact: 0.1,
            psi: 1.0,
            capacity_pool: vec![40, 60, 80, 100],
            delay_min_range: (1.0, 2.0),
            delay_dev_range: (6.0, 12.0),
            delay_penalty: 0.1,
            unmet_fraction_cap: 0.05,
            delay_cap: 15.0,
            budget: 100.0,
            uncertainty_budget_diu: 15.0,
            uncertainty_budget_ddu: 15.0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_areas == 0 || self.num_nodes == 0 || self.num_levels == 0 {
            return bad("areas, nodes and levels must all be positive".into());
        }
        if self.demand_range.0 > self.demand_range.1 {
            return bad(format!("empty demand range {:?}", self.demand_range));
        }
        for (name, (lo, hi)) in [
            ("penalty_range", self.penalty_range),
            ("base_harden_cost_range", self.base_harden_cost_range),
            ("delay_min_range", self.delay_min_range),
            ("delay_dev_range", self.delay_dev_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("empty {name} [{lo}, {hi}]"));
            }
            if lo < 0.0 {
                return bad(format!("{name} must be nonnegative"));
            }
        }
        if self.capacity_pool.is_empty() {
            return bad("capacity_pool is empty".into());
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return bad(format!("psi must be positive, got {}", self.psi));
        }
        if self.num_levels > 1 && !(self.delta_h > 0.0) {
            return bad(format!(
                "delta_h must be positive with several levels, got {}",
                self.delta_h
            ));
        }
        if self.num_levels > 1 && !(self.delta_gamma > 0.0) {
            return bad(format!(
                "delta_gamma must be positive with several levels, got {}",
                self.delta_gamma
            ));
        }
        if !(self.gamma_level1 >= 0.0) {
            return bad(format!("gamma_level1 must be nonnegative, got {}", self.gamma_level1));
        }
        let top = self.gamma_level1 + (self.num_levels - 1) as f64 * self.delta_gamma;
        if !(top < 1.0) {
            return bad(format!(
                "top-level impact {top} = gamma_level1 + (R-1)*delta_gamma must stay below 1"
            ));
        }
        if !(0.0..=1.0).contains(&self.unmet_fraction_cap) {
            return bad(format!(
                "unmet_fraction_cap must lie in [0, 1], got {}",
                self.unmet_fraction_cap
            ));
        }
        for (name, v) in [
            ("workload_impact", self.workload_impact),
            ("delay_penalty", self.delay_penalty),
            ("delay_cap", self.delay_cap),
            ("budget", self.budget),
            ("uncertainty_budget_diu", self.uncertainty_budget_diu),
            ("uncertainty_budget_ddu", self.uncertainty_budget_ddu),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Draws a synthetic instance. Pure function of the config.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    let (ni, nj, nr) = (config.num_areas, config.num_nodes, config.num_levels);
    let links = ni * nj;
    let seed = config.seed;

    let mut rng = PortableRng::new(seed, Stream::Demand);
    let demand = (0..ni)
        .map(|_| rng.int_inclusive(config.demand_range.0.into(), config.demand_range.1.into()) as u32)
        .collect();

    let mut rng = PortableRng::new(seed, Stream::Capacity);
    let capacity = (0..nj)
        .map(|_| config.capacity_pool[rng.index(config.capacity_pool.len())])
        .collect();

    let mut rng = PortableRng::new(seed, Stream::UnmetPenalty);
    let unmet_penalty = (0..ni)
        .map(|_| rng.uniform(config.penalty_range.0, config.penalty_range.1))
        .collect();

    let mut rng = PortableRng::new(seed, Stream::HardenCost);
    let mut harden_cost = Vec::with_capacity(links * nr);
    let mut harden_impact = Vec::with_capacity(links * nr);
    for _ in 0..links {
        let base = rng.uniform(config.base_harden_cost_range.0, config.base_harden_cost_range.1);
        for r in 0..nr {
            harden_cost.push(config.psi * (base + r as f64 * config.delta_h));
            harden_impact.push(config.gamma_level1 + r as f64 * config.delta_gamma);
        }
    }

    let mut rng = PortableRng::new(seed, Stream::DelayMin);
    let delay_min = (0..links)
        .map(|_| rng.uniform(config.delay_min_range.0, config.delay_min_range.1))
        .collect();
    let mut rng = PortableRng::new(seed, Stream::DelayDev);
    let delay_dev = (0..links)
        .map(|_| rng.uniform(config.delay_dev_range.0, config.delay_dev_range.1))
        .collect();

    let inst = Instance {
        num_areas: ni,
        num_nodes: nj,
        num_levels: nr,
        demand,
        capacity,
        unmet_penalty,
        delay_penalty: config.delay_penalty,
        unmet_fraction_cap: vec![config.unmet_fraction_cap; ni],
        delay_cap: vec![config.delay_cap; ni],
        budget: config.budget,
        harden_cost,
        harden_impact,
        workload_impact: vec![config.workload_impact; links],
        delay_min,
        delay_dev,
        uncertainty_budget_diu: config.uncertainty_budget_diu,
        uncertainty_budget_ddu: config.uncertainty_budget_ddu,
    };
    debug_assert!(inst.validate().is_empty(), "{:?}", inst.validate());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_generate_a_valid_instance() {
        let cfg = GenConfig::default();
        let inst = generate(&cfg).unwrap();
        assert_eq!((inst.num_areas, inst.num_nodes, inst.num_levels), (10, 10, 3));
        assert!(inst.validate().is_empty());
        assert_eq!(inst.budget, 100.0);
        assert_eq!(inst.uncertainty_budget_ddu, 15.0);
        assert_eq!(inst.uncertainty_budget_diu, 15.0);
        assert!(inst.demand.iter().all(|d| (40..=60).contains(d)));
        assert!(inst.unmet_penalty.iter().all(|s| (40.0..=50.0).contains(s)));
        for link in 0..inst.num_links() {
            let h1 = inst.cost(link, 0);
            assert!((1.0..=1.05).contains(&h1));
            assert!((inst.cost(link, 1) - (h1 + 0.2)).abs() < 1e-12);
            assert!((inst.cost(link, 2) - (h1 + 0.4)).abs() < 1e-12);
            assert!((inst.impact(link, 0) - 0.1).abs() < 1e-12);
            assert!((inst.impact(link, 1) - 0.5).abs() < 1e-12);
            assert!((inst.impact(link, 2) - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_scales_costs() {
        let base = generate(&GenConfig::default()).unwrap();
        let scaled = generate(&GenConfig {
            psi: 2.0,
            ..GenConfig::default()
        })
        .unwrap();
        for (a, b) in base.harden_cost.iter().zip(&scaled.harden_cost) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn top_level_impact_at_or_above_one_is_rejected() {
        let cfg = GenConfig {
            delta_gamma: 0.5,
            num_levels: 3,
            gamma_level1: 0.1,
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let cfg = GenConfig {
            seed: 7,
            ..GenConfig::default()
        };
        let a = generate(&cfg).unwrap().to_text();
        let b = generate(&cfg).unwrap().to_text();
        assert_eq!(a, b);
        let other = generate(&GenConfig { seed: 8, ..cfg }).unwrap().to_text();
        assert_ne!(a, other);
    }

    #[test]
    fn decreasing_cost_is_reported_as_monotonicity() {
        let mut inst = generate(&GenConfig::default()).unwrap();
        let idx = inst.level_index(0, 2);
        inst.harden_cost[idx] = inst.harden_cost[idx - 1] - 0.01;
        let v = inst.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "harden_cost");
        assert_eq!(v[0].index, Some(vec![0, 0, 2]));
        assert!(v[0].message.contains("monotonicity"));
    }

    #[test]
    fn alpha_out_of_range_is_reported() {
        let mut inst = generate(&GenConfig::default()).unwrap();
        inst.unmet_fraction_cap[0] = 1.5;
        let v = inst.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "unmet_fraction_cap");
        assert_eq!(v[0].index, Some(vec![0]));
        assert!(v[0].message.contains("range"));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut inst = generate(&GenConfig::default()).unwrap();
        inst.delay_dev.pop();
        let v = inst.validate();
        assert!(v
            .iter()
            .any(|x| x.field == "delay_dev" && x.message.contains("dimension")));
    }

    #[test]
    fn save_load_round_trip() {
        let inst = generate(&GenConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.txt");
        inst.save(&path).unwrap();
        let back = Instance::load(&path).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = generate(&GenConfig::default()).unwrap().to_text();
        let cut = &text[..text.len() * 2 / 3];
        match Instance::from_text(cut, "cut") {
            Err(Error::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_accepted_with_warning() {
        let inst = generate(&GenConfig::default()).unwrap();
        let text = inst.to_text() + "site_name edge-west\n";
        let (back, warnings) = Instance::from_text(&text, "mem").unwrap();
        assert_eq!(back, inst);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("site_name"));
    }

    #[test]
    fn unmet_cap_floors() {
        let mut inst = generate(&GenConfig::default()).unwrap();
        inst.demand[0] = 60;
        inst.unmet_fraction_cap[0] = 0.05;
        assert_eq!(inst.unmet_cap(0), 3);
        inst.demand[0] = 47;
        assert_eq!(inst.unmet_cap(0), 2);
    }

    fn valid_config() -> impl Strategy<Value = GenConfig> {
        (
            any::<u64>(),
            1usize..6,
            1usize..6,
            1usize..5,
            0u32..30,
            0u32..30,
            0.0f64..0.5,
            0.01f64..0.3,
            0.1f64..3.0,
            0.0f64..1.0,
        )
            .prop_map(|(seed, ni, nj, nr, dlo, dspan, g1, dg_frac, psi, alpha)| {
                // keep the top level strictly below one
                let room = 0.99 - g1;
                let delta_gamma = if nr > 1 { room * dg_frac / (nr - 1) as f64 } else { 0.1 };
                GenConfig {
                    seed,
                    num_areas: ni,
                    num_nodes: nj,
                    num_levels: nr,
                    demand_range: (dlo, dlo + dspan),
                    gamma_level1: g1,
                    delta_gamma,
                    psi,
                    unmet_fraction_cap: alpha,
                    ..GenConfig::default()
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn generated_instances_always_validate(cfg in valid_config()) {
            let inst = generate(&cfg).unwrap();
            prop_assert!(inst.validate().is_empty(), "{:?}", inst.validate());
            prop_assert_eq!(&inst, &generate(&cfg).unwrap());
            let top = inst.impact(0, inst.num_levels - 1);
            prop_assert!(top < 1.0);
        }
    }
}
