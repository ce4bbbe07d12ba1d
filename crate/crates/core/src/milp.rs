//! Solver-neutral mixed-integer linear programs and their MPS / LP exports.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Error, Result};

static NEXT_MODEL_ID: AtomicU32 = AtomicU32::new(1);

/// Handle to a variable. Only meaningful for the model that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    model: u32,
    index: u32,
}

impl VarRef {
    pub fn index(self) -> usize {
        self.index as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Integer,
            lower,
            upper,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// Nonnegative continuous variable with no upper bound.
    pub fn nonneg(name: impl Into<String>) -> Self {
        Self::continuous(name, 0.0, f64::INFINITY)
    }
}

/// Sparse affine expression `Σ c_k v_k + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarRef, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (VarRef, f64)>) -> Self {
        Self {
            terms: terms.into_iter().collect(),
            constant: 0.0,
        }
    }

    pub fn term(mut self, var: VarRef, coef: f64) -> Self {
        self.add_term(var, coef);
        self
    }

    pub fn add_term(&mut self, var: VarRef, coef: f64) {
        self.terms.push((var, coef));
    }

    pub fn add_constant(&mut self, value: f64) {
        self.constant += value;
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn terms(&self) -> &[(VarRef, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Merges duplicate variables (first-occurrence order) and drops zeros.
    pub fn normalize(&mut self) {
        let mut pos: HashMap<VarRef, usize> = HashMap::with_capacity(self.terms.len());
        let mut merged: Vec<(VarRef, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match pos.get(&v) {
                Some(&k) => merged[k].1 += c,
                None => {
                    pos.insert(v, merged.len());
                    merged.push((v, c));
                }
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.terms = merged;
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Value at a full assignment indexed by `VarRef::index`.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.index()]).sum::<f64>()
    }
}

impl From<VarRef> for LinExpr {
    fn from(v: VarRef) -> Self {
        LinExpr::new().term(v, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A row `expr (sense) rhs`; the expression carries no constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Amount by which the row is violated at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.evaluate(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelStats {
    pub rows: usize,
    pub cols: usize,
    pub binaries: usize,
    pub integers: usize,
    pub continuous: usize,
    pub nonzeros: usize,
}

/// A failed check from [`MilpModel::check_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointViolation {
    pub what: String,
    pub amount: f64,
}

/// Minimisation MILP. Variables and rows keep insertion order.
#[derive(Debug, Clone)]
pub struct MilpModel {
    id: u32,
    name: String,
    vars: Vec<Variable>,
    var_names: HashMap<String, VarRef>,
    constrs: Vec<Constraint>,
    row_names: HashSet<String>,
    objective: LinExpr,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            name: name.into(),
            vars: Vec::new(),
            var_names: HashMap::new(),
            constrs: Vec::new(),
            row_names: HashSet::new(),
            objective: LinExpr::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(&mut self, var: Variable) -> Result<VarRef> {
        if var.name.is_empty() {
            return Err(Error::Model("variable name is empty".into()));
        }
        if self.var_names.contains_key(&var.name) {
            return Err(Error::Model(format!("duplicate variable name `{}`", var.name)));
        }
        if var.lower.is_nan() || var.upper.is_nan() || var.lower > var.upper {
            return Err(Error::Model(format!(
                "variable `{}` has bounds [{}, {}]",
                var.name, var.lower, var.upper
            )));
        }
        if var.kind == VarKind::Binary && (var.lower < 0.0 || var.upper > 1.0) {
            return Err(Error::Model(format!(
                "binary variable `{}` must lie in [0, 1]",
                var.name
            )));
        }
        let r = VarRef {
            model: self.id,
            index: self.vars.len() as u32,
        };
        self.var_names.insert(var.name.clone(), r);
        self.vars.push(var);
        Ok(r)
    }

    fn check_refs(&self, expr: &LinExpr, context: &str) -> Result<()> {
        for &(v, _) in expr.terms() {
            if v.model != self.id || v.index() >= self.vars.len() {
                return Err(Error::Model(format!(
                    "{context} references a variable of another model"
                )));
            }
        }
        Ok(())
    }

    /// Appends `expr (sense) rhs`; a constant inside `expr` moves to the rhs.
    pub fn add_constr(&mut self, expr: LinExpr, sense: Sense, rhs: f64, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        self.check_refs(&expr, &format!("row `{name}`"))?;
        if !rhs.is_finite() || !expr.constant_term().is_finite() {
            return Err(Error::Model(format!("row `{name}` has a non-finite right-hand side")));
        }
        if !self.row_names.insert(name.clone()) {
            return Err(Error::Model(format!("duplicate row name `{name}`")));
        }
        let rhs = rhs - expr.constant_term();
        let mut expr = expr.normalized();
        expr.constant = 0.0;
        self.constrs.push(Constraint { name, expr, sense, rhs });
        Ok(self.constrs.len() - 1)
    }

    pub fn set_objective(&mut self, expr: LinExpr) -> Result<()> {
        self.check_refs(&expr, "objective")?;
        self.objective = expr.normalized();
        Ok(())
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, v: VarRef) -> &Variable {
        &self.vars[v.index()]
    }

    pub fn var_refs(&self) -> impl Iterator<Item = VarRef> + '_ {
        (0..self.vars.len()).map(move |i| VarRef {
            model: self.id,
            index: i as u32,
        })
    }

    pub fn find_var(&self, name: &str) -> Option<VarRef> {
        self.var_names.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constrs
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Fixes bounds of an existing variable, e.g. to pin a hardening plan.
    pub fn set_bounds(&mut self, v: VarRef, lower: f64, upper: f64) -> Result<()> {
        if v.model != self.id || v.index() >= self.vars.len() {
            return Err(Error::Model("set_bounds on a variable of another model".into()));
        }
        if lower > upper {
            return Err(Error::Model(format!("bounds [{lower}, {upper}] are empty")));
        }
        let var = &mut self.vars[v.index()];
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    pub fn stats(&self) -> ModelStats {
        let mut s = ModelStats {
            rows: self.constrs.len(),
            cols: self.vars.len(),
            ..ModelStats::default()
        };
        for v in &self.vars {
            match v.kind {
                VarKind::Binary => s.binaries += 1,
                VarKind::Integer => s.integers += 1,
                VarKind::Continuous => s.continuous += 1,
            }
        }
        s.nonzeros = self.constrs.iter().map(|c| c.expr.terms().len()).sum();
        s
    }

    /// Rows whose name starts with `prefix`.
    pub fn count_rows_with_prefix(&self, prefix: &str) -> usize {
        self.constrs.iter().filter(|c| c.name.starts_with(prefix)).count()
    }

    /// Bound, integrality and row violations above `tol * max(1, |ref|)`.
    pub fn check_point(&self, values: &[f64], tol: f64) -> Vec<PointViolation> {
        let mut out = Vec::new();
        if values.len() != self.vars.len() {
            out.push(PointViolation {
                what: format!("expected {} values, got {}", self.vars.len(), values.len()),
                amount: f64::INFINITY,
            });
            return out;
        }
        for (v, &x) in self.vars.iter().zip(values) {
            let lo_tol = tol * v.lower.abs().max(1.0);
            let hi_tol = tol * v.upper.abs().max(1.0);
            if !x.is_finite() {
                out.push(PointViolation {
                    what: format!("variable `{}` is not finite", v.name),
                    amount: f64::INFINITY,
                });
                continue;
            }
            if x < v.lower - lo_tol {
                out.push(PointViolation {
                    what: format!("lower bound of `{}`", v.name),
                    amount: v.lower - x,
                });
            }
            if x > v.upper + hi_tol {
                out.push(PointViolation {
                    what: format!("upper bound of `{}`", v.name),
                    amount: x - v.upper,
                });
            }
            if v.kind.is_integral() && (x - x.round()).abs() > tol {
                out.push(PointViolation {
                    what: format!("integrality of `{}`", v.name),
                    amount: (x - x.round()).abs(),
                });
            }
        }
        for c in &self.constrs {
            let viol = c.violation(values);
            if viol > tol * c.rhs.abs().max(1.0) {
                out.push(PointViolation {
                    what: format!("row `{}`", c.name),
                    amount: viol,
                });
            }
        }
        out
    }

    /// Fixed-field MPS. Names that do not fit the 8-character fields are
    /// replaced by `C0000012` / `R0000034` style codes listed in the map.
    pub fn write_mps(&self) -> Result<ExportedModel> {
        if self.is_empty() {
            return Err(Error::Model("cannot export an empty model".into()));
        }
        let col_names = mangle_names(self.vars.iter().map(|v| v.name.as_str()), 'C', mps_name_ok);
        let row_names = mangle_names(self.constrs.iter().map(|c| c.name.as_str()), 'R', mps_name_ok);
        let obj_name = if row_names.names.iter().any(|n| n == "OBJ") {
            "OBJROW__"
        } else {
            "OBJ"
        };

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (r, c) in self.constrs.iter().enumerate() {
            for &(v, a) in c.expr.terms() {
                cols[v.index()].push((r, a));
            }
        }
        let mut obj = vec![0.0; self.vars.len()];
        for &(v, a) in self.objective.terms() {
            obj[v.index()] += a;
        }

        let mut out = String::new();
        let _ = writeln!(out, "NAME          {}", mps_safe_title(&self.name));
        out.push_str("ROWS\n");
        let _ = writeln!(out, " N  {obj_name}");
        for (c, name) in self.constrs.iter().zip(&row_names.names) {
            let tag = match c.sense {
                Sense::Le => "L",
                Sense::Ge => "G",
                Sense::Eq => "E",
            };
            let _ = writeln!(out, " {tag}  {name}");
        }

        out.push_str("COLUMNS\n");
        let mut in_int = false;
        let mut marker = 0;
        for (k, var) in self.vars.iter().enumerate() {
            let integral = var.kind.is_integral();
            if integral != in_int {
                let kind = if integral { "INTORG" } else { "INTEND" };
                let _ = writeln!(out, "    MARKER{marker:<4}  'MARKER'                 '{kind}'");
                marker += 1;
                in_int = integral;
            }
            let name = &col_names.names[k];
            let mut wrote = false;
            if obj[k] != 0.0 {
                let _ = writeln!(out, "    {name:<8}  {obj_name:<8}  {}", fmt_num(obj[k]));
                wrote = true;
            }
            for &(r, a) in &cols[k] {
                let _ = writeln!(out, "    {name:<8}  {:<8}  {}", row_names.names[r], fmt_num(a));
                wrote = true;
            }
            if !wrote {
                let _ = writeln!(out, "    {name:<8}  {obj_name:<8}  0");
            }
        }
        if in_int {
            let _ = writeln!(out, "    MARKER{marker:<4}  'MARKER'                 'INTEND'");
        }

        out.push_str("RHS\n");
        for (c, name) in self.constrs.iter().zip(&row_names.names) {
            if c.rhs != 0.0 {
                let _ = writeln!(out, "    RHS       {name:<8}  {}", fmt_num(c.rhs));
            }
        }

        out.push_str("BOUNDS\n");
        for (var, name) in self.vars.iter().zip(&col_names.names) {
            write_mps_bounds(&mut out, var, name);
        }
        out.push_str("ENDATA\n");

        Ok(ExportedModel {
            text: out,
            columns: col_names.names,
            rows: row_names.names,
            renamed: col_names.renamed.into_iter().chain(row_names.renamed).collect(),
            objective_constant: self.objective.constant_term(),
        })
    }

    /// CPLEX LP format.
    pub fn write_lp(&self) -> Result<ExportedModel> {
        if self.is_empty() {
            return Err(Error::Model("cannot export an empty model".into()));
        }
        let cols = mangle_names(self.vars.iter().map(|v| v.name.as_str()), 'C', lp_name_ok);
        let rows = mangle_names(self.constrs.iter().map(|c| c.name.as_str()), 'R', lp_name_ok);

        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.name);
        if self.objective.constant_term() != 0.0 {
            let _ = writeln!(out, "\\ objective constant {}", fmt_num(self.objective.constant_term()));
        }
        out.push_str("Minimize\n obj:");
        write_lp_terms(&mut out, self.objective.terms(), &cols.names);
        out.push_str("\nSubject To\n");
        for (c, name) in self.constrs.iter().zip(&rows.names) {
            let _ = write!(out, " {name}:");
            write_lp_terms(&mut out, c.expr.terms(), &cols.names);
            let _ = writeln!(out, " {} {}", c.sense.symbol(), fmt_num(c.rhs));
        }
        out.push_str("Bounds\n");
        for (v, name) in self.vars.iter().zip(&cols.names) {
            if v.kind == VarKind::Binary {
                continue;
            }
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
                (true, false) => {
                    if v.lower != 0.0 {
                        let _ = writeln!(out, " {name} >= {}", fmt_num(v.lower));
                    }
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper));
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper));
                }
            }
        }
        let general: Vec<&str> = self
            .vars
            .iter()
            .zip(&cols.names)
            .filter(|(v, _)| v.kind == VarKind::Integer)
            .map(|(_, n)| n.as_str())
            .collect();
        if !general.is_empty() {
            out.push_str("General\n");
            for n in general {
                let _ = writeln!(out, " {n}");
            }
        }
        let binary: Vec<&str> = self
            .vars
            .iter()
            .zip(&cols.names)
            .filter(|(v, _)| v.kind == VarKind::Binary)
            .map(|(_, n)| n.as_str())
            .collect();
        if !binary.is_empty() {
            out.push_str("Binary\n");
            for n in binary {
                let _ = writeln!(out, " {n}");
            }
        }
        out.push_str("End\n");
        Ok(ExportedModel {
            text: out,
            columns: cols.names,
            rows: rows.names,
            renamed: cols.renamed.into_iter().chain(rows.renamed).collect(),
            objective_constant: self.objective.constant_term(),
        })
    }
}

/// Text of an exported model plus the names used in it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedModel {
    pub text: String,
    /// File-level column names in variable order.
    pub columns: Vec<String>,
    /// File-level row names in row order.
    pub rows: Vec<String>,
    /// `(file name, original name)` for every mangled name.
    pub renamed: Vec<(String, String)>,
    /// Objective offset not representable in the file.
    pub objective_constant: f64,
}

impl ExportedModel {
    /// Sidecar listing each mangled name next to the original.
    pub fn name_map(&self) -> String {
        let mut out = String::from("# file_name original_name\n");
        for (short, long) in &self.renamed {
            let _ = writeln!(out, "{short} {long}");
        }
        out
    }
}

struct Mangled {
    names: Vec<String>,
    renamed: Vec<(String, String)>,
}

fn mangle_names<'a>(names: impl Iterator<Item = &'a str>, prefix: char, ok: fn(&str) -> bool) -> Mangled {
    let mut out = Mangled {
        names: Vec::new(),
        renamed: Vec::new(),
    };
    for (idx, name) in names.enumerate() {
        if ok(name) && !looks_mangled(name) {
            out.names.push(name.to_string());
        } else {
            let code = format!("{prefix}{idx:07}");
            out.renamed.push((code.clone(), name.to_string()));
            out.names.push(code);
        }
    }
    out
}

// Original names of this shape could collide with generated codes.
fn looks_mangled(name: &str) -> bool {
    let b = name.as_bytes();
    b.len() == 8 && (b[0] == b'C' || b[0] == b'R') && b[1..].iter().all(u8::is_ascii_digit)
}

fn mps_name_ok(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 8
        && name.bytes().all(|c| c.is_ascii_graphic() && c != b'$' && c != b'\'')
        && name != "MARKER"
}

fn lp_name_ok(name: &str) -> bool {
    const EXTRA: &[u8] = b"!\"#%&()/,.;?@_`'{}|~";
    let Some(first) = name.bytes().next() else {
        return false;
    };
    name.len() <= 255
        && !first.is_ascii_digit()
        && first != b'.'
        && first != b'e'
        && first != b'E'
        && name.bytes().all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(&c))
}

fn mps_safe_title(name: &str) -> String {
    let s: String = name.chars().filter(|c| c.is_ascii_graphic()).take(32).collect();
    if s.is_empty() {
        "MODEL".into()
    } else {
        s
    }
}

fn write_mps_bounds(out: &mut String, var: &Variable, name: &str) {
    let mut line = |tag: &str, value: Option<f64>| {
        let _ = match value {
            Some(v) => writeln!(out, " {tag} BND       {name:<8}  {}", fmt_num(v)),
            None => writeln!(out, " {tag} BND       {name}"),
        };
    };
    if var.kind == VarKind::Binary && var.lower == 0.0 && var.upper == 1.0 {
        line("BV", None);
        return;
    }
    if var.lower == var.upper {
        line("FX", Some(var.lower));
        return;
    }
    if var.lower == f64::NEG_INFINITY {
        line("MI", None);
    } else if var.lower != 0.0 {
        line("LO", Some(var.lower));
    }
    if var.upper.is_finite() {
        line("UP", Some(var.upper));
    } else if var.kind.is_integral() {
        // without an explicit bound some readers treat marked columns as binary
        line("PL", None);
    }
}

fn write_lp_terms(out: &mut String, terms: &[(VarRef, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", fmt_num(c.abs()), names[v.index()]);
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_num(c.abs()), names[v.index()]);
        }
    }
}

/// Integral values exactly, everything else with 17 significant digits.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.16e}");
        // trim trailing zeros of the mantissa
        match s.split_once('e') {
            Some((mant, exp)) if mant.contains('.') => {
                let mant = mant.trim_end_matches('0').trim_end_matches('.');
                format!("{mant}e{exp}")
            }
            _ => s,
        }
    }
}
