//! Linearization and dualization building blocks.
//!
//! * [`binary_expand`]: bounded integer as a sum of weighted bits.
//! * [`mccormick_bin_cont`], [`product_bin_int`]: exact products with a binary.
//! * [`linearize_square`]: `x²` as `Σ 2^k (y_k · x)`, tightened by
//!   [`square_secant_cuts`]; [`square_envelope`] keeps only the cuts.
//! * [`dualize_bigm`], [`dualize_enhanced`]: robust counterparts of
//!   `ζᵀu ≤ b  ∀ ζ ∈ {ζ | Aζ ≤ v + ψz}` with binary `z`.

use crate::error::{Error, Result};
use crate::milp::{LinExpr, MilpModel, Sense, VarKind, VarRef, Variable};

/// Bits `y_k` with `x = Σ_k 2^k y_k` (k from 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryExpansion {
    pub source: VarRef,
    pub bits: Vec<VarRef>,
    pub link_row: usize,
}

impl BinaryExpansion {
    pub fn num_bits(&self) -> usize {
        self.bits.len()
    }
}

/// Number of bits needed for integers in `0..=bound`.
pub fn bit_count(bound: u64) -> usize {
    (64 - bound.leading_zeros()) as usize
}

pub fn binary_expand(model: &mut MilpModel, x: VarRef, bound: u64, name: &str) -> Result<BinaryExpansion> {
    if bound == 0 {
        return Err(Error::InvalidArgument(format!(
            "binary expansion of `{name}` needs a positive bound"
        )));
    }
    if model.variable(x).kind != VarKind::Integer {
        return Err(Error::InvalidArgument(format!(
            "binary expansion needs an integer variable, `{}` is {:?}",
            model.variable(x).name,
            model.variable(x).kind
        )));
    }
    let q = bit_count(bound);
    let mut bits = Vec::with_capacity(q);
    let mut link = LinExpr::new().term(x, -1.0);
    for k in 0..q {
        let y = model.add_var(Variable::binary(format!("{name}_b{k}")))?;
        link.add_term(y, (1u64 << k) as f64);
        bits.push(y);
    }
    let link_row = model.add_constr(link, Sense::Eq, 0.0, format!("{name}_link"))?;
    Ok(BinaryExpansion {
        source: x,
        bits,
        link_row,
    })
}

/// `T = t·ξ` for binary `t` and `0 ≤ ξ ≤ M`.
pub fn mccormick_bin_cont(model: &mut MilpModel, t: VarRef, xi: VarRef, big_m: f64, name: &str) -> Result<VarRef> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "big-M for `{name}` must be positive, got {big_m}"
        )));
    }
    let prod = model.add_var(Variable::nonneg(name))?;
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(t, -big_m),
        Sense::Le,
        0.0,
        format!("{name}_mt"),
    )?;
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(xi, -1.0),
        Sense::Le,
        0.0,
        format!("{name}_ub"),
    )?;
    // T >= ξ - M(1 - t)
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(xi, -1.0).term(t, -big_m),
        Sense::Ge,
        -big_m,
        format!("{name}_lb"),
    )?;
    Ok(prod)
}

/// `Y = y·x` for binary `y` and integer `0 ≤ x ≤ L`.
pub fn product_bin_int(model: &mut MilpModel, y: VarRef, x: VarRef, bound: u64, name: &str) -> Result<VarRef> {
    if bound == 0 {
        return Err(Error::InvalidArgument(format!(
            "product `{name}` needs a positive bound"
        )));
    }
    let l = bound as f64;
    let prod = model.add_var(Variable::continuous(name, 0.0, l))?;
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(y, -l),
        Sense::Le,
        0.0,
        format!("{name}_ly"),
    )?;
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(x, -1.0),
        Sense::Le,
        0.0,
        format!("{name}_ux"),
    )?;
    model.add_constr(
        LinExpr::new().term(prod, 1.0).term(x, -1.0).term(y, -l),
        Sense::Ge,
        -l,
        format!("{name}_lx"),
    )?;
    Ok(prod)
}

/// Products `Y_k = y_k·x` of a [`binary_expand`] result together with the
/// expression `Σ 2^k Y_k`, which equals `x²` at integral points.
#[derive(Debug, Clone)]
pub struct SquareTerms {
    pub products: Vec<VarRef>,
    pub expr: LinExpr,
}

pub fn linearize_square(
    model: &mut MilpModel,
    x: VarRef,
    expansion: &BinaryExpansion,
    bound: u64,
    name: &str,
) -> Result<SquareTerms> {
    if expansion.source != x {
        return Err(Error::InvalidArgument(format!(
            "expansion was built for `{}`, not `{}`",
            model.variable(expansion.source).name,
            model.variable(x).name
        )));
    }
    if bit_count(bound) != expansion.num_bits() {
        return Err(Error::InvalidArgument(format!(
            "bound {bound} needs {} bits, expansion has {}",
            bit_count(bound),
            expansion.num_bits()
        )));
    }
    let mut products = Vec::with_capacity(expansion.num_bits());
    let mut expr = LinExpr::new();
    for (k, &y) in expansion.bits.iter().enumerate() {
        let prod = product_bin_int(model, y, x, bound, &format!("{name}_{k}"))?;
        expr.add_term(prod, (1u64 << k) as f64);
        products.push(prod);
    }
    Ok(SquareTerms { products, expr })
}

/// Valid inequalities `S ≥ (2k+1)x - k(k+1)` for `k = 0..bound`, where `S`
/// is a linearized `x²`. At integral `x` they hold with `S = x²`; over the
/// LP relaxation they force `S` onto the piecewise-linear envelope of `x²`.
pub fn square_secant_cuts(
    model: &mut MilpModel,
    x: VarRef,
    square: &LinExpr,
    bound: u64,
    name: &str,
) -> Result<Vec<usize>> {
    let mut rows = Vec::with_capacity(bound as usize);
    for k in 0..bound {
        let kf = k as f64;
        let mut e = square.clone();
        e.add_term(x, -(2.0 * kf + 1.0));
        rows.push(model.add_constr(e, Sense::Ge, -kf * (kf + 1.0), format!("{name}_sec{k}"))?);
    }
    Ok(rows)
}

/// `S ≥ x²` for integer `0 ≤ x ≤ bound` through [`square_secant_cuts`] alone.
/// Exact wherever `S` is only pushed down (minimized, or on the small side of
/// `≤` rows), since the cuts meet `x²` at every integer.
pub fn square_envelope(model: &mut MilpModel, x: VarRef, bound: u64, name: &str) -> Result<VarRef> {
    if model.variable(x).kind == VarKind::Continuous {
        return Err(Error::InvalidArgument(format!(
            "square envelope needs an integer variable, `{}` is continuous",
            model.variable(x).name
        )));
    }
    let b = bound as f64;
    let s = model.add_var(Variable::continuous(name, 0.0, b * b))?;
    square_secant_cuts(model, x, &LinExpr::from(s), bound, name)?;
    Ok(s)
}

/// Sparse matrix as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    /// Keeps only the nonzero entries of a dense row-major matrix.
    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let entries = dense
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self { rows, cols, entries }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }
}

/// Robust constraint `uᵀζ ≤ b  ∀ ζ ∈ U(z) = {ζ | Aζ ≤ v + ψz}`.
///
/// `ζ` is free; `b` may depend on other model variables. The dual
/// multipliers `π` must stay below `big_m` for the big-M rows to be exact.
#[derive(Debug, Clone)]
pub struct DduConstraintSpec {
    pub a: SparseMatrix,
    pub v: Vec<f64>,
    pub psi: SparseMatrix,
    pub z: Vec<VarRef>,
    pub u: Vec<f64>,
    pub b: LinExpr,
    pub big_m: f64,
}

impl DduConstraintSpec {
    fn check(&self, model: &MilpModel) -> Result<()> {
        let m = self.a.rows;
        let bad = |msg: String| Err(Error::InvalidArgument(format!("dimension mismatch: {msg}")));
        if self.v.len() != m {
            return bad(format!("A has {m} rows, v has {}", self.v.len()));
        }
        if self.u.len() != self.a.cols {
            return bad(format!("A has {} columns, u has {}", self.a.cols, self.u.len()));
        }
        if self.psi.rows != m || self.psi.cols != self.z.len() {
            return bad(format!(
                "psi is {}x{}, expected {m}x{}",
                self.psi.rows,
                self.psi.cols,
                self.z.len()
            ));
        }
        if self
            .a
            .entries
            .iter()
            .any(|&(i, j, _)| i >= self.a.rows || j >= self.a.cols)
            || self
                .psi
                .entries
                .iter()
                .any(|&(i, j, _)| i >= self.psi.rows || j >= self.psi.cols)
        {
            return bad("matrix entry outside its declared shape".into());
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "big-M must be positive, got {}",
                self.big_m
            )));
        }
        for &z in &self.z {
            if model.variable(z).kind != VarKind::Binary {
                return Err(Error::InvalidArgument(format!(
                    "`{}` must be binary to act as a decision in the uncertainty set",
                    model.variable(z).name
                )));
            }
        }
        Ok(())
    }
}

/// Variables and rows emitted by a dualization.
#[derive(Debug, Clone, Default)]
pub struct DualizedRows {
    pub pi: Vec<VarRef>,
    /// `(i, j, y_ij)` products of `π_i` and `z_j`.
    pub y: Vec<(usize, usize, VarRef)>,
    /// `(i, j, w_ij)` products of `π_i` and `1 - z_j`.
    pub w: Vec<(usize, usize, VarRef)>,
    pub rows: Vec<usize>,
}

fn emit_duals(model: &mut MilpModel, spec: &DduConstraintSpec, name: &str, out: &mut DualizedRows) -> Result<()> {
    for i in 0..spec.a.rows {
        out.pi.push(model.add_var(Variable::nonneg(format!("{name}_pi{i}")))?);
    }
    let mut cols: Vec<LinExpr> = vec![LinExpr::new(); spec.a.cols];
    for &(i, j, a) in &spec.a.entries {
        cols[j].add_term(out.pi[i], a);
    }
    for (j, col) in cols.into_iter().enumerate() {
        out.rows
            .push(model.add_constr(col, Sense::Eq, spec.u[j], format!("{name}_dual{j}"))?);
    }
    Ok(())
}

/// Big-M counterpart: `πᵀA = uᵀ`, `π ≥ 0`, `Σπv + Σψy ≤ b` with
/// `y_ij = π_i z_j` enforced by three rows per stored entry of `ψ`.
pub fn dualize_bigm(model: &mut MilpModel, spec: &DduConstraintSpec, name: &str) -> Result<DualizedRows> {
    spec.check(model)?;
    let mut out = DualizedRows::default();
    emit_duals(model, spec, name, &mut out)?;
    let m = spec.big_m;

    let mut main = LinExpr::new();
    for (i, &v) in spec.v.iter().enumerate() {
        main.add_term(out.pi[i], v);
    }
    for &(i, j, psi) in &spec.psi.entries {
        let pi = out.pi[i];
        let z = spec.z[j];
        let y = model.add_var(Variable::nonneg(format!("{name}_y{i}_{j}")))?;
        let tag = format!("{name}_y{i}_{j}");
        out.rows.push(model.add_constr(
            LinExpr::new().term(y, 1.0).term(pi, -1.0),
            Sense::Le,
            0.0,
            format!("{tag}_pi"),
        )?);
        out.rows.push(model.add_constr(
            LinExpr::new().term(y, 1.0).term(z, -m),
            Sense::Le,
            0.0,
            format!("{tag}_mz"),
        )?);
        out.rows.push(model.add_constr(
            LinExpr::new().term(y, 1.0).term(pi, -1.0).term(z, -m),
            Sense::Ge,
            -m,
            format!("{tag}_lb"),
        )?);
        main.add_term(y, psi);
        out.y.push((i, j, y));
    }
    main.add_scaled(&spec.b, -1.0);
    out.rows
        .push(model.add_constr(main, Sense::Le, 0.0, format!("{name}_main"))?);
    Ok(out)
}

/// Sign-split counterpart: `y_ij ≥ π_i - M(1 - z_j)` where `ψ_ij ≥ 0`,
/// `w_ij ≥ π_i - M z_j` where `ψ_ij < 0`, one row each.
pub fn dualize_enhanced(model: &mut MilpModel, spec: &DduConstraintSpec, name: &str) -> Result<DualizedRows> {
    spec.check(model)?;
    let mut out = DualizedRows::default();
    emit_duals(model, spec, name, &mut out)?;
    let m = spec.big_m;

    let mut shifted = spec.v.clone();
    for &(i, _, psi) in &spec.psi.entries {
        if psi < 0.0 {
            shifted[i] += psi;
        }
    }
    let mut main = LinExpr::new();
    for (i, &v) in shifted.iter().enumerate() {
        main.add_term(out.pi[i], v);
    }
    for &(i, j, psi) in &spec.psi.entries {
        let pi = out.pi[i];
        let z = spec.z[j];
        if psi >= 0.0 {
            let y = model.add_var(Variable::nonneg(format!("{name}_y{i}_{j}")))?;
            out.rows.push(model.add_constr(
                LinExpr::new().term(y, 1.0).term(pi, -1.0).term(z, -m),
                Sense::Ge,
                -m,
                format!("{name}_y{i}_{j}_lb"),
            )?);
            main.add_term(y, psi);
            out.y.push((i, j, y));
        } else {
            let w = model.add_var(Variable::nonneg(format!("{name}_w{i}_{j}")))?;
            out.rows.push(model.add_constr(
                LinExpr::new().term(w, 1.0).term(pi, -1.0).term(z, m),
                Sense::Ge,
                0.0,
                format!("{name}_w{i}_{j}_lb"),
            )?);
            main.add_term(w, -psi);
            out.w.push((i, j, w));
        }
    }
    main.add_scaled(&spec.b, -1.0);
    out.rows
        .push(model.add_constr(main, Sense::Le, 0.0, format!("{name}_main"))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Feasible interval of `var` once every other variable is fixed.
    fn interval(model: &MilpModel, var: VarRef, values: &[f64]) -> (f64, f64) {
        let v = model.variable(var);
        let (mut lo, mut hi) = (v.lower, v.upper);
        for c in model.constraints() {
            let Some(&(_, a)) = c.expr.terms().iter().find(|(r, _)| *r == var) else {
                continue;
            };
            let rest: f64 = c
                .expr
                .terms()
                .iter()
                .filter(|(r, _)| *r != var)
                .map(|&(r, k)| k * values[r.index()])
                .sum();
            let bound = (c.rhs - rest) / a;
            match (c.sense, a > 0.0) {
                (Sense::Le, true) | (Sense::Ge, false) => hi = hi.min(bound),
                (Sense::Ge, true) | (Sense::Le, false) => lo = lo.max(bound),
                (Sense::Eq, _) => {
                    lo = lo.max(bound);
                    hi = hi.min(bound);
                }
            }
        }
        (lo, hi)
    }

    fn int_model(bound: f64) -> (MilpModel, VarRef) {
        let mut m = MilpModel::new("lin");
        let x = m.add_var(Variable::integer("x", 0.0, bound)).unwrap();
        (m, x)
    }

    #[test]
    fn bit_counts() {
        assert_eq!(bit_count(40), 6);
        assert_eq!(bit_count(7), 3);
        assert_eq!(bit_count(1), 1);
        assert_eq!(bit_count(8), 4);
    }

    #[test]
    fn expansion_of_forty_has_six_bits() {
        let (mut m, x) = int_model(40.0);
        let e = binary_expand(&mut m, x, 40, "x").unwrap();
        assert_eq!(e.num_bits(), 6);
        assert_eq!(m.num_rows(), 1);
    }

    #[test]
    fn expansion_of_five_under_seven() {
        let (mut m, x) = int_model(7.0);
        let e = binary_expand(&mut m, x, 7, "x").unwrap();
        let mut vals = vec![0.0; m.num_vars()];
        vals[x.index()] = 5.0;
        for (k, bit) in [1.0, 0.0, 1.0].into_iter().enumerate() {
            vals[e.bits[k].index()] = bit;
        }
        assert!(m.check_point(&vals, 1e-9).is_empty());
    }

    #[test]
    fn expansion_of_one_is_a_single_bit() {
        let (mut m, x) = int_model(1.0);
        let e = binary_expand(&mut m, x, 1, "x").unwrap();
        assert_eq!(e.num_bits(), 1);
        for v in [0.0, 1.0] {
            let mut vals = vec![0.0; m.num_vars()];
            vals[x.index()] = v;
            vals[e.bits[0].index()] = v;
            assert!(m.check_point(&vals, 1e-9).is_empty());
        }
    }

    #[test]
    fn expansion_rejects_bad_input() {
        let (mut m, x) = int_model(4.0);
        assert!(binary_expand(&mut m, x, 0, "x").is_err());
        let c = m.add_var(Variable::nonneg("c")).unwrap();
        assert!(binary_expand(&mut m, c, 4, "c").is_err());
    }

    #[test]
    fn mccormick_pins_product() {
        let mut m = MilpModel::new("mc");
        let t = m.add_var(Variable::binary("t")).unwrap();
        let xi = m.add_var(Variable::continuous("xi", 0.0, 100.0)).unwrap();
        let prod = mccormick_bin_cont(&mut m, t, xi, 100.0, "T").unwrap();
        let mut vals = vec![0.0; m.num_vars()];
        vals[t.index()] = 1.0;
        vals[xi.index()] = 3.7;
        let (lo, hi) = interval(&m, prod, &vals);
        assert!((lo - 3.7).abs() < 1e-12 && (hi - 3.7).abs() < 1e-12);
        vals[t.index()] = 0.0;
        assert_eq!(interval(&m, prod, &vals), (0.0, 0.0));
        assert!(mccormick_bin_cont(&mut m, t, xi, 0.0, "T2").is_err());
    }

    #[test]
    fn mccormick_contains_product_on_grid() {
        let big_m = 10.0;
        let mut m = MilpModel::new("mc");
        let t = m.add_var(Variable::binary("t")).unwrap();
        let xi = m.add_var(Variable::continuous("xi", 0.0, big_m)).unwrap();
        let prod = mccormick_bin_cont(&mut m, t, xi, big_m, "T").unwrap();
        for tv in [0.0, 1.0] {
            for xv in [0.0, big_m / 2.0, big_m] {
                let mut vals = vec![0.0; m.num_vars()];
                vals[t.index()] = tv;
                vals[xi.index()] = xv;
                let (lo, hi) = interval(&m, prod, &vals);
                assert!(lo <= tv * xv && tv * xv <= hi);
                assert_eq!(lo, hi, "t={tv} xi={xv}");
            }
        }
    }

    #[test]
    fn product_bin_int_is_exact() {
        let (mut m, x) = int_model(7.0);
        let y = m.add_var(Variable::binary("y")).unwrap();
        let prod = product_bin_int(&mut m, y, x, 7, "Y").unwrap();
        for yv in [0.0, 1.0] {
            for xv in 0..=7 {
                let mut vals = vec![0.0; m.num_vars()];
                vals[y.index()] = yv;
                vals[x.index()] = xv as f64;
                let (lo, hi) = interval(&m, prod, &vals);
                assert_eq!((lo, hi), (yv * xv as f64, yv * xv as f64), "y={yv} x={xv}");
            }
        }
        assert!(product_bin_int(&mut m, y, x, 0, "Z").is_err());
    }

    fn check_square(bound: u64) {
        let (mut m, x) = int_model(bound as f64);
        let e = binary_expand(&mut m, x, bound, "x").unwrap();
        let sq = linearize_square(&mut m, x, &e, bound, "sq").unwrap();
        for xv in 0..=bound {
            let mut vals = vec![0.0; m.num_vars()];
            vals[x.index()] = xv as f64;
            for (k, &b) in e.bits.iter().enumerate() {
                vals[b.index()] = ((xv >> k) & 1) as f64;
            }
            for &p in &sq.products {
                let (lo, hi) = interval(&m, p, &vals);
                assert_eq!(lo, hi);
                vals[p.index()] = lo;
            }
            assert!(m.check_point(&vals, 0.0).is_empty());
            assert_eq!(sq.expr.evaluate(&vals), (xv * xv) as f64, "x={xv}");
        }
    }

    #[test]
    fn square_of_five_is_twenty_five() {
        let (mut m, x) = int_model(7.0);
        let e = binary_expand(&mut m, x, 7, "x").unwrap();
        let sq = linearize_square(&mut m, x, &e, 7, "sq").unwrap();
        let mut vals = vec![0.0; m.num_vars()];
        vals[x.index()] = 5.0;
        vals[e.bits[0].index()] = 1.0;
        vals[e.bits[2].index()] = 1.0;
        vals[sq.products[0].index()] = 5.0;
        vals[sq.products[2].index()] = 5.0;
        assert!(m.check_point(&vals, 0.0).is_empty());
        assert_eq!(sq.expr.evaluate(&vals), 25.0);
    }

    #[test]
    fn square_is_exact_up_to_fifteen() {
        check_square(15);
        check_square(7);
        check_square(1);
    }

    #[test]
    fn square_rejects_foreign_expansion() {
        let (mut m, x) = int_model(7.0);
        let other = m.add_var(Variable::integer("o", 0.0, 7.0)).unwrap();
        let e = binary_expand(&mut m, other, 7, "o").unwrap();
        assert!(linearize_square(&mut m, x, &e, 7, "sq").is_err());
    }

    fn one_d_spec(m: &mut MilpModel, b: f64) -> DduConstraintSpec {
        let z = m.add_var(Variable::binary("z")).unwrap();
        DduConstraintSpec {
            a: SparseMatrix::from_dense(&[vec![1.0], vec![-1.0]]),
            v: vec![1.0, 0.0],
            psi: SparseMatrix::from_dense(&[vec![0.5], vec![0.0]]),
            z: vec![z],
            u: vec![1.0],
            b: LinExpr::constant(b),
            big_m: 100.0,
        }
    }

    #[test]
    fn enhanced_uses_fewer_rows() {
        let mut a = MilpModel::new("a");
        let spec = one_d_spec(&mut a, 2.0);
        let mut b = a.clone();
        let before = a.num_rows();
        dualize_bigm(&mut a, &spec, "d").unwrap();
        dualize_enhanced(&mut b, &spec, "d").unwrap();
        assert!(b.num_rows() - before < a.num_rows() - before);
    }

    #[test]
    fn enhanced_two_by_two_row_counts() {
        let mut m = MilpModel::new("m");
        let z0 = m.add_var(Variable::binary("z0")).unwrap();
        let z1 = m.add_var(Variable::binary("z1")).unwrap();
        let spec = DduConstraintSpec {
            a: SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            v: vec![1.0, 1.0],
            psi: SparseMatrix::from_dense(&[vec![0.5, 0.25], vec![1.0, 2.0]]),
            z: vec![z0, z1],
            u: vec![1.0, 1.0],
            b: LinExpr::constant(3.0),
            big_m: 50.0,
        };
        let mut big = m.clone();
        let r1 = dualize_bigm(&mut big, &spec, "d").unwrap();
        let r2 = dualize_enhanced(&mut m, &spec, "d").unwrap();
        // 2 dual rows + 1 main row, then 3 vs 1 rows per psi entry
        assert_eq!(r1.rows.len(), 3 + 3 * 4);
        assert_eq!(r2.rows.len(), 3 + 4);
        assert!(r2.w.is_empty());
    }

    #[test]
    fn negative_psi_emits_one_w() {
        let mut m = MilpModel::new("m");
        let z0 = m.add_var(Variable::binary("z0")).unwrap();
        let z1 = m.add_var(Variable::binary("z1")).unwrap();
        let spec = DduConstraintSpec {
            a: SparseMatrix::from_dense(&[vec![1.0], vec![-1.0]]),
            v: vec![2.0, 0.0],
            psi: SparseMatrix::from_dense(&[vec![-0.5, 0.3], vec![0.0, 0.0]]),
            z: vec![z0, z1],
            u: vec![1.0],
            b: LinExpr::constant(3.0),
            big_m: 50.0,
        };
        let r = dualize_enhanced(&mut m, &spec, "d").unwrap();
        assert_eq!(r.w.len(), 1);
        assert_eq!(r.y.len(), 1);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut m = MilpModel::new("m");
        let mut spec = one_d_spec(&mut m, 2.0);
        spec.v.pop();
        assert!(dualize_bigm(&mut m, &spec, "d").is_err());
        assert!(dualize_enhanced(&mut m, &spec, "e").is_err());
    }

    #[test]
    fn zero_psi_needs_no_products() {
        let mut m = MilpModel::new("m");
        let mut spec = one_d_spec(&mut m, 2.0);
        spec.psi = SparseMatrix::new(2, 1);
        let r = dualize_bigm(&mut m, &spec, "d").unwrap();
        assert!(r.y.is_empty());
        assert_eq!(r.rows.len(), 2);
    }
}
