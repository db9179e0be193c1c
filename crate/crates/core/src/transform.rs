//! Reduction of a fuzzy problem to crisp linear programs, one family of
//! seven staged LPs per enumeration branch.
//!
//! A branch fixes the sign of every crisp unrestricted variable, the sign
//! class of every fuzzy unrestricted variable and, for every inequality, which
//! disjunct of the lexicographic order holds. Under a branch every product
//! `c * x` is affine in the unknowns and every lexicographic inequality
//! becomes a handful of linear rows.

use std::fmt::{self, Write as _};
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::ivifn::{Ivifn, Level, Shapes, Sign, SignClass, Spread, NESTING};
use crate::model::{Constraint, Problem, Relation, SolverParams, VarKind};
use crate::ranking::{key_components, KeyPermutation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("cannot resolve the product of {variable} on the {level:?} support under this branch")]
    UnresolvedSelection { variable: String, level: Level },
}

/// `constant + sum coeffs[i] * u_i` over a fixed set of unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl AffineExpr {
    pub fn zero(n: usize) -> Self {
        AffineExpr {
            constant: 0.0,
            coeffs: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        AffineExpr {
            constant: c,
            coeffs: vec![0.0; n],
        }
    }

    pub fn unknown(n: usize, i: usize) -> Self {
        let mut e = AffineExpr::zero(n);
        e.coeffs[i] = 1.0;
        e
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;

    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.constant += rhs.constant;
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;

    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.constant -= rhs.constant;
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;

    fn mul(mut self, rhs: f64) -> AffineExpr {
        self.constant *= rhs;
        for a in self.coeffs.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;

    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

/// `coeffs . u  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearRow {
    /// Row stating `expr (relation) 0`.
    pub fn from_expr(expr: AffineExpr, relation: Relation) -> Self {
        LinearRow {
            rhs: -expr.constant,
            coeffs: expr.coeffs,
            relation,
        }
    }

    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
        match self.relation {
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
            Relation::Leq => lhs <= self.rhs + tol,
            Relation::Geq => lhs >= self.rhs - tol,
        }
    }
}

/// A fuzzy number whose mean and spreads are affine in the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct IvifnExpr {
    pub mean: AffineExpr,
    pub spreads: [AffineExpr; 8],
}

impl IvifnExpr {
    pub fn zero(n: usize) -> Self {
        IvifnExpr {
            mean: AffineExpr::zero(n),
            spreads: std::array::from_fn(|_| AffineExpr::zero(n)),
        }
    }

    pub fn constant(n: usize, x: &Ivifn) -> Self {
        IvifnExpr {
            mean: AffineExpr::constant(n, x.mean()),
            spreads: std::array::from_fn(|i| AffineExpr::constant(n, x.spreads()[i])),
        }
    }

    pub fn add(self, other: IvifnExpr) -> IvifnExpr {
        let mut spreads = self.spreads;
        for (a, b) in spreads.iter_mut().zip(other.spreads) {
            *a = std::mem::replace(a, AffineExpr::zero(0)) + b;
        }
        IvifnExpr {
            mean: self.mean + other.mean,
            spreads,
        }
    }

    /// The nine components as plain numbers at an assignment.
    pub fn eval(&self, x: &[f64]) -> (f64, [f64; 8]) {
        (self.mean.eval(x), std::array::from_fn(|i| self.spreads[i].eval(x)))
    }

    fn components(&self) -> impl Iterator<Item = &AffineExpr> {
        std::iter::once(&self.mean).chain(self.spreads.iter())
    }
}

/// Seven affine expressions, one per key criterion, in permutation order.
#[derive(Debug, Clone, PartialEq)]
pub struct LexAffine(pub [AffineExpr; 7]);

impl LexAffine {
    pub fn of(x: &IvifnExpr, shapes: &Shapes, perm: &KeyPermutation) -> LexAffine {
        LexAffine(perm.apply(&key_components(&x.mean, &x.spreads, shapes.integrals())))
    }

    pub fn eval(&self, x: &[f64]) -> [f64; 7] {
        std::array::from_fn(|i| self.0[i].eval(x))
    }
}

/// Crisp unknowns of a problem and where each variable's block starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub names: Vec<String>,
    pub slots: Vec<VarSlot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarSlot {
    pub name: String,
    pub kind: VarKind,
    pub first: usize,
}

impl VarSlot {
    pub fn mean(&self) -> usize {
        self.first
    }

    /// Unknown holding a spread; only valid for fuzzy variables.
    pub fn spread(&self, s: Spread) -> usize {
        debug_assert!(self.kind.is_ivifn());
        self.first + 1 + s.index()
    }
}

impl Layout {
    pub fn new(p: &Problem) -> Layout {
        let mut names = Vec::new();
        let mut slots = Vec::new();
        for v in &p.variables {
            let first = names.len();
            if v.kind.is_ivifn() {
                names.push(format!("{}.a", v.name));
                for s in Spread::ALL {
                    names.push(format!("{}.{}", v.name, s.short()));
                }
            } else {
                names.push(v.name.clone());
            }
            slots.push(VarSlot {
                name: v.name.clone(),
                kind: v.kind,
                first,
            });
        }
        Layout { names, slots }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// The variable as a symbolic number (spreads zero for crisp ones).
    pub fn variable(&self, j: usize) -> IvifnExpr {
        let n = self.dim();
        let slot = &self.slots[j];
        let mean = AffineExpr::unknown(n, slot.mean());
        if slot.kind.is_ivifn() {
            IvifnExpr {
                mean,
                spreads: std::array::from_fn(|i| AffineExpr::unknown(n, slot.spread(Spread::ALL[i]))),
            }
        } else {
            IvifnExpr {
                mean,
                spreads: std::array::from_fn(|_| AffineExpr::zero(n)),
            }
        }
    }

    /// Reads variable `j` out of an assignment; tiny negative spreads are
    /// clamped to zero.
    pub fn value(&self, j: usize, x: &[f64], shapes: &Shapes) -> Ivifn {
        let slot = &self.slots[j];
        let a = x[slot.mean()];
        if !slot.kind.is_ivifn() {
            return Ivifn::crisp_with_shapes(a, shapes.clone());
        }
        let mut s: [f64; 8] = std::array::from_fn(|i| x[slot.spread(Spread::ALL[i])].max(0.0));
        // restore nesting lost to rounding
        for _ in 0..2 {
            for (larger, smaller) in NESTING {
                if s[larger.index()] < s[smaller.index()] {
                    s[larger.index()] = s[smaller.index()];
                }
            }
        }
        Ivifn::with_shapes(a, s, shapes.clone()).expect("spreads repaired above")
    }
}

/// How lexicographic inequalities are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LexMode {
    /// Tie prefix as equalities plus one strict step of size `k`.
    #[default]
    Resolved,
    /// The binary big-M rows with the binaries fixed to the pattern.
    BigM,
}

/// One cell of the enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branch {
    pub id: usize,
    /// Sign class per variable. Crisp variables use class 1 for `x >= 0`
    /// and class 10 for `x <= 0`.
    pub classes: Vec<SignClass>,
    /// Chain pattern per constraint, `None` for equalities. Pattern `p` means
    /// the first `p` key differences are zero and the next one is positive.
    pub patterns: Vec<Option<u8>>,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.id)?;
        for c in &self.classes {
            write!(f, " {c}")?;
        }
        for (i, p) in self.patterns.iter().enumerate() {
            if let Some(p) = p {
                write!(f, " c{}:p{}", i + 1, p)?;
            }
        }
        Ok(())
    }
}

const NONNEG: SignClass = SignClass::ALL[0];
const NONPOS: SignClass = SignClass::ALL[9];

/// Mixed-radix enumeration of branches in declaration order: variables
/// first, then constraints, the first declared being most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpace {
    var_radix: Vec<usize>,
    kinds: Vec<VarKind>,
    inequality: Vec<bool>,
}

impl BranchSpace {
    pub fn new(p: &Problem) -> Self {
        BranchSpace {
            var_radix: p
                .variables
                .iter()
                .map(|v| match v.kind {
                    VarKind::CrispUnrestricted => 2,
                    VarKind::IvifnUnrestricted => 10,
                    _ => 1,
                })
                .collect(),
            kinds: p.variables.iter().map(|v| v.kind).collect(),
            inequality: p.constraints.iter().map(|c| c.relation != Relation::Eq).collect(),
        }
    }

    /// Number of branches, or `None` on overflow.
    pub fn count(&self) -> Option<usize> {
        let mut total: usize = 1;
        for &r in &self.var_radix {
            total = total.checked_mul(r)?;
        }
        for _ in self.inequality.iter().filter(|&&b| b) {
            total = total.checked_mul(8)?;
        }
        Some(total)
    }

    pub fn branch(&self, id: usize) -> Branch {
        let mut rest = id;
        let mut patterns = vec![None; self.inequality.len()];
        for (i, &ineq) in self.inequality.iter().enumerate().rev() {
            if ineq {
                patterns[i] = Some((rest % 8) as u8);
                rest /= 8;
            }
        }
        let mut classes = vec![NONNEG; self.var_radix.len()];
        for j in (0..self.var_radix.len()).rev() {
            let digit = rest % self.var_radix[j];
            rest /= self.var_radix[j];
            classes[j] = match self.kinds[j] {
                VarKind::CrispNonneg | VarKind::IvifnNonneg => NONNEG,
                VarKind::CrispUnrestricted => {
                    if digit == 0 {
                        NONNEG
                    } else {
                        NONPOS
                    }
                }
                VarKind::IvifnUnrestricted => SignClass::ALL[digit],
            };
        }
        Branch { id, classes, patterns }
    }
}

#[derive(Clone, Copy)]
enum End {
    Lo,
    Hi,
}

/// Endpoint pairs `(coefficient end, variable end)` attaining the minimum
/// and maximum of the interval product for the given signs.
fn selection(c: Sign, x: Sign) -> Option<((End, End), (End, End))> {
    use End::*;
    use Sign::*;
    Some(match (c, x) {
        (NonNeg, NonNeg) => ((Lo, Lo), (Hi, Hi)),
        (NonNeg, Straddle) => ((Hi, Lo), (Hi, Hi)),
        (NonNeg, NonPos) => ((Hi, Lo), (Lo, Hi)),
        (NonPos, NonNeg) => ((Lo, Hi), (Hi, Lo)),
        (NonPos, Straddle) => ((Lo, Hi), (Lo, Lo)),
        (NonPos, NonPos) => ((Hi, Hi), (Lo, Lo)),
        (Straddle, NonNeg) => ((Lo, Hi), (Hi, Hi)),
        (Straddle, NonPos) => ((Hi, Lo), (Lo, Lo)),
        (Straddle, Straddle) => return None,
    })
}

/// `coeff * x_j` with every min/max resolved by the branch class of `x_j`.
pub fn expand_term(
    coeff: &Ivifn,
    layout: &Layout,
    j: usize,
    class: SignClass,
) -> Result<IvifnExpr, TransformError> {
    let x = layout.variable(j);
    let mean = x.mean.clone() * coeff.mean();
    let mut spreads: [AffineExpr; 8] = std::array::from_fn(|_| AffineExpr::zero(layout.dim()));
    for level in Level::ALL {
        let (ls, rs) = level.spreads();
        let c = coeff.level(level);
        let xlo = x.mean.clone() - x.spreads[ls.index()].clone();
        let xhi = x.mean.clone() + x.spreads[rs.index()].clone();
        let (min, max) = selection(c.sign(), class.level_sign(level)).ok_or_else(|| {
            TransformError::UnresolvedSelection {
                variable: layout.slots[j].name.clone(),
                level,
            }
        })?;
        let product = |(ce, xe): (End, End)| {
            let cv = match ce {
                End::Lo => c.lo,
                End::Hi => c.hi,
            };
            match xe {
                End::Lo => xlo.clone() * cv,
                End::Hi => xhi.clone() * cv,
            }
        };
        spreads[ls.index()] = mean.clone() - product(min);
        spreads[rs.index()] = product(max) - mean.clone();
    }
    Ok(IvifnExpr { mean, spreads })
}

/// `sum_j coeffs[j] * x_j` under a branch.
pub fn expand_sum(coeffs: &[Ivifn], layout: &Layout, branch: &Branch) -> Result<IvifnExpr, TransformError> {
    let mut total = IvifnExpr::zero(layout.dim());
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_crisp() && c.mean() == 0.0 {
            continue;
        }
        total = total.add(expand_term(c, layout, j, branch.classes[j])?);
    }
    Ok(total)
}

/// Componentwise equality of the left side with the right side: 9 rows.
pub fn equality_rows(c: &Constraint, layout: &Layout, branch: &Branch) -> Result<Vec<LinearRow>, TransformError> {
    let lhs = expand_sum(&c.coeffs, layout, branch)?;
    let rhs = IvifnExpr::constant(layout.dim(), &c.rhs);
    Ok(lhs
        .components()
        .zip(rhs.components())
        .map(|(l, r)| LinearRow::from_expr(l.clone() - r.clone(), Relation::Eq))
        .collect())
}

/// Rows forcing the lexicographic inequality through disjunct `pattern`.
pub fn lex_rows(
    c: &Constraint,
    layout: &Layout,
    branch: &Branch,
    pattern: u8,
    shapes: &Shapes,
    params: &SolverParams,
    mode: LexMode,
) -> Result<Vec<LinearRow>, TransformError> {
    let lhs = LexAffine::of(&expand_sum(&c.coeffs, layout, branch)?, shapes, &params.perm);
    let rhs = LexAffine::of(&IvifnExpr::constant(layout.dim(), &c.rhs), shapes, &params.perm);
    let diffs: Vec<AffineExpr> = lhs
        .0
        .into_iter()
        .zip(rhs.0)
        .map(|(l, r)| match c.relation {
            Relation::Geq => l - r,
            _ => r - l,
        })
        .collect();
    let p = pattern as usize;
    let mut rows = Vec::new();
    match mode {
        LexMode::Resolved => {
            for d in diffs.iter().take(p) {
                rows.push(LinearRow::from_expr(d.clone(), Relation::Eq));
            }
            if p < 7 {
                let d = diffs[p].clone() - AffineExpr::constant(layout.dim(), params.k);
                rows.push(LinearRow::from_expr(d, Relation::Geq));
            }
        }
        LexMode::BigM => {
            let z = |i: usize| if i < p { 0.0 } else { 1.0 };
            for (j, d) in diffs.iter().enumerate() {
                let before: f64 = (0..j).map(z).sum();
                let lower = -params.big_k * before + params.k * z(j);
                let upper = params.big_k * z(j);
                let n = layout.dim();
                rows.push(LinearRow::from_expr(d.clone() - AffineExpr::constant(n, lower), Relation::Geq));
                rows.push(LinearRow::from_expr(d.clone() - AffineExpr::constant(n, upper), Relation::Leq));
            }
        }
    }
    Ok(rows)
}

/// The nine characteristic points of a variable, ascending.
fn characteristic_points(x: &IvifnExpr) -> [AffineExpr; 9] {
    let s = |sp: Spread| x.spreads[sp.index()].clone();
    let a = x.mean.clone();
    [
        a.clone() - s(Spread::NuLowerLeft),
        a.clone() - s(Spread::NuUpperLeft),
        a.clone() - s(Spread::MuUpperLeft),
        a.clone() - s(Spread::MuLowerLeft),
        a.clone(),
        a.clone() + s(Spread::MuLowerRight),
        a.clone() + s(Spread::MuUpperRight),
        a.clone() + s(Spread::NuUpperRight),
        a + s(Spread::NuLowerRight),
    ]
}

/// Spread orderings, non-negativity and sign or class rows of variable `j`.
pub fn variable_rows(layout: &Layout, j: usize, branch: &Branch) -> Vec<LinearRow> {
    let slot = &layout.slots[j];
    let x = layout.variable(j);
    let class = branch.classes[j];
    let mut rows = Vec::new();
    if !slot.kind.is_ivifn() {
        let rel = if class == NONNEG { Relation::Geq } else { Relation::Leq };
        rows.push(LinearRow::from_expr(x.mean, rel));
        return rows;
    }
    for (larger, smaller) in NESTING {
        let d = x.spreads[larger.index()].clone() - x.spreads[smaller.index()].clone();
        rows.push(LinearRow::from_expr(d, Relation::Geq));
    }
    for s in &x.spreads {
        rows.push(LinearRow::from_expr(s.clone(), Relation::Geq));
    }
    let points = characteristic_points(&x);
    match slot.kind {
        VarKind::IvifnNonneg => rows.push(LinearRow::from_expr(points[0].clone(), Relation::Geq)),
        _ => {
            let k = class.get() as usize;
            if k >= 2 {
                rows.push(LinearRow::from_expr(points[k - 2].clone(), Relation::Leq));
            }
            if k <= 9 {
                rows.push(LinearRow::from_expr(points[k - 1].clone(), Relation::Geq));
            }
        }
    }
    rows
}

/// Objective key under a branch.
pub fn objective_key(p: &Problem, layout: &Layout, branch: &Branch, shapes: &Shapes) -> Result<LexAffine, TransformError> {
    let z = expand_sum(&p.objective, layout, branch)?;
    Ok(LexAffine::of(&z, shapes, &p.params.perm))
}

/// Rows and objective key of one branch, shared by its seven stages.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProgram {
    pub branch: Branch,
    pub equality: Vec<LinearRow>,
    pub lex: Vec<LinearRow>,
    pub variable: Vec<LinearRow>,
    pub key: LexAffine,
}

impl BranchProgram {
    pub fn rows(&self) -> impl Iterator<Item = &LinearRow> {
        self.equality.iter().chain(&self.lex).chain(&self.variable)
    }
}

pub fn build_program(
    p: &Problem,
    layout: &Layout,
    shapes: &Shapes,
    branch: Branch,
    mode: LexMode,
) -> Result<BranchProgram, TransformError> {
    let mut equality = Vec::new();
    let mut lex = Vec::new();
    for (c, pattern) in p.constraints.iter().zip(&branch.patterns) {
        match pattern {
            None => equality.extend(equality_rows(c, layout, &branch)?),
            Some(pat) => lex.extend(lex_rows(c, layout, &branch, *pat, shapes, &p.params, mode)?),
        }
    }
    let variable = (0..layout.slots.len())
        .flat_map(|j| variable_rows(layout, j, &branch))
        .collect();
    let key = objective_key(p, layout, &branch, shapes)?;
    Ok(BranchProgram {
        branch,
        equality,
        lex,
        variable,
        key,
    })
}

/// Stage `t` (zero-based) of a branch: maximise key component `t` subject
/// to the branch rows and the carried optima of earlier stages.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedLp {
    pub stage: usize,
    pub objective: AffineExpr,
    pub rows: Vec<LinearRow>,
    pub carried: Vec<LinearRow>,
}

pub fn staged_lp(program: &BranchProgram, stage: usize, optima: &[f64], lex_slack: f64) -> StagedLp {
    debug_assert_eq!(optima.len(), stage);
    let carried = optima
        .iter()
        .enumerate()
        .map(|(s, &opt)| {
            let n = program.key.0[s].dim();
            LinearRow::from_expr(
                program.key.0[s].clone() - AffineExpr::constant(n, opt - lex_slack),
                Relation::Geq,
            )
        })
        .collect();
    StagedLp {
        stage,
        objective: program.key.0[stage].clone(),
        rows: program.rows().cloned().collect(),
        carried,
    }
}

fn fmt_expr_terms(out: &mut String, coeffs: &[f64], names: &[String]) {
    let mut first = true;
    for (c, name) in coeffs.iter().zip(names) {
        if *c == 0.0 {
            continue;
        }
        if first {
            let _ = write!(out, "{c}*{name}");
            first = false;
        } else if *c < 0.0 {
            let _ = write!(out, " - {}*{name}", -c);
        } else {
            let _ = write!(out, " + {c}*{name}");
        }
    }
    if first {
        out.push('0');
    }
}

pub fn format_row(row: &LinearRow, names: &[String]) -> String {
    let mut s = String::new();
    fmt_expr_terms(&mut s, &row.coeffs, names);
    let _ = write!(s, " {} {}", row.relation, row.rhs + 0.0);
    s
}

pub fn format_expr(expr: &AffineExpr, names: &[String]) -> String {
    let mut s = String::new();
    fmt_expr_terms(&mut s, &expr.coeffs, names);
    if expr.constant != 0.0 {
        if expr.constant < 0.0 {
            let _ = write!(s, " - {}", -expr.constant);
        } else {
            let _ = write!(s, " + {}", expr.constant);
        }
    }
    s
}

/// Text listing of a branch program.
pub fn dump(program: &BranchProgram, layout: &Layout, perm: &KeyPermutation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# branch {}", program.branch);
    let sections = [
        ("equality", &program.equality),
        ("lex", &program.lex),
        ("variable", &program.variable),
    ];
    for (title, rows) in sections {
        let _ = writeln!(out, "## {title}");
        for r in rows {
            let _ = writeln!(out, "{}", format_row(r, &layout.names));
        }
    }
    let _ = writeln!(out, "## objective");
    for (c, e) in perm.to_string().chars().zip(&program.key.0) {
        let _ = writeln!(out, "{c}: {}", format_expr(e, &layout.names));
    }
    out
}
