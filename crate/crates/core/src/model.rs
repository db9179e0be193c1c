//! Problem representation, JSON ingestion and validation.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivifn::{scalar_mul, Ivifn, IvifnError, Level, Shapes, Sign};
use crate::ranking::KeyPermutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    #[serde(rename = "crisp-nonneg")]
    CrispNonneg,
    #[serde(rename = "crisp-unrestricted")]
    CrispUnrestricted,
    #[serde(rename = "ivifn-nonneg")]
    IvifnNonneg,
    #[serde(rename = "ivifn-unrestricted")]
    IvifnUnrestricted,
}

impl VarKind {
    pub fn is_ivifn(self) -> bool {
        matches!(self, VarKind::IvifnNonneg | VarKind::IvifnUnrestricted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Eq,
    Leq,
    Geq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Leq => "<=",
            Relation::Geq => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Ivifn>,
    pub relation: Relation,
    pub rhs: Ivifn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Strictness margin for lexicographic inequalities.
    pub k: f64,
    /// Big-M constant.
    pub big_k: f64,
    pub lp_tol: f64,
    /// Headroom when carrying a stage optimum into later stages.
    pub lex_slack: f64,
    pub perm: KeyPermutation,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            k: 1e-4,
            big_k: 1000.0,
            lp_tol: 1e-9,
            lex_slack: 1e-6,
            perm: KeyPermutation::default(),
        }
    }
}

/// A fully fuzzy LP, always stored as a maximisation.
///
/// `original_sense` remembers whether the input asked for `min`; in that
/// case `objective` holds the negated coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub original_sense: Sense,
    pub objective: Vec<Ivifn>,
    pub variables: Vec<VariableDecl>,
    pub constraints: Vec<Constraint>,
    pub params: SolverParams,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error: {0}")]
    SyntaxError(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("invalid number at {location}: {source}")]
    InvalidIvifn {
        location: String,
        #[source]
        source: IvifnError,
    },
    #[error("dimension mismatch at {location}: expected {expected}, found {found}")]
    DimensionMismatch {
        location: String,
        expected: usize,
        found: usize,
    },
}

/// Problems that make a parsed model unsolvable by this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    ShapeMixing,
    /// A coefficient support straddles zero while multiplying an
    /// ivifn-unrestricted variable, so the product is not piecewise linear.
    StraddlingCoefficient { location: String, variable: String },
    InvalidParams(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::ShapeMixing => write!(f, "numbers use different shape functions"),
            Diagnostic::StraddlingCoefficient { location, variable } => write!(
                f,
                "{location}: coefficient support straddles zero on unrestricted fuzzy variable {variable}"
            ),
            Diagnostic::InvalidParams(r) => write!(f, "invalid solver parameters: {r}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIvifn {
    a: f64,
    spreads: [f64; 8],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariable {
    name: String,
    kind: VarKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    coeffs: Vec<RawIvifn>,
    relation: Relation,
    rhs: RawIvifn,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    big_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lp_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lex_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perm: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    sense: Sense,
    objective: Vec<RawIvifn>,
    variables: Vec<RawVariable>,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    solver: Option<RawSolver>,
}

fn json_error(e: serde_json::Error) -> ModelError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => ModelError::SchemaError(e.to_string()),
        _ => ModelError::SyntaxError(e.to_string()),
    }
}

fn from_raw_ivifn(raw: &RawIvifn, location: &str) -> Result<Ivifn, ModelError> {
    match raw.shape.as_deref() {
        None | Some("linear") => {}
        Some(other) => {
            return Err(ModelError::SchemaError(format!(
                "{location}: unknown shape {other:?}, only \"linear\" is supported in files"
            )))
        }
    }
    Ivifn::new(raw.a, raw.spreads).map_err(|source| ModelError::InvalidIvifn {
        location: location.to_string(),
        source,
    })
}

fn to_raw_ivifn(x: &Ivifn) -> RawIvifn {
    RawIvifn {
        a: x.mean(),
        spreads: *x.spreads(),
        shape: Some("linear".to_string()),
    }
}

/// Reads a single number in the file format, e.g. `{"a":5,"spreads":[...]}`.
pub fn ivifn_from_json(text: &str) -> Result<Ivifn, ModelError> {
    let raw: RawIvifn = serde_json::from_str(text).map_err(json_error)?;
    from_raw_ivifn(&raw, "number")
}

pub fn ivifn_to_json(x: &Ivifn) -> serde_json::Value {
    serde_json::to_value(to_raw_ivifn(x)).expect("plain data serializes")
}

/// Parses and validates a model document.
pub fn parse(document: &str) -> Result<Problem, ModelError> {
    let raw: RawProblem = serde_json::from_str(document).map_err(json_error)?;
    let n = raw.variables.len();

    let mut names = HashSet::new();
    for v in &raw.variables {
        if v.name.is_empty() {
            return Err(ModelError::SchemaError("variable name must not be empty".into()));
        }
        if !names.insert(v.name.as_str()) {
            return Err(ModelError::SchemaError(format!("duplicate variable name {:?}", v.name)));
        }
    }
    if raw.objective.len() != n {
        return Err(ModelError::DimensionMismatch {
            location: "objective".into(),
            expected: n,
            found: raw.objective.len(),
        });
    }
    let mut objective = raw
        .objective
        .iter()
        .enumerate()
        .map(|(j, c)| from_raw_ivifn(c, &format!("objective[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    if raw.sense == Sense::Min {
        objective = objective.iter().map(|c| scalar_mul(-1.0, c)).collect();
    }

    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for (i, c) in raw.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(ModelError::DimensionMismatch {
                location: format!("constraints[{i}].coeffs"),
                expected: n,
                found: c.coeffs.len(),
            });
        }
        let coeffs = c
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, x)| from_raw_ivifn(x, &format!("constraints[{i}].coeffs[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let rhs = from_raw_ivifn(&c.rhs, &format!("constraints[{i}].rhs"))?;
        constraints.push(Constraint {
            coeffs,
            relation: c.relation,
            rhs,
        });
    }

    let mut params = SolverParams::default();
    if let Some(s) = raw.solver {
        if let Some(v) = s.k {
            params.k = v;
        }
        if let Some(v) = s.big_k {
            params.big_k = v;
        }
        if let Some(v) = s.lp_tol {
            params.lp_tol = v;
        }
        if let Some(v) = s.lex_slack {
            params.lex_slack = v;
        }
        if let Some(p) = s.perm {
            params.perm = p
                .parse()
                .map_err(|e: crate::ranking::PermutationError| ModelError::SchemaError(e.to_string()))?;
        }
    }

    Ok(Problem {
        original_sense: raw.sense,
        objective,
        variables: raw
            .variables
            .into_iter()
            .map(|v| VariableDecl {
                name: v.name,
                kind: v.kind,
            })
            .collect(),
        constraints,
        params,
    })
}

/// Writes a problem back in the file format, restoring a `min` objective.
pub fn serialize(p: &Problem) -> String {
    let objective = p
        .objective
        .iter()
        .map(|c| match p.original_sense {
            Sense::Max => to_raw_ivifn(c),
            Sense::Min => to_raw_ivifn(&scalar_mul(-1.0, c)),
        })
        .collect();
    let raw = RawProblem {
        sense: p.original_sense,
        objective,
        variables: p
            .variables
            .iter()
            .map(|v| RawVariable {
                name: v.name.clone(),
                kind: v.kind,
            })
            .collect(),
        constraints: p
            .constraints
            .iter()
            .map(|c| RawConstraint {
                coeffs: c.coeffs.iter().map(to_raw_ivifn).collect(),
                relation: c.relation,
                rhs: to_raw_ivifn(&c.rhs),
            })
            .collect(),
        solver: Some(RawSolver {
            k: Some(p.params.k),
            big_k: Some(p.params.big_k),
            lp_tol: Some(p.params.lp_tol),
            lex_slack: Some(p.params.lex_slack),
            perm: Some(p.params.perm.to_string()),
        }),
    };
    serde_json::to_string_pretty(&raw).expect("plain data serializes")
}

impl Problem {
    /// Shapes shared by every number in the problem, if they agree.
    pub fn common_shapes(&self) -> Option<Shapes> {
        let mut all = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.rhs))));
        let first = match all.next() {
            Some(x) => x.shapes().clone(),
            None => return Some(Shapes::linear()),
        };
        all.all(|x| *x.shapes() == first).then_some(first)
    }
}

/// Lists every reason the problem cannot be solved; empty means solvable.
pub fn validate_problem(p: &Problem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.common_shapes().is_none() {
        out.push(Diagnostic::ShapeMixing);
    }
    let sp = &p.params;
    if !(sp.k > 0.0 && sp.k.is_finite()) {
        out.push(Diagnostic::InvalidParams(format!("k must be positive, got {}", sp.k)));
    }
    if !(sp.big_k > sp.k && sp.big_k.is_finite()) {
        out.push(Diagnostic::InvalidParams(format!(
            "K must exceed k, got K = {} and k = {}",
            sp.big_k, sp.k
        )));
    }
    if !(sp.lp_tol > 0.0 && sp.lp_tol < 1e-3) {
        out.push(Diagnostic::InvalidParams(format!("lp_tol out of range: {}", sp.lp_tol)));
    }
    if !(sp.lex_slack >= 0.0 && sp.lex_slack.is_finite()) {
        out.push(Diagnostic::InvalidParams(format!("lex_slack must be non-negative, got {}", sp.lex_slack)));
    }
    let rows = std::iter::once(("objective".to_string(), &p.objective)).chain(
        p.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("constraints[{i}]"), &c.coeffs)),
    );
    for (location, coeffs) in rows {
        for (c, v) in coeffs.iter().zip(&p.variables) {
            if v.kind != VarKind::IvifnUnrestricted {
                continue;
            }
            if Level::ALL.iter().any(|&l| c.level(l).sign() == Sign::Straddle) {
                out.push(Diagnostic::StraddlingCoefficient {
                    location: location.clone(),
                    variable: v.name.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BranchStats {
    /// Branches enumerated.
    pub explored: usize,
    /// Branches with a feasible first-stage LP.
    pub feasible: usize,
    /// Branches attaining the final optimum, the reported one included.
    pub ties: usize,
}

/// Result of a solve. `objective` is the maximised objective; for a `min`
/// input it is the negation of the original objective at the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub sense: Sense,
    pub names: Vec<String>,
    pub values: Vec<Ivifn>,
    pub objective: Ivifn,
    pub stage_optima: [f64; 7],
    pub branch_stats: BranchStats,
    /// Enumeration id of the reported branch.
    pub branch: usize,
}

#[derive(Serialize, Deserialize)]
struct RawNamedValue {
    name: String,
    value: RawIvifn,
}

#[derive(Serialize, Deserialize)]
struct RawSolution {
    sense: Sense,
    variables: Vec<RawNamedValue>,
    objective: RawIvifn,
    stage_optima: [f64; 7],
    branch_stats: BranchStats,
    branch: usize,
}

impl Solution {
    /// Objective value in the sense of the input file.
    pub fn reported_objective(&self) -> Ivifn {
        match self.sense {
            Sense::Max => self.objective.clone(),
            Sense::Min => scalar_mul(-1.0, &self.objective),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = RawSolution {
            sense: self.sense,
            variables: self
                .names
                .iter()
                .zip(&self.values)
                .map(|(n, v)| RawNamedValue {
                    name: n.clone(),
                    value: to_raw_ivifn(v),
                })
                .collect(),
            objective: to_raw_ivifn(&self.objective),
            stage_optima: self.stage_optima,
            branch_stats: self.branch_stats,
            branch: self.branch,
        };
        serde_json::to_value(raw).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Solution, ModelError> {
        let raw: RawSolution = serde_json::from_value(value.clone()).map_err(json_error)?;
        let mut names = Vec::new();
        let mut values = Vec::new();
        for v in &raw.variables {
            names.push(v.name.clone());
            values.push(from_raw_ivifn(&v.value, &v.name)?);
        }
        Ok(Solution {
            sense: raw.sense,
            names,
            values,
            objective: from_raw_ivifn(&raw.objective, "objective")?,
            stage_optima: raw.stage_optima,
            branch_stats: raw.branch_stats,
            branch: raw.branch,
        })
    }
}
