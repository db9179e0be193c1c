//! Branch enumeration, the seven-stage lexicographic sequence and solution
//! reconstruction.

use std::cmp::Ordering;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivifn::{add, mul, Ivifn, IvifnError, Shapes};
use crate::lp::{solve_lp, LpError, LpInstance, LpOutcome, LpStatus};
use crate::model::{validate_problem, BranchStats, Diagnostic, Problem, Relation, Solution};
use crate::ranking::{compare_values, lex_key};
use crate::transform::{
    build_program, staged_lp, AffineExpr, Branch, BranchProgram, BranchSpace, Layout, LexMode, TransformError,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "IVIF_LEXOPT_THREADS";

pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("problem is not solvable: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded in the first key component")]
    Unbounded,
    #[error("stage {0} is unbounded after bounded earlier stages")]
    UnboundedAtStage(usize),
    #[error("{count} branches exceed the cap of {cap}")]
    BranchBudgetExceeded { count: String, cap: usize },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("stage {0} lost every branch; carried optima are inconsistent")]
    Inconsistent(usize),
    #[error(transparent)]
    Number(#[from] IvifnError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub mode: LexMode,
    pub branch_cap: usize,
    /// Worker threads; `None` reads [`THREADS_ENV`] and otherwise uses all cores.
    pub threads: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: LexMode::Resolved,
            branch_cap: DEFAULT_BRANCH_CAP,
            threads: None,
        }
    }
}

/// Outcome of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// One-based stage index.
    pub stage: usize,
    /// Key criterion maximised at this stage.
    pub component: char,
    pub optimum: f64,
    /// Smallest branch id attaining the optimum.
    pub branch: usize,
    /// Branches with a feasible LP at this stage.
    pub feasible: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTrace {
    pub stages: Vec<StageRecord>,
}

/// All branches of the problem in id order.
pub fn enumerate_branches(p: &Problem, cap: usize) -> Result<impl Iterator<Item = Branch>, SolveError> {
    let space = BranchSpace::new(p);
    let count = branch_count(&space, cap)?;
    Ok((0..count).map(move |id| space.branch(id)))
}

fn branch_count(space: &BranchSpace, cap: usize) -> Result<usize, SolveError> {
    match space.count() {
        Some(c) if c <= cap => Ok(c),
        Some(c) => Err(SolveError::BranchBudgetExceeded {
            count: c.to_string(),
            cap,
        }),
        None => Err(SolveError::BranchBudgetExceeded {
            count: "more than usize::MAX".into(),
            cap,
        }),
    }
}

/// Stage `t` (zero-based) over the `alive` branches. Returns the optimum
/// and the outcome of every branch in `alive` order.
pub fn solve_stage(
    programs: &[BranchProgram],
    alive: &[usize],
    t: usize,
    optima: &[f64],
    lex_slack: f64,
    lp_tol: f64,
) -> Result<(Option<f64>, Vec<(usize, LpOutcome)>), SolveError> {
    let outcomes = alive
        .par_iter()
        .map(|&id| {
            let stage = staged_lp(&programs[id], t, optima, lex_slack);
            solve_lp(&LpInstance::from_stage(&stage), lp_tol).map(|o| (id, o))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if outcomes.iter().any(|(_, o)| o.status == LpStatus::Unbounded) {
        return Err(if t == 0 {
            SolveError::Unbounded
        } else {
            SolveError::UnboundedAtStage(t + 1)
        });
    }
    let optimum = outcomes
        .iter()
        .filter(|(_, o)| o.status == LpStatus::Optimal)
        .map(|(_, o)| o.value)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok((optimum, outcomes))
}

pub fn solve(p: &Problem) -> Result<Solution, SolveError> {
    solve_with(p, &SolveOptions::default()).map(|(s, _)| s)
}

pub fn solve_with(p: &Problem, opts: &SolveOptions) -> Result<(Solution, StageTrace), SolveError> {
    let threads = opts.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    });
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| solve_inner(p, opts))
        }
        None => solve_inner(p, opts),
    }
}

fn solve_inner(p: &Problem, opts: &SolveOptions) -> Result<(Solution, StageTrace), SolveError> {
    let diagnostics = validate_problem(p);
    if !diagnostics.is_empty() {
        return Err(SolveError::Invalid(diagnostics));
    }
    let shapes = p.common_shapes().expect("validated");
    let layout = Layout::new(p);
    let space = BranchSpace::new(p);
    let count = branch_count(&space, opts.branch_cap)?;
    let programs = (0..count)
        .into_par_iter()
        .map(|id| build_program(p, &layout, &shapes, space.branch(id), opts.mode))
        .collect::<Result<Vec<_>, _>>()?;

    let params = &p.params;
    let letters: Vec<char> = params.perm.to_string().chars().collect();
    let mut alive: Vec<usize> = (0..count).collect();
    let mut optima = Vec::with_capacity(7);
    let mut trace = StageTrace::default();
    let mut stats = BranchStats {
        explored: count,
        ..BranchStats::default()
    };
    let mut survivors = Vec::new();
    for t in 0..7 {
        let (optimum, outcomes) = solve_stage(&programs, &alive, t, &optima, params.lex_slack, params.lp_tol)?;
        let feasible = outcomes.iter().filter(|(_, o)| o.status == LpStatus::Optimal).count();
        if t == 0 {
            stats.feasible = feasible;
        }
        let Some(opt) = optimum else {
            return Err(if t == 0 {
                SolveError::Infeasible
            } else {
                SolveError::Inconsistent(t + 1)
            });
        };
        // a branch below opt - slack cannot satisfy the next carried row
        survivors = outcomes
            .into_iter()
            .filter(|(_, o)| o.status == LpStatus::Optimal && o.value >= opt - params.lex_slack)
            .collect::<Vec<_>>();
        trace.stages.push(StageRecord {
            stage: t + 1,
            component: letters[t],
            optimum: opt,
            branch: survivors[0].0,
            feasible,
        });
        optima.push(opt);
        alive = survivors.iter().map(|(id, _)| *id).collect();
    }

    stats.ties = survivors.len();
    let (branch, outcome) = &survivors[0];
    let values: Vec<Ivifn> = (0..p.variables.len())
        .map(|j| layout.value(j, &outcome.assignment, &shapes))
        .collect();
    let objective = objective_value(p, &values, &shapes)?;
    let solution = Solution {
        sense: p.original_sense,
        names: p.variables.iter().map(|v| v.name.clone()).collect(),
        values,
        objective,
        stage_optima: optima.try_into().expect("seven stages"),
        branch_stats: stats,
        branch: *branch,
    };
    Ok((solution, trace))
}

/// `sum_j c_j * x_j` with the problem's (maximised) objective.
pub fn objective_value(p: &Problem, values: &[Ivifn], shapes: &Shapes) -> Result<Ivifn, IvifnError> {
    weighted_sum(&p.objective, values, shapes)
}

fn weighted_sum(coeffs: &[Ivifn], values: &[Ivifn], shapes: &Shapes) -> Result<Ivifn, IvifnError> {
    let mut total = Ivifn::crisp_with_shapes(0.0, shapes.clone());
    for (c, x) in coeffs.iter().zip(values) {
        total = add(&total, &mul(c, x)?)?;
    }
    Ok(total)
}

/// True when the key differences `d` (right minus left side of a `<=`)
/// admit a lexicographic disjunct: a tie prefix within `tol` followed by
/// either nothing or a step of at least `k - tol`.
pub fn lex_disjunct_holds(d: &[f64; 7], k: f64, tol: f64) -> bool {
    match d.iter().find(|v| v.abs() > tol) {
        None => true,
        Some(&v) => v >= k - tol,
    }
}

/// Feasibility of fuzzy values in the original sense: equalities
/// componentwise, inequalities through the lexicographic order with the
/// strictness margin `k`.
pub fn fuzzy_feasible(p: &Problem, values: &[Ivifn], tol: f64) -> Result<bool, IvifnError> {
    let shapes = p.common_shapes().unwrap_or_default();
    for (j, v) in p.variables.iter().enumerate() {
        let x = &values[j];
        if !v.kind.is_ivifn() && !x.is_crisp() {
            return Ok(false);
        }
        let nonneg = matches!(
            v.kind,
            crate::model::VarKind::CrispNonneg | crate::model::VarKind::IvifnNonneg
        );
        if nonneg && x.characteristic_points()[0] < -tol {
            return Ok(false);
        }
    }
    for c in &p.constraints {
        let lhs = weighted_sum(&c.coeffs, values, &shapes)?;
        let ok = match c.relation {
            Relation::Eq => lhs.approx_eq(&c.rhs, tol * (1.0 + c.rhs.mean().abs())),
            Relation::Leq | Relation::Geq => {
                let l = lex_key(&lhs, &p.params.perm).0;
                let r = lex_key(&c.rhs, &p.params.perm).0;
                let d: [f64; 7] = std::array::from_fn(|s| match c.relation {
                    Relation::Geq => l[s] - r[s],
                    _ => r[s] - l[s],
                });
                lex_disjunct_holds(&d, p.params.k, tol)
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateVerdict {
    Infeasible,
    NotBetter,
    Dominates,
}

/// Checks one candidate assignment against a reported solution.
pub fn check_candidate(p: &Problem, s: &Solution, values: &[Ivifn], tol: f64) -> Result<CandidateVerdict, IvifnError> {
    if !fuzzy_feasible(p, values, tol)? {
        return Ok(CandidateVerdict::Infeasible);
    }
    let shapes = p.common_shapes().unwrap_or_default();
    let z = objective_value(p, values, &shapes)?;
    let a = lex_key(&z, &p.params.perm).0;
    let b = lex_key(&s.objective, &p.params.perm).0;
    Ok(match compare_values(&a, &b, 10.0 * p.params.lex_slack) {
        Ordering::Greater => CandidateVerdict::Dominates,
        _ => CandidateVerdict::NotBetter,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertifyReport {
    pub drawn: usize,
    pub feasible: usize,
    /// Feasible candidates whose objective beats the solution's.
    pub violators: Vec<Vec<Ivifn>>,
}

/// Samples random vertices of feasible branches, plus random points on
/// segments from the solution towards vertices of its own branch, and
/// checks that no feasible sample beats the solution.
pub fn certify(p: &Problem, s: &Solution, samples: usize, seed: u64) -> Result<CertifyReport, SolveError> {
    let shapes = p.common_shapes().unwrap_or_default();
    let layout = Layout::new(p);
    let space = BranchSpace::new(p);
    let count = branch_count(&space, DEFAULT_BRANCH_CAP)?;
    let n = layout.dim();
    let bounded = |objective: AffineExpr, program: &BranchProgram| {
        let mut inst = LpInstance::new(objective, program.rows().cloned().collect());
        // keep random directions away from unbounded rays
        inst.lower = vec![-1e6; n];
        inst.upper = vec![1e6; n];
        solve_lp(&inst, p.params.lp_tol)
    };
    let programs = (0..count)
        .into_par_iter()
        .map(|id| build_program(p, &layout, &shapes, space.branch(id), LexMode::Resolved))
        .collect::<Result<Vec<_>, _>>()?;
    let feasible_ids: Vec<usize> = programs
        .par_iter()
        .map(|prog| bounded(AffineExpr::zero(n), prog).map(|o| (prog.branch.id, o.status)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|(_, st)| *st == LpStatus::Optimal)
        .map(|(id, _)| id)
        .collect();

    let mut rng = StdRng::seed_from_u64(seed);
    let tol = 1e-7;
    let mut report = CertifyReport::default();
    let base = solution_assignment(&layout, s);
    for i in 0..samples {
        report.drawn += 1;
        let along_segment = i % 2 == 1 || feasible_ids.is_empty();
        let id = if along_segment {
            s.branch
        } else {
            feasible_ids[rng.gen_range(0..feasible_ids.len())]
        };
        let direction = AffineExpr {
            constant: 0.0,
            coeffs: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let out = bounded(direction, &programs[id])?;
        if out.status != LpStatus::Optimal {
            continue;
        }
        let x: Vec<f64> = if along_segment {
            let lambda: f64 = rng.gen_range(0.0..1.0);
            base.iter()
                .zip(&out.assignment)
                .map(|(b, v)| b + lambda * (v - b))
                .collect()
        } else {
            out.assignment
        };
        let values: Vec<Ivifn> = (0..p.variables.len()).map(|j| layout.value(j, &x, &shapes)).collect();
        match check_candidate(p, s, &values, tol)? {
            CandidateVerdict::Infeasible => {}
            CandidateVerdict::NotBetter => report.feasible += 1,
            CandidateVerdict::Dominates => {
                report.feasible += 1;
                report.violators.push(values);
            }
        }
    }
    Ok(report)
}

fn solution_assignment(layout: &Layout, s: &Solution) -> Vec<f64> {
    let mut x = vec![0.0; layout.dim()];
    for (slot, v) in layout.slots.iter().zip(&s.values) {
        x[slot.mean()] = v.mean();
        if slot.kind.is_ivifn() {
            for sp in crate::ivifn::Spread::ALL {
                x[slot.spread(sp)] = v.spread(sp);
            }
        }
    }
    x
}
