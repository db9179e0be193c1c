//! Command-line front end.
//!
//! Exit codes: 0 optimal or success, 1 parse/validation/usage error,
//! 2 infeasible, 3 unbounded.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::ivifn::{add, mul, scalar_mul, sub, Ivifn};
use crate::model::{self, ivifn_from_json, validate_problem, Sense};
use crate::ranking::{compare, lex_key, KeyPermutation};
use crate::solver::{solve_with, SolveError, SolveOptions, StageTrace, DEFAULT_BRANCH_CAP};
use crate::transform::{build_program, dump, BranchSpace, Layout, LexMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNBOUNDED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ivif-lexopt", version, about = "Lexicographic solver for fully fuzzy linear programs")]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Resolved,
    Bigm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model file (or standard input with `-`).
    Solve {
        input: Option<PathBuf>,
        /// Print the solution as JSON.
        #[arg(long)]
        json: bool,
        /// Include the per-stage trace.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "N", default_value_t = DEFAULT_BRANCH_CAP)]
        branch_cap: usize,
        /// Strictness margin for lexicographic inequalities.
        #[arg(long = "k")]
        small_k: Option<f64>,
        /// Big-M constant.
        #[arg(long = "K")]
        big_k: Option<f64>,
        #[arg(long)]
        lex_slack: Option<f64>,
        /// Key order, e.g. SAMCDGH.
        #[arg(long)]
        perm: Option<String>,
        #[arg(long, value_enum, default_value = "resolved")]
        mode: ModeArg,
        /// Print the linear rows of one branch and exit.
        #[arg(long, value_name = "ID")]
        dump_branch: Option<usize>,
    },
    /// Compare two numbers.
    Rank {
        left: String,
        right: String,
        #[arg(long)]
        perm: Option<String>,
    },
    /// Evaluate an arithmetic script.
    Eval { input: Option<PathBuf> },
    /// Emit membership curves as CSV.
    Plot {
        number: String,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
}

/// Parses arguments and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = match Invocation::try_parse_from(args) {
        Ok(inv) => inv,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match inv.command {
        Command::Solve {
            input,
            json,
            trace,
            branch_cap,
            small_k,
            big_k,
            lex_slack,
            perm,
            mode,
            dump_branch,
        } => cmd_solve(
            SolveArgs {
                input,
                json,
                trace,
                branch_cap,
                small_k,
                big_k,
                lex_slack,
                perm,
                mode,
                dump_branch,
            },
            out,
        ),
        Command::Rank { left, right, perm } => cmd_rank(&left, &right, perm.as_deref(), out),
        Command::Eval { input } => read_input(input.as_ref()).and_then(|text| cmd_eval(&text, out)),
        Command::Plot { number, samples } => cmd_plot(&number, samples, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn read_input(path: Option<&PathBuf>) -> Result<String, String> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| format!("cannot read standard input: {e}"))?;
            Ok(s)
        }
    }
}

/// Reads a number given as `(a; 4 spreads; 4 spreads)` or as a JSON object.
pub fn parse_number(text: &str) -> Result<Ivifn, String> {
    let t = text.trim();
    if t.starts_with('{') {
        ivifn_from_json(t).map_err(|e| e.to_string())
    } else {
        t.parse::<Ivifn>().map_err(|e| e.to_string())
    }
}

/// Fixed four-decimal rounding with trailing zeros dropped.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Compact tuple form `(a;l,r,l',r';l,r,l',r')` at four decimals.
pub fn fmt_ivifn(x: &Ivifn) -> String {
    let s: Vec<String> = x.spreads().iter().map(|&v| fmt_num(v)).collect();
    format!(
        "({};{};{})",
        fmt_num(x.mean()),
        s[..4].join(","),
        s[4..].join(",")
    )
}

fn fmt_key(k: &[f64; 7]) -> String {
    let parts: Vec<String> = k.iter().map(|&v| fmt_num(v)).collect();
    format!("({})", parts.join(", "))
}

fn parse_perm(perm: Option<&str>) -> Result<Option<KeyPermutation>, String> {
    perm.map(|p| p.parse::<KeyPermutation>().map_err(|e| e.to_string()))
        .transpose()
}

struct SolveArgs {
    input: Option<PathBuf>,
    json: bool,
    trace: bool,
    branch_cap: usize,
    small_k: Option<f64>,
    big_k: Option<f64>,
    lex_slack: Option<f64>,
    perm: Option<String>,
    mode: ModeArg,
    dump_branch: Option<usize>,
}

fn cmd_solve(args: SolveArgs, out: &mut dyn Write) -> Result<i32, String> {
    let text = read_input(args.input.as_ref())?;
    let mut p = model::parse(&text).map_err(|e| e.to_string())?;
    if let Some(v) = args.small_k {
        p.params.k = v;
    }
    if let Some(v) = args.big_k {
        p.params.big_k = v;
    }
    if let Some(v) = args.lex_slack {
        p.params.lex_slack = v;
    }
    if let Some(perm) = parse_perm(args.perm.as_deref())? {
        p.params.perm = perm;
    }
    let diagnostics = validate_problem(&p);
    if !diagnostics.is_empty() {
        let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
        return Err(lines.join("\n"));
    }
    let mode = match args.mode {
        ModeArg::Resolved => LexMode::Resolved,
        ModeArg::Bigm => LexMode::BigM,
    };

    if let Some(id) = args.dump_branch {
        let space = BranchSpace::new(&p);
        let count = space.count().unwrap_or(usize::MAX);
        if id >= count {
            return Err(format!("branch {id} out of range (problem has {count})"));
        }
        let layout = Layout::new(&p);
        let shapes = p.common_shapes().expect("validated");
        let program = build_program(&p, &layout, &shapes, space.branch(id), mode).map_err(|e| e.to_string())?;
        write!(out, "{}", dump(&program, &layout, &p.params.perm)).map_err(|e| e.to_string())?;
        return Ok(EXIT_OK);
    }

    let opts = SolveOptions {
        mode,
        branch_cap: args.branch_cap,
        threads: None,
    };
    let (solution, trace) = match solve_with(&p, &opts) {
        Ok(r) => r,
        Err(e) => {
            let (status, code) = match e {
                SolveError::Infeasible => ("infeasible", EXIT_INFEASIBLE),
                SolveError::Unbounded | SolveError::UnboundedAtStage(_) => ("unbounded", EXIT_UNBOUNDED),
                other => return Err(other.to_string()),
            };
            if args.json {
                let v = json!({"status": status, "message": e.to_string()});
                writeln!(out, "{v}").map_err(|e| e.to_string())?;
            } else {
                writeln!(out, "status: {status}\n{e}").map_err(|e| e.to_string())?;
            }
            return Ok(code);
        }
    };

    if args.json {
        let mut v = solution.to_json();
        v["status"] = json!("optimal");
        if args.trace {
            v["trace"] = serde_json::to_value(&trace).expect("plain data serializes");
        }
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json")).map_err(|e| e.to_string())?;
        return Ok(EXIT_OK);
    }
    write_report(&p.params.perm, &solution, args.trace.then_some(&trace), out).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

fn write_report(
    perm: &KeyPermutation,
    s: &model::Solution,
    trace: Option<&StageTrace>,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(out, "status: optimal")?;
    writeln!(out, "stage optima:")?;
    for (c, v) in perm.to_string().chars().zip(s.stage_optima) {
        writeln!(out, "  {c} = {}", fmt_num(v))?;
    }
    writeln!(out, "variables:")?;
    for (n, v) in s.names.iter().zip(&s.values) {
        writeln!(out, "  {n} = {}", fmt_ivifn(v))?;
    }
    match s.sense {
        Sense::Max => writeln!(out, "objective: {}", fmt_ivifn(&s.objective))?,
        Sense::Min => {
            writeln!(out, "objective: {}", fmt_ivifn(&s.reported_objective()))?;
            writeln!(out, "maximised negation: {}", fmt_ivifn(&s.objective))?;
        }
    }
    writeln!(out, "objective key: {}", fmt_key(&lex_key(&s.objective, perm).0))?;
    let b = &s.branch_stats;
    writeln!(
        out,
        "branches: {} explored, {} feasible, {} tied at the optimum (reported #{})",
        b.explored, b.feasible, b.ties, s.branch
    )?;
    if let Some(trace) = trace {
        writeln!(out, "trace:")?;
        for r in &trace.stages {
            writeln!(
                out,
                "  stage {} ({}): optimum {}, branch #{}, {} feasible",
                r.stage,
                r.component,
                fmt_num(r.optimum),
                r.branch,
                r.feasible
            )?;
        }
    }
    Ok(())
}

fn cmd_rank(left: &str, right: &str, perm: Option<&str>, out: &mut dyn Write) -> Result<i32, String> {
    let x = parse_number(left)?;
    let y = parse_number(right)?;
    if x.shapes() != y.shapes() {
        return Err("numbers use different shape functions".into());
    }
    let perm = parse_perm(perm)?.unwrap_or_default();
    let verdict = match compare(&x, &y, &perm) {
        Ordering::Less => "≺",
        Ordering::Equal => "=",
        Ordering::Greater => "≻",
    };
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "order: {perm}")?;
        writeln!(out, "left:  {} key {}", fmt_ivifn(&x), fmt_key(&lex_key(&x, &perm).0))?;
        writeln!(out, "right: {} key {}", fmt_ivifn(&y), fmt_key(&lex_key(&y, &perm).0))?;
        writeln!(out, "verdict: left {verdict} right")
    };
    w(out).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

/// Runs an arithmetic script and returns the value of the last assignment.
///
/// Each non-empty line is `name = value` where `value` is a number literal,
/// another name, or one of `add(a, b)`, `sub(a, b)`, `mul(a, b)` and
/// `smul(lambda, a)`. Lines starting with `#` are comments.
pub fn eval_script(text: &str) -> Result<Ivifn, String> {
    let mut env: HashMap<String, Ivifn> = HashMap::new();
    let mut last = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| format!("line {}: {msg}", lineno + 1);
        let (name, expr) = line
            .split_once('=')
            .ok_or_else(|| at("expected `name = expression`".into()))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(at(format!("invalid name {name:?}")));
        }
        let value = eval_expr(expr.trim(), &env).map_err(at)?;
        env.insert(name.to_string(), value.clone());
        last = Some(value);
    }
    last.ok_or_else(|| "script assigns nothing".to_string())
}

fn eval_expr(expr: &str, env: &HashMap<String, Ivifn>) -> Result<Ivifn, String> {
    let lookup = |s: &str| -> Result<Ivifn, String> {
        let s = s.trim();
        if s.starts_with('(') || s.starts_with('{') {
            parse_number(s)
        } else {
            env.get(s).cloned().ok_or_else(|| format!("undefined name {s:?}"))
        }
    };
    let Some(open) = expr.find('(').filter(|&i| i > 0) else {
        return lookup(expr);
    };
    let op = expr[..open].trim();
    let inner = expr[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format!("unbalanced parentheses in {expr:?}"))?;
    let (a, b) = split_args(inner).ok_or_else(|| format!("{op} takes two arguments"))?;
    let err = |e: crate::ivifn::IvifnError| e.to_string();
    match op {
        "add" => add(&lookup(a)?, &lookup(b)?).map_err(err),
        "sub" => sub(&lookup(a)?, &lookup(b)?).map_err(err),
        "mul" => mul(&lookup(a)?, &lookup(b)?).map_err(err),
        "smul" => {
            let lambda: f64 = a.trim().parse().map_err(|_| format!("smul needs a real factor, got {a:?}"))?;
            Ok(scalar_mul(lambda, &lookup(b)?))
        }
        other => Err(format!("unknown operation {other:?}")),
    }
}

/// Splits `a, b` at the top-level comma.
fn split_args(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '{' | '[' => depth += 1,
            ')' | '}' | ']' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

fn cmd_eval(text: &str, out: &mut dyn Write) -> Result<i32, String> {
    let v = eval_script(text)?;
    writeln!(out, "{}", fmt_ivifn(&v)).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

/// CSV rows `x,mu_L,mu_U,nu_L,nu_U` across the widest support. A crisp
/// number is swept over `[a - 1, a + 1]`.
pub fn plot_rows(x: &Ivifn, samples: usize) -> Vec<[f64; 5]> {
    let support = x.supports().nu_lower;
    let (lo, hi) = if support.hi > support.lo {
        (support.lo, support.hi)
    } else {
        (x.mean() - 1.0, x.mean() + 1.0)
    };
    (0..samples)
        .map(|i| {
            let t = if i + 1 == samples {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            };
            [t, x.mu_lower(t), x.mu_upper(t), x.nu_lower(t), x.nu_upper(t)]
        })
        .collect()
}

fn cmd_plot(number: &str, samples: usize, out: &mut dyn Write) -> Result<i32, String> {
    if samples < 2 {
        return Err("at least two samples are needed".into());
    }
    let x = parse_number(number)?;
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "x,mu_L,mu_U,nu_L,nu_U")?;
        for r in plot_rows(&x, samples) {
            writeln!(out, "{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4])?;
        }
        Ok(())
    };
    w(out).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}
