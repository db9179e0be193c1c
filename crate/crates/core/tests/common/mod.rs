//! Generators and independent oracles shared by the property suites and
//! the acceptance gate.
#![allow(dead_code)]

use std::cmp::Ordering;

use ivif_lexopt::ivifn::{add, mul, scalar_mul, sub, Ivifn};
use ivif_lexopt::ranking::{compare, ivifn_equal, lex_key, tivifn_accuracy, tivifn_score, KeyPermutation};
use rand::Rng;

/// Raw parameters of a generated number: nesting increments for the left
/// and right sides (innermost first), the target sign class and a position
/// inside that class.
#[derive(Debug, Clone, Copy)]
pub struct Raw {
    pub left: [f64; 4],
    pub right: [f64; 4],
    pub class: u8,
    pub t: f64,
}

/// Offsets of the nine characteristic points from the mean.
fn offsets(left: &[f64; 4], right: &[f64; 4]) -> [f64; 9] {
    let l: Vec<f64> = left.iter().scan(0.0, |acc, d| { *acc += d; Some(*acc) }).collect();
    let r: Vec<f64> = right.iter().scan(0.0, |acc, d| { *acc += d; Some(*acc) }).collect();
    [-l[3], -l[2], -l[1], -l[0], 0.0, r[0], r[1], r[2], r[3]]
}

pub fn build(raw: &Raw) -> Ivifn {
    let o = offsets(&raw.left, &raw.right);
    let k = raw.class as usize;
    let mean = match k {
        1 => -o[0] + raw.t * 20.0,
        10 => -o[8] - raw.t * 20.0 - 1e-3,
        _ => -o[k - 1] + raw.t * (o[k - 1] - o[k - 2]),
    };
    let l = |i: usize| -o[3 - i];
    let r = |i: usize| o[5 + i];
    Ivifn::new(mean, [l(0), r(0), l(1), r(1), l(3), r(3), l(2), r(2)]).expect("generator builds valid numbers")
}

pub fn random_raw<R: Rng>(rng: &mut R) -> Raw {
    let mut inc = || if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..10.0) };
    let left = [inc(), inc(), inc(), inc()];
    let right = [inc(), inc(), inc(), inc()];
    Raw {
        left,
        right,
        class: rng.gen_range(1..=10),
        t: rng.gen_range(0.0..1.0),
    }
}

pub fn random_ivifn<R: Rng>(rng: &mut R) -> Ivifn {
    build(&random_raw(rng))
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1f64.max(a.abs()).max(b.abs())
}

pub fn close9(x: &Ivifn, m: f64, s: &[f64; 8], rel: f64) -> bool {
    let scale = s.iter().fold(m.abs(), |acc, v| acc.max(v.abs()));
    let tol = rel * scale.max(1.0);
    (x.mean() - m).abs() <= tol && x.spreads().iter().zip(s).all(|(a, b)| (a - b).abs() <= tol)
}

fn same(x: &Ivifn, y: &Ivifn, rel: f64) -> bool {
    close9(x, y.mean(), y.spreads(), rel)
}

/// Index pairs (left, right) of each level, innermost first.
const LEVELS: [(usize, usize); 4] = [(0, 1), (2, 3), (6, 7), (4, 5)];

/// For each sign class, how `x`'s level endpoints pair with `y`'s in the
/// product formulas: P non-negative, S straddling, N non-positive. Levels
/// are listed innermost first.
const PATTERNS: [&str; 10] = [
    "PPPP", "PPPS", "PPSS", "PSSS", "SSSS", "SSSS", "NSSS", "NNSS", "NNNS", "NNNN",
];

pub fn class_of(x: &Ivifn) -> u8 {
    let a = x.mean();
    let s = x.spreads();
    let pts = [a - s[4], a - s[6], a - s[2], a - s[0], a, a + s[1], a + s[3], a + s[7], a + s[5]];
    pts.iter().position(|&p| p >= 0.0).map_or(10, |i| i as u8 + 1)
}

/// The product with every endpoint pairing written out for `x`'s class.
pub fn product_oracle(x: &Ivifn, y: &Ivifn) -> (f64, [f64; 8]) {
    let (a1, a2) = (x.mean(), y.mean());
    let (s1, s2) = (x.spreads(), y.spreads());
    let pattern = PATTERNS[class_of(x) as usize - 1].as_bytes();
    let m = a1 * a2;
    let mut out = [0.0; 8];
    for (lv, &(il, ir)) in LEVELS.iter().enumerate() {
        let (xl, xr) = (a1 - s1[il], a1 + s1[ir]);
        let (yl, yr) = (a2 - s2[il], a2 + s2[ir]);
        let (lo, hi) = match pattern[lv] {
            b'P' => ((xl * yl).min(xr * yl), (xl * yr).max(xr * yr)),
            b'S' => ((xl * yr).min(xr * yl), (xl * yl).max(xr * yr)),
            _ => ((xr * yr).min(xl * yr), (xl * yl).max(xr * yl)),
        };
        out[il] = m - lo;
        out[ir] = hi - m;
    }
    (m, out)
}

/// Arithmetic laws for one operand pair and a scalar.
pub fn check_arith(x: &Ivifn, y: &Ivifn, lambda: f64) -> Result<(), String> {
    let sum = add(x, y).map_err(|e| format!("add: {e}"))?;
    let diff = sub(x, y).map_err(|e| format!("sub: {e}"))?;
    let scaled = scalar_mul(lambda, x);
    let prod = mul(x, y).map_err(|e| format!("mul: {e}"))?;
    for (name, v) in [("add", &sum), ("sub", &diff), ("smul", &scaled), ("mul", &prod)] {
        Ivifn::new(v.mean(), *v.spreads()).map_err(|e| format!("{name} result fails validation: {e}"))?;
    }
    if !same(&sum, &add(y, x).unwrap(), 1e-12) {
        return Err(format!("add not commutative for {x} and {y}"));
    }
    let prod_rev = mul(y, x).unwrap();
    if !same(&prod, &prod_rev, 1e-9) {
        return Err(format!("mul not commutative for {x} and {y}"));
    }
    let via_mul = mul(x, &Ivifn::crisp(lambda)).unwrap();
    if !same(&via_mul, &scaled, 1e-9) {
        return Err(format!("mul by crisp {lambda} differs from scalar_mul for {x}"));
    }
    let (m, s) = product_oracle(x, y);
    if !close9(&prod, m, &s, 1e-9) {
        return Err(format!(
            "mul differs from the class {} formulas for {x} times {y}: {prod}",
            class_of(x)
        ));
    }
    check_hull(x, y, &prod)
}

/// Every level of the product is exactly the set of products of points.
fn check_hull(x: &Ivifn, y: &Ivifn, prod: &Ivifn) -> Result<(), String> {
    let (sx, sy, sp) = (x.supports(), y.supports(), prod.supports());
    for (ix, iy, ip) in [
        (sx.mu_lower, sy.mu_lower, sp.mu_lower),
        (sx.mu_upper, sy.mu_upper, sp.mu_upper),
        (sx.nu_upper, sy.nu_upper, sp.nu_upper),
        (sx.nu_lower, sy.nu_lower, sp.nu_lower),
    ] {
        let corners = [ix.lo * iy.lo, ix.lo * iy.hi, ix.hi * iy.lo, ix.hi * iy.hi];
        let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !close(ip.lo, lo, 1e-9) || !close(ip.hi, hi, 1e-9) {
            return Err(format!("product level {ip:?} is not the hull [{lo}, {hi}]"));
        }
        for i in 0..=4 {
            for j in 0..=4 {
                let u = ix.lo + (ix.hi - ix.lo) * i as f64 / 4.0;
                let v = iy.lo + (iy.hi - iy.lo) * j as f64 / 4.0;
                let tol = 1e-9 * 1f64.max(lo.abs()).max(hi.abs());
                if u * v < ip.lo - tol || u * v > ip.hi + tol {
                    return Err(format!("{u} * {v} escapes {ip:?}"));
                }
            }
        }
    }
    Ok(())
}

/// Cuts stay within the supports and shrink as the level rises.
pub fn check_cuts(x: &Ivifn, alpha: f64, beta: f64) -> Result<(), String> {
    let sup = x.supports();
    let c = x.cuts(alpha, beta).map_err(|e| e.to_string())?;
    let tol = 1e-9 * 1f64.max(x.mean().abs()).max(x.spreads().iter().cloned().fold(0.0, f64::max));
    let inside = |inner: ivif_lexopt::ivifn::Interval, outer: ivif_lexopt::ivifn::Interval| {
        inner.lo >= outer.lo - tol && inner.hi <= outer.hi + tol
    };
    if !(inside(c.mu_lower, sup.mu_lower)
        && inside(c.mu_upper, sup.mu_upper)
        && inside(c.nu_lower, sup.nu_lower)
        && inside(c.nu_upper, sup.nu_upper))
    {
        return Err(format!("cuts of {x} at ({alpha}, {beta}) leave the supports"));
    }
    let higher = x.cuts((alpha + (1.0 - beta - alpha) / 2.0).max(alpha), beta).unwrap();
    if !(inside(higher.mu_lower, c.mu_lower) && inside(higher.mu_upper, c.mu_upper)) {
        return Err(format!("membership cuts of {x} grow with alpha"));
    }
    Ok(())
}

/// Order laws for a triple plus linearity of the key functions.
pub fn check_order(x: &Ivifn, y: &Ivifn, z: &Ivifn, l1: f64, l2: f64) -> Result<(), String> {
    let perm = KeyPermutation::default();
    let cmp = |a: &Ivifn, b: &Ivifn| compare(a, b, &perm);
    if cmp(x, x) != Ordering::Equal {
        return Err(format!("{x} not equal to itself"));
    }
    if cmp(x, y) != cmp(y, x).reverse() {
        return Err(format!("comparison of {x} and {y} is not antisymmetric in sign"));
    }
    if cmp(x, y) == Ordering::Equal && !ivifn_equal(x, y) {
        return Err(format!("keys of {x} and {y} tie but the numbers differ"));
    }
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y), (x, z, y)] {
        if cmp(a, b) != Ordering::Greater && cmp(b, c) != Ordering::Greater && cmp(a, c) == Ordering::Greater {
            return Err(format!("transitivity fails for {a}, {b}, {c}"));
        }
    }
    for v in [x, y, z] {
        let k = lex_key(v, &perm).0;
        if !(k[2] >= k[3] && k[3] >= k[4] && k[4] >= k[5] && k[5] >= k[6]) {
            return Err(format!("key of {v} is not monotone: {k:?}"));
        }
    }
    // linearity: S and A for any real weights, all seven for non-negative ones
    let combo = add(&scalar_mul(l1, x), &scalar_mul(l2, y)).unwrap();
    let (kc, kx, ky) = (lex_key(&combo, &perm).0, lex_key(x, &perm).0, lex_key(y, &perm).0);
    let upto = if l1 >= 0.0 && l2 >= 0.0 { 7 } else { 2 };
    for i in 0..upto {
        let expect = l1 * kx[i] + l2 * ky[i];
        if !close(kc[i], expect, 1e-9) {
            return Err(format!("component {i} not linear: {} vs {expect}", kc[i]));
        }
    }
    Ok(())
}

pub fn random_tivifn<R: Rng>(rng: &mut R) -> [f64; 9] {
    let mut p: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-100.0..100.0));
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Score and accuracy by integrating the cut endpoints directly.
pub fn integral_indices(
    x: &Ivifn,
    inv: [&dyn Fn(f64) -> f64; 4],
    panels: usize,
) -> (f64, f64) {
    let a = x.mean();
    let s = x.spreads();
    let [li, ri, lui, rui] = inv;
    let mu = simpson(|al| a - s[0] * li(al) + a + s[1] * ri(al) + a - s[2] * lui(al) + a + s[3] * rui(al), panels);
    let nu = simpson(
        |be| {
            let g = 1.0 - be;
            a - s[4] * li(g) + a + s[5] * ri(g) + a - s[6] * lui(g) + a + s[7] * rui(g)
        },
        panels,
    );
    ((mu - nu) / 4.0, (mu + nu) / 4.0)
}

pub fn check_tivifn(p: [f64; 9]) -> Result<(), String> {
    let x = Ivifn::from_tivifn(p).map_err(|e| e.to_string())?;
    let lin = |al: f64| 1.0 - al;
    let (s_int, a_int) = integral_indices(&x, [&lin, &lin, &lin, &lin], 64);
    let (s_cf, a_cf) = (tivifn_score(p), tivifn_accuracy(p));
    let k = lex_key(&x, &KeyPermutation::default()).0;
    for (name, got, want) in [("S closed", s_cf, s_int), ("A closed", a_cf, a_int), ("S key", k[0], s_int), ("A key", k[1], a_int)] {
        if (got - want).abs() > 1e-8 {
            return Err(format!("{name} {got} vs integral {want} for {p:?}"));
        }
    }
    Ok(())
}

// ---- random two-variable programs ----

use ivif_lexopt::model::{Constraint, Problem, Relation, Sense, Solution, SolverParams, VarKind, VariableDecl};
use ivif_lexopt::solver::{check_candidate, solve_with, CandidateVerdict, SolveError, SolveOptions};
use ivif_lexopt::transform::LexMode;

/// A small coefficient: spreads below 3, mean within roughly 10 of zero.
pub fn small_ivifn<R: Rng>(rng: &mut R) -> Ivifn {
    let mut inc = || if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.75) };
    let raw = Raw {
        left: [inc(), inc(), inc(), inc()],
        right: [inc(), inc(), inc(), inc()],
        class: rng.gen_range(1..=10),
        t: rng.gen_range(0.0..0.25),
    };
    build(&raw)
}

/// Two crisp unrestricted variables and two fuzzy inequalities.
pub fn random_program<R: Rng>(rng: &mut R) -> Problem {
    let constraint = |rng: &mut R| Constraint {
        coeffs: vec![small_ivifn(rng), small_ivifn(rng)],
        relation: if rng.gen_bool(0.5) { Relation::Leq } else { Relation::Geq },
        rhs: small_ivifn(rng),
    };
    Problem {
        original_sense: Sense::Max,
        objective: vec![small_ivifn(rng), small_ivifn(rng)],
        variables: vec![
            VariableDecl { name: "x1".into(), kind: VarKind::CrispUnrestricted },
            VariableDecl { name: "x2".into(), kind: VarKind::CrispUnrestricted },
        ],
        constraints: vec![constraint(rng), constraint(rng)],
        params: SolverParams::default(),
    }
}

pub fn solve_in(p: &Problem, mode: LexMode) -> Result<Solution, SolveError> {
    let opts = SolveOptions { mode, ..SolveOptions::default() };
    solve_with(p, &opts).map(|(s, _)| s)
}

/// Outcome of one equivalence case: `Ok(true)` when both modes reach the
/// same optima, `Ok(false)` when both report the same failure.
pub fn modes_agree(p: &Problem) -> Result<bool, String> {
    match (solve_in(p, LexMode::Resolved), solve_in(p, LexMode::BigM)) {
        (Ok(a), Ok(b)) => {
            for (t, (x, y)) in a.stage_optima.iter().zip(b.stage_optima).enumerate() {
                if (x - y).abs() > 1e-6 {
                    return Err(format!("stage {} optima differ: resolved {x}, big-M {y}", t + 1));
                }
            }
            Ok(true)
        }
        (Err(a), Err(b)) if a == b => Ok(false),
        (a, b) => Err(format!("resolved gives {:?}, big-M gives {:?}", a.map(|s| s.stage_optima), b.map(|s| s.stage_optima))),
    }
}

/// Scans `[-r, r]^2` at step `h` for a feasible point whose objective key
/// beats the solution's.
pub fn grid_violator(p: &Problem, s: &Solution, r: f64, h: f64) -> Option<(f64, f64)> {
    let n = (2.0 * r / h).round() as i64;
    for i in 0..=n {
        for j in 0..=n {
            let (x1, x2) = (-r + i as f64 * h, -r + j as f64 * h);
            let values = [Ivifn::crisp(x1), Ivifn::crisp(x2)];
            if check_candidate(p, s, &values, 1e-9) == Ok(CandidateVerdict::Dominates) {
                return Some((x1, x2));
            }
        }
    }
    None
}
