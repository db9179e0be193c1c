//! Dense two-phase primal simplex.
//!
//! Rows with a single nonzero become variable bounds before the tableau is
//! built. Pricing is Dantzig's rule, switching to Bland's rule after a run
//! of degenerate pivots. The final basic solution is recomputed from the
//! original rows to shed accumulated pivoting error.

use thiserror::Error;

use crate::model::Relation;
use crate::transform::{AffineExpr, LinearRow, StagedLp};

/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
/// Tiny pivots tolerated before giving up.
const TINY_PIVOT_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("malformed instance: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Maximise `objective` subject to `rows` and per-unknown bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    pub objective: AffineExpr,
    pub rows: Vec<LinearRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpInstance {
    /// All unknowns free.
    pub fn new(objective: AffineExpr, rows: Vec<LinearRow>) -> Self {
        let n = objective.dim();
        LpInstance {
            objective,
            rows,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn from_stage(stage: &StagedLp) -> Self {
        let mut rows = stage.rows.clone();
        rows.extend(stage.carried.iter().cloned());
        LpInstance::new(stage.objective.clone(), rows)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Optimal value; NaN unless optimal.
    pub value: f64,
    /// Optimal point; empty unless optimal.
    pub assignment: Vec<f64>,
}

impl LpOutcome {
    fn without_point(status: LpStatus) -> Self {
        LpOutcome {
            status,
            value: f64::NAN,
            assignment: Vec::new(),
        }
    }
}

/// How an original unknown is rebuilt from tableau columns.
#[derive(Debug, Clone, Copy)]
enum Mapping {
    /// `x = offset + y`
    Shift { col: usize, offset: f64 },
    /// `x = offset - y`
    Mirror { col: usize, offset: f64 },
    /// `x = y+ - y-`
    Split { pos: usize, neg: usize },
}

pub fn solve_lp(inst: &LpInstance, lp_tol: f64) -> Result<LpOutcome, LpError> {
    let n = inst.dim();
    if inst.lower.len() != n || inst.upper.len() != n {
        return Err(LpError::Malformed("bound vectors do not match the objective".into()));
    }
    for r in &inst.rows {
        if r.coeffs.len() != n {
            return Err(LpError::Malformed("row length does not match the objective".into()));
        }
        if !r.rhs.is_finite() || r.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite row data".into()));
        }
    }

    let scale = inst
        .rows
        .iter()
        .map(|r| r.rhs.abs())
        .fold(1.0_f64, f64::max);
    let feas_tol = 100.0 * lp_tol * scale.sqrt();

    // singleton rows become bounds
    let mut lower = inst.lower.clone();
    let mut upper = inst.upper.clone();
    let mut general = Vec::new();
    for r in &inst.rows {
        let nz: Vec<usize> = (0..n).filter(|&i| r.coeffs[i] != 0.0).collect();
        match nz.as_slice() {
            [] => {
                if !r.satisfied(&vec![0.0; n], feas_tol) {
                    return Ok(LpOutcome::without_point(LpStatus::Infeasible));
                }
            }
            [i] => {
                let a = r.coeffs[*i];
                let v = r.rhs / a;
                let rel = match (r.relation, a > 0.0) {
                    (Relation::Eq, _) => Relation::Eq,
                    (rel, true) => rel,
                    (Relation::Leq, false) => Relation::Geq,
                    (Relation::Geq, false) => Relation::Leq,
                };
                if rel != Relation::Leq {
                    lower[*i] = lower[*i].max(v);
                }
                if rel != Relation::Geq {
                    upper[*i] = upper[*i].min(v);
                }
            }
            _ => general.push(r),
        }
    }
    for i in 0..n {
        if lower[i] > upper[i] + feas_tol {
            return Ok(LpOutcome::without_point(LpStatus::Infeasible));
        }
        if lower[i] > upper[i] {
            upper[i] = lower[i];
        }
    }

    // columns for the original unknowns
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        if lower[i].is_finite() {
            maps.push(Mapping::Shift {
                col: ncols,
                offset: lower[i],
            });
            if upper[i].is_finite() {
                bound_rows.push((ncols, upper[i] - lower[i]));
            }
            ncols += 1;
        } else if upper[i].is_finite() {
            maps.push(Mapping::Mirror {
                col: ncols,
                offset: upper[i],
            });
            ncols += 1;
        } else {
            maps.push(Mapping::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }
    let nstruct = ncols;

    // rows over the structural columns
    let mut srows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for r in &general {
        let mut a = vec![0.0; nstruct];
        let mut b = r.rhs;
        for (i, &c) in r.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match maps[i] {
                Mapping::Shift { col, offset } => {
                    a[col] += c;
                    b -= c * offset;
                }
                Mapping::Mirror { col, offset } => {
                    a[col] -= c;
                    b -= c * offset;
                }
                Mapping::Split { pos, neg } => {
                    a[pos] += c;
                    a[neg] -= c;
                }
            }
        }
        srows.push((a, r.relation, b));
    }
    for &(col, width) in &bound_rows {
        let mut a = vec![0.0; nstruct];
        a[col] = 1.0;
        srows.push((a, Relation::Leq, width));
    }
    for row in srows.iter_mut() {
        if row.2 < 0.0 {
            for v in row.0.iter_mut() {
                *v = -*v;
            }
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Leq => Relation::Geq,
                Relation::Geq => Relation::Leq,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let mut cost = vec![0.0; nstruct];
    for (i, &c) in inst.objective.coeffs.iter().enumerate() {
        match maps[i] {
            Mapping::Shift { col, .. } => cost[col] += c,
            Mapping::Mirror { col, .. } => cost[col] -= c,
            Mapping::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let y = match Tableau::solve(&srows, &cost, lp_tol, feas_tol)? {
        Ok(y) => y,
        Err(status) => return Ok(LpOutcome::without_point(status)),
    };

    let assignment: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Mapping::Shift { col, offset } => offset + y[col],
            Mapping::Mirror { col, offset } => offset - y[col],
            Mapping::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        value: inst.objective.eval(&assignment),
        assignment,
    })
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x (ncols + 1)`, last entry of each row is the rhs.
    a: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Original index of each remaining row.
    row_ids: Vec<usize>,
    allowed: Vec<bool>,
    piv_tol: f64,
    cost_tol: f64,
    tiny_pivots: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    /// Maximises `cost . y` over `rows`, `y >= 0`, every rhs non-negative.
    fn solve(
        rows: &[(Vec<f64>, Relation, f64)],
        cost: &[f64],
        lp_tol: f64,
        feas_tol: f64,
    ) -> Result<Result<Vec<f64>, LpStatus>, LpError> {
        let m = rows.len();
        let nstruct = cost.len();
        let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let nart = rows.iter().filter(|r| r.1 != Relation::Leq).count();
        let ncols = nstruct + nslack + nart;
        let width = ncols + 1;
        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut s = nstruct;
        let mut art = nstruct + nslack;
        for (i, (coeffs, rel, b)) in rows.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            row[..nstruct].copy_from_slice(coeffs);
            row[ncols] = *b;
            match rel {
                Relation::Leq => {
                    row[s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Geq => {
                    row[s] = -1.0;
                    s += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        let original = a.clone();
        let cmax = cost.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let mut t = Tableau {
            m,
            width,
            a,
            obj: vec![0.0; width],
            basis,
            row_ids: (0..m).collect(),
            allowed: vec![true; ncols],
            piv_tol: lp_tol,
            cost_tol: lp_tol,
            tiny_pivots: 0,
            iterations: 0,
        };

        if nart > 0 {
            let mut c1 = vec![0.0; ncols];
            for c in c1.iter_mut().skip(nstruct + nslack) {
                *c = -1.0;
            }
            t.price(&c1);
            t.run()?;
            let infeasibility = -t.obj[ncols];
            if infeasibility > feas_tol {
                return Ok(Err(LpStatus::Infeasible));
            }
            t.expel_artificials(nstruct + nslack);
            for j in nstruct + nslack..ncols {
                t.allowed[j] = false;
            }
        }

        let mut c2 = vec![0.0; ncols];
        c2[..nstruct].copy_from_slice(cost);
        t.cost_tol = lp_tol * cmax;
        t.price(&c2);
        if let Step::Unbounded = t.run()? {
            return Ok(Err(LpStatus::Unbounded));
        }

        let x = t.polished_solution(&original, ncols);
        Ok(Ok(x[..nstruct].to_vec()))
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.width + self.width - 1]
    }

    /// Reduced costs `c_j - c_B B^-1 a_j` and the current value.
    fn price(&mut self, c: &[f64]) {
        let w = self.width;
        let mut obj = vec![0.0; w];
        obj[..w - 1].copy_from_slice(c);
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * w..(i + 1) * w];
                for j in 0..w - 1 {
                    obj[j] -= cb * row[j];
                }
                obj[w - 1] += cb * row[w - 1];
            }
        }
        // basic columns price to exactly zero
        for &b in &self.basis {
            obj[b] = 0.0;
        }
        // obj[w-1] holds the objective value
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.a[r * w + c];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.a[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                let row = &mut self.a[i * w..(i + 1) * w];
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w - 1 {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[w - 1] += f * pivot_row[w - 1];
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn run(&mut self) -> Result<Step, LpError> {
        let ncols = self.width - 1;
        let max_iter = 50 * (self.m + ncols) + 1000;
        let mut streak = 0;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = self.cost_tol;
            for j in 0..ncols {
                if !self.allowed[j] || self.obj[j] <= self.cost_tol {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if self.obj[j] > best {
                    best = self.obj[j];
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok(Step::Optimal);
            };

            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let aic = self.a[i * self.width + c];
                if aic <= self.piv_tol * 1e-3 {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / aic;
                leave = match leave {
                    None => Some((i, ratio, aic)),
                    Some((r, best_ratio, best_piv)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                aic > best_piv
                            }
                        } else {
                            ratio < best_ratio
                        };
                        if better {
                            Some((i, ratio, aic))
                        } else {
                            Some((r, best_ratio, best_piv))
                        }
                    }
                };
            }
            let Some((r, ratio, piv)) = leave else {
                return Ok(Step::Unbounded);
            };
            if piv < self.piv_tol {
                self.tiny_pivots += 1;
                if self.tiny_pivots > TINY_PIVOT_LIMIT {
                    return Err(LpError::NumericalBreakdown(format!(
                        "repeated pivots below {:e}",
                        self.piv_tol
                    )));
                }
            }
            if ratio <= self.piv_tol {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(r, c);
            self.iterations += 1;
            if self.iterations > max_iter {
                return Err(LpError::NumericalBreakdown(format!(
                    "no convergence after {} pivots",
                    self.iterations
                )));
            }
        }
    }

    /// Pivots basic artificials out; rows where that is impossible are
    /// redundant and are dropped.
    fn expel_artificials(&mut self, first_art: usize) {
        let w = self.width;
        let mut i = 0;
        while i < self.m {
            if self.basis[i] < first_art {
                i += 1;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..first_art {
                let v = self.a[i * w + j].abs();
                if v > self.piv_tol && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.a.drain(i * w..(i + 1) * w);
                    self.basis.remove(i);
                    self.row_ids.remove(i);
                    self.m -= 1;
                }
            }
        }
    }

    /// Basic values re-solved from the original rows `B x_B = b`.
    fn polished_solution(&self, original: &[f64], ncols: usize) -> Vec<f64> {
        let w = self.width;
        let mut x = vec![0.0; ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs(i).max(0.0);
        }
        let k = self.basis.len();
        let mut system = vec![0.0; k * (k + 1)];
        for (p, &r) in self.row_ids.iter().enumerate() {
            let row = &original[r * w..(r + 1) * w];
            for (q, &b) in self.basis.iter().enumerate() {
                system[p * (k + 1) + q] = row[b];
            }
            system[p * (k + 1) + k] = row[w - 1];
        }
        if let Some(sol) = gauss_solve(&mut system, k) {
            let close = sol
                .iter()
                .zip(&self.basis)
                .all(|(v, &b)| (v - x[b]).abs() <= 1e-6 * (1.0 + x[b].abs()));
            if close {
                for (v, &b) in sol.iter().zip(&self.basis) {
                    x[b] = v.max(0.0);
                }
            }
        }
        x
    }
}

/// Solves the `k x k` system stored row-major with the rhs as column `k`.
fn gauss_solve(m: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let w = k + 1;
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[piv * w + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..w {
                m.swap(piv * w + j, col * w + j);
            }
        }
        for r in col + 1..k {
            let f = m[r * w + col] / m[col * w + col];
            if f != 0.0 {
                for j in col..w {
                    m[r * w + j] -= f * m[col * w + j];
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = m[r * w + k];
        for j in r + 1..k {
            s -= m[r * w + j] * x[j];
        }
        x[r] = s / m[r * w + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], relation: Relation, rhs: f64) -> LinearRow {
        LinearRow {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        }
    }

    fn obj(coeffs: &[f64]) -> AffineExpr {
        AffineExpr {
            constant: 0.0,
            coeffs: coeffs.to_vec(),
        }
    }

    #[test]
    fn single_bound() {
        let inst = LpInstance::new(
            obj(&[1.0]),
            vec![row(&[1.0], Relation::Leq, 5.0), row(&[1.0], Relation::Geq, 0.0)],
        );
        let out = solve_lp(&inst, 1e-9).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds() {
        let inst = LpInstance::new(
            obj(&[1.0]),
            vec![row(&[1.0], Relation::Leq, 1.0), row(&[1.0], Relation::Geq, 2.0)],
        );
        assert_eq!(solve_lp(&inst, 1e-9).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let inst = LpInstance::new(obj(&[1.0, 1.0]), vec![row(&[1.0, -1.0], Relation::Leq, 1.0)]);
        assert_eq!(solve_lp(&inst, 1e-9).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_instance() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
        let inst = LpInstance::new(
            obj(&[3.0, 5.0]),
            vec![
                row(&[1.0, 0.0], Relation::Leq, 4.0),
                row(&[0.0, 2.0], Relation::Leq, 12.0),
                row(&[3.0, 2.0], Relation::Leq, 18.0),
                row(&[1.0, 0.0], Relation::Geq, 0.0),
                row(&[0.0, 1.0], Relation::Geq, 0.0),
            ],
        );
        let out = solve_lp(&inst, 1e-9).unwrap();
        assert!((out.value - 36.0).abs() < 1e-9);
        assert!((out.assignment[0] - 2.0).abs() < 1e-9);
        assert!((out.assignment[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equalities_with_free_unknowns() {
        // 3x + y = 25, 2x - y = 25 pins x = 10, y = -5
        let inst = LpInstance::new(
            obj(&[1.0, -1.0]),
            vec![row(&[3.0, 1.0], Relation::Eq, 25.0), row(&[2.0, -1.0], Relation::Eq, 25.0)],
        );
        let out = solve_lp(&inst, 1e-9).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.assignment[0] - 10.0).abs() < 1e-12);
        assert!((out.assignment[1] + 5.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let inst = LpInstance::new(
            obj(&[1.0, 1.0]),
            vec![
                row(&[1.0, 1.0], Relation::Eq, 2.0),
                row(&[2.0, 2.0], Relation::Eq, 4.0),
                row(&[1.0, 0.0], Relation::Leq, 1.5),
                row(&[0.0, 0.0], Relation::Eq, 0.0),
            ],
        );
        let out = solve_lp(&inst, 1e-9).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under naive Dantzig pricing
        let inst = LpInstance::new(
            obj(&[0.75, -150.0, 0.02, -6.0]),
            vec![
                row(&[0.25, -60.0, -0.04, 9.0], Relation::Leq, 0.0),
                row(&[0.5, -90.0, -0.02, 3.0], Relation::Leq, 0.0),
                row(&[0.0, 0.0, 1.0, 0.0], Relation::Leq, 1.0),
                row(&[1.0, 0.0, 0.0, 0.0], Relation::Geq, 0.0),
                row(&[0.0, 1.0, 0.0, 0.0], Relation::Geq, 0.0),
                row(&[0.0, 0.0, 1.0, 0.0], Relation::Geq, 0.0),
                row(&[0.0, 0.0, 0.0, 1.0], Relation::Geq, 0.0),
            ],
        );
        let out = solve_lp(&inst, 1e-9).unwrap();
        assert!((out.value - 0.05).abs() < 1e-9);
    }
}
