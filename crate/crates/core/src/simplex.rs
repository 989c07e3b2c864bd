//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are `max cᵀx` subject to linear rows and `x ≥ 0`. Intended for the
//! desk-scale LPs in this crate (a few thousand columns at most).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feasibility tolerance on phase-one infeasibility and primal values.
pub const FEAS_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// `max objective·x` s.t. `constraints`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub var_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal values; meaningful only when `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed lp: {0}")]
    Malformed(String),
    #[error("numerical failure after {pivots} pivots: {detail} (max |entry| = {max_entry:e}, smallest pivot = {min_pivot:e})")]
    Numerical {
        pivots: usize,
        detail: String,
        max_entry: f64,
        min_pivot: f64,
    },
    #[error("pivot limit {0} reached")]
    PivotLimit(usize),
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            var_names: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> &mut Constraint {
        self.constraints.push(Constraint { coeffs, sense, rhs, name: None });
        self.constraints.last_mut().expect("just pushed")
    }

    fn check(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if !self.var_names.is_empty() && self.var_names.len() != self.num_vars {
            return Err(LpError::Malformed("var_names length differs from num_vars".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (k, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {k}: non-finite rhs")));
            }
            for &(v, a) in &row.coeffs {
                if v >= self.num_vars {
                    return Err(LpError::Malformed(format!("row {k}: variable {v} out of range")));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {k}: non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Objective value and largest row violation of a candidate point.
    pub fn evaluate(&self, x: &[f64]) -> (f64, f64) {
        let obj = self.objective.iter().zip(x).map(|(c, v)| c * v).sum();
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().map(|&(v, a)| a * x[v]).sum();
            let gap = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        (obj, worst)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, `cols + 1` entries per row, last is the rhs
    data: Vec<f64>,
    basis: Vec<usize>,
    // reduced profits, `cols + 1` entries, last is −objective
    profit: Vec<f64>,
    pivots: usize,
    min_pivot: f64,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        self.profit = cost.to_vec();
        self.profit.push(0.0);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * w..(r + 1) * w];
                for (p, &a) in self.profit.iter_mut().zip(row) {
                    *p -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<(), LpError> {
        let w = self.cols + 1;
        let pv = self.at(pr, pc);
        self.min_pivot = self.min_pivot.min(pv.abs());
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            for a in row.iter_mut() {
                *a /= pv;
            }
        }
        let prow: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (a, &p) in row.iter_mut().zip(&prow) {
                    *a -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.profit[pc];
        if f != 0.0 {
            for (a, &p) in self.profit.iter_mut().zip(&prow) {
                *a -= f * p;
            }
            self.profit[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
        let last = self.profit[self.cols];
        if !last.is_finite() || (0..self.rows).any(|r| !self.rhs(r).is_finite()) {
            return Err(self.numerical("non-finite value after pivot"));
        }
        Ok(())
    }

    fn numerical(&self, detail: &str) -> LpError {
        LpError::Numerical {
            pivots: self.pivots,
            detail: detail.to_string(),
            max_entry: self.data.iter().fold(0.0f64, |m, a| m.max(a.abs())),
            min_pivot: self.min_pivot,
        }
    }

    /// Runs Bland-rule pivots on columns allowed by `allowed`. Returns false when unbounded.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool, limit: usize) -> Result<bool, LpError> {
        loop {
            let Some(pc) = (0..self.cols).find(|&c| allowed(c) && self.profit[c] > COST_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bq)) => {
                            if ratio < bq - 1e-12 || (ratio <= bq + 1e-12 && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bq))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return Ok(false);
            };
            if self.pivots >= limit {
                return Err(LpError::PivotLimit(limit));
            }
            self.pivot(pr, pc)?;
        }
    }
}

/// A constraint after sign normalization: coefficients, sense, rhs ≥ 0.
type Row = (Vec<(usize, f64)>, Sense, f64);

/// Solves `p` to an optimal basic solution, or reports infeasibility/unboundedness.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome, LpError> {
    p.check()?;
    let n = p.num_vars;
    let m = p.constraints.len();

    // Normalize every row to a nonnegative rhs.
    let mut rows: Vec<Row> = Vec::with_capacity(m);
    for c in &p.constraints {
        let mut coeffs = c.coeffs.clone();
        let (mut sense, mut rhs) = (c.sense, c.rhs);
        if rhs < 0.0 {
            for e in coeffs.iter_mut() {
                e.1 = -e.1;
            }
            rhs = -rhs;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        rows.push((coeffs, sense, rhs));
    }

    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; m * w],
        basis: vec![0; m],
        profit: Vec::new(),
        pivots: 0,
        min_pivot: f64::INFINITY,
    };
    let (mut next_slack, mut next_art) = (n, art_start);
    for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        for &(v, a) in coeffs {
            t.data[r * w + v] += a;
        }
        t.data[r * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                t.data[r * w + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.data[r * w + next_slack] = -1.0;
                next_slack += 1;
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let limit = 50_000 + 50 * (m + cols);
    let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        t.set_costs(&phase1);
        t.optimize(&|_| true, limit)?;
        let infeasibility = t.profit[cols];
        if infeasibility > FEAS_TOL * scale {
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                pivots: t.pivots,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| t.at(r, c).abs() > PIVOT_TOL) {
                    t.pivot(r, c)?;
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&p.objective);
    t.set_costs(&cost);
    let bounded = t.optimize(&|c| c < art_start, limit)?;
    if !bounded {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::INFINITY,
            pivots: t.pivots,
        });
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        let b = t.basis[r];
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        } else if b >= art_start && t.rhs(r).abs() > FEAS_TOL * scale {
            return Err(t.numerical("artificial variable left basic at a nonzero level"));
        }
    }
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome { status: LpStatus::Optimal, x, objective, pivots: t.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_single_variable() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.add(vec![(0, 1.0)], Sense::Le, 1.0);
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-12);
        assert!((out.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_single_variable() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_rows() {
        let mut p = LpProblem::new(1);
        p.add(vec![(0, 1.0)], Sense::Ge, 2.0);
        p.add(vec![(0, 1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut p = LpProblem::new(2);
        p.objective = vec![3.0, 5.0];
        p.add(vec![(0, 1.0)], Sense::Le, 4.0);
        p.add(vec![(1, 2.0)], Sense::Le, 12.0);
        p.add(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let out = solve_lp(&p).unwrap();
        assert!((out.objective - 36.0).abs() < 1e-9);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // max x - y s.t. x + y = 1, -x ≥ -0.25  (x ≤ 0.25)
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, -1.0];
        p.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        p.add(vec![(0, -1.0)], Sense::Ge, -0.25);
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 0.5).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        p.add(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 2.0);
        let out = solve_lp(&p).unwrap();
        assert!((out.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule; Bland's rule terminates.
        let mut p = LpProblem::new(4);
        p.objective = vec![0.75, -150.0, 0.02, -6.0];
        p.add(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
        p.add(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
        p.add(vec![(2, 1.0)], Sense::Le, 1.0);
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 0.05).abs() < 1e-9);
    }

    #[test]
    fn malformed_rejected() {
        let mut p = LpProblem::new(1);
        p.add(vec![(3, 1.0)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
        let mut q = LpProblem::new(1);
        q.objective = vec![f64::NAN];
        assert!(matches!(solve_lp(&q), Err(LpError::Malformed(_))));
    }

    #[test]
    fn serde_round_trip() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 0.5];
        p.add(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0).name = Some("cap".into());
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<LpProblem>(&text).unwrap(), p);
    }
}
