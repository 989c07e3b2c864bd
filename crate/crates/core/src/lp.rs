//! The supplier-distribution LP relaxations, their dual, and small exact solvers.
//!
//! Variable layout for the marginal-form LP: `x[i][j]` first (row-major), then
//! one `λ_{j,C}` per supplier and support set.

use serde::{Deserialize, Serialize};

use crate::cost::{rev_cost, sub_dual_exact, CostVector};
use crate::error::{check_size, Error, Result};
use crate::instance::Instance;
use crate::mnl::{choice_prob, expected_revenue, optimal_revenue, BRUTE_FORCE_LIMIT};
use crate::simplex::{solve_lp, LpProblem, LpStatus, Sense};
use crate::subset::Subset;

/// Exact small solvers instantiate every subset; these are the caps.
pub const LP2_MAX_CUSTOMERS: usize = 10;
pub const LP2_MAX_SUPPLIERS: usize = 4;
pub const LP1_MAX_SIDE: usize = 4;

/// Marginals `x` plus a sparse distribution over customer sets per supplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<(Subset, f64)>>,
    pub objective: f64,
}

impl LpSolution {
    /// The all-empty solution: every supplier sees no one.
    pub fn trivial(n: usize, m: usize) -> Self {
        LpSolution {
            x: vec![vec![0.0; m]; n],
            lambda: vec![vec![(Subset::empty(), 1.0)]; m],
            objective: 0.0,
        }
    }

    /// Lists every violated feasibility condition at tolerance `tol`.
    pub fn check(&self, inst: &Instance, tol: f64) -> Vec<String> {
        let (n, m) = (inst.n(), inst.m());
        let mut bad = Vec::new();
        if self.x.len() != n || self.x.iter().any(|row| row.len() != m) || self.lambda.len() != m {
            bad.push("dimension mismatch".to_string());
            return bad;
        }
        for (j, dist) in self.lambda.iter().enumerate() {
            let total: f64 = dist.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > tol {
                bad.push(format!("supplier {j}: probabilities sum to {total}"));
            }
            for (c, p) in dist {
                if *p < -tol {
                    bad.push(format!("supplier {j}: negative mass {p} on {c}"));
                }
                if c.max_index().is_some_and(|i| i >= n) {
                    bad.push(format!("supplier {j}: set {c} out of range"));
                }
            }
            for i in 0..n {
                let mass: f64 = dist.iter().filter(|(c, _)| c.contains(i)).map(|(_, p)| p).sum();
                if (mass - self.x[i][j]).abs() > tol {
                    bad.push(format!("({i},{j}): λ mass {mass} differs from x = {}", self.x[i][j]));
                }
            }
        }
        for i in 0..n {
            let row: f64 = self.x[i].iter().sum();
            for j in 0..m {
                if self.x[i][j] < -tol {
                    bad.push(format!("({i},{j}): negative x"));
                }
                let lhs = self.x[i][j] / inst.u(i, j) + row;
                if lhs > 1.0 + tol {
                    bad.push(format!("({i},{j}): capacity row {lhs} > 1"));
                }
            }
        }
        bad
    }

    /// `Σ_j Σ_C R_j(C) λ_{j,C}` recomputed from the distributions.
    pub fn recompute_objective(&self, inst: &Instance) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .map(|(j, dist)| dist.iter().map(|(c, p)| expected_revenue(inst, j, c.as_slice()) * p).sum::<f64>())
            .sum()
    }
}

/// A point of the dual of the marginal-form LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub gamma: CostVector,
}

impl DualPoint {
    /// `α = 0`, `β_j = beta`, `γ = 0`.
    pub fn uniform_beta(n: usize, m: usize, beta: f64) -> Self {
        DualPoint {
            alpha: vec![vec![0.0; m]; n],
            beta: vec![beta; m],
            gamma: CostVector::zeros(n, m),
        }
    }

    pub fn objective(&self) -> f64 {
        self.beta.iter().sum::<f64>() + self.alpha.iter().flatten().sum::<f64>()
    }

    /// Flattens to `(α, β, γ)` with α and γ row-major.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.alpha.iter().flatten().copied().collect();
        v.extend_from_slice(&self.beta);
        v.extend(self.gamma.rows().iter().flatten().copied());
        v
    }

    pub fn from_vec(n: usize, m: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), 2 * n * m + m, "dual vector has the wrong length");
        let alpha = v[..n * m].chunks(m).map(<[f64]>::to_vec).collect();
        let beta = v[n * m..n * m + m].to_vec();
        let gamma = v[n * m + m..].chunks(m).map(<[f64]>::to_vec).collect();
        DualPoint { alpha, beta, gamma: CostVector::from_rows(gamma).expect("finite input") }
    }
}

/// `α_ij/u_ij + Σ_ℓ α_iℓ − γ_ij`; negative means the row is violated.
pub fn row_slack(inst: &Instance, alpha: &[Vec<f64>], gamma: &CostVector, i: usize, j: usize) -> f64 {
    alpha[i][j] / inst.u(i, j) + alpha[i].iter().sum::<f64>() - gamma.get(i, j)
}

/// Per-supplier lists of customer sets, without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolatedSets(Vec<Vec<Subset>>);

impl ViolatedSets {
    pub fn new(m: usize) -> Self {
        ViolatedSets(vec![Vec::new(); m])
    }

    /// Records `c` for supplier `j`; returns false if it was already there.
    pub fn insert(&mut self, j: usize, c: Subset) -> bool {
        if self.0[j].contains(&c) {
            return false;
        }
        self.0[j].push(c);
        true
    }

    pub fn supplier(&self, j: usize) -> &[Subset] {
        &self.0[j]
    }

    pub fn suppliers(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }
}

/// The marginal-form LP with `λ_j` restricted to `support[j]`.
pub fn build_lp2(inst: &Instance, support: &[Vec<Subset>]) -> LpProblem {
    let (n, m) = (inst.n(), inst.m());
    let nx = n * m;
    let mut offsets = Vec::with_capacity(m);
    let mut next = nx;
    for s in support {
        offsets.push(next);
        next += s.len();
    }
    let mut p = LpProblem::new(next);
    for i in 0..n {
        for j in 0..m {
            p.var_names.push(format!("x[{i}][{j}]"));
        }
    }
    for (j, sets) in support.iter().enumerate() {
        for (k, c) in sets.iter().enumerate() {
            p.objective[offsets[j] + k] = expected_revenue(inst, j, c.as_slice());
            p.var_names.push(format!("lambda[{j}]{c}"));
        }
    }
    for (j, sets) in support.iter().enumerate() {
        let coeffs = (0..sets.len()).map(|k| (offsets[j] + k, 1.0)).collect();
        p.add(coeffs, Sense::Eq, 1.0).name = Some(format!("dist[{j}]"));
    }
    for i in 0..n {
        for (j, sets) in support.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = sets
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains(i))
                .map(|(k, _)| (offsets[j] + k, 1.0))
                .collect();
            coeffs.push((i * m + j, -1.0));
            p.add(coeffs, Sense::Eq, 0.0).name = Some(format!("link[{i}][{j}]"));
        }
    }
    for i in 0..n {
        for j in 0..m {
            let coeffs = (0..m)
                .map(|l| (i * m + l, if l == j { 1.0 + 1.0 / inst.u(i, j) } else { 1.0 }))
                .collect();
            p.add(coeffs, Sense::Le, 1.0).name = Some(format!("cap[{i}][{j}]"));
        }
    }
    p
}

/// Solves the marginal-form LP restricted to `support`.
pub fn solve_lp2_on_support(inst: &Instance, support: &[Vec<Subset>]) -> Result<LpSolution> {
    let (n, m) = (inst.n(), inst.m());
    let p = build_lp2(inst, support);
    let out = solve_lp(&p)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => return Err(Error::LpStatus("unbounded")),
    }
    let x: Vec<Vec<f64>> = out.x[..n * m].chunks(m).map(<[f64]>::to_vec).collect();
    let mut lambda = Vec::with_capacity(m);
    let mut k = n * m;
    for sets in support {
        let mut dist = Vec::new();
        for c in sets {
            let p = out.x[k];
            k += 1;
            if p > 0.0 {
                dist.push((c.clone(), p));
            }
        }
        lambda.push(dist);
    }
    let mut sol = LpSolution { x, lambda, objective: 0.0 };
    sol.objective = sol.recompute_objective(inst);
    Ok(sol)
}

fn all_subsets(n: usize) -> Vec<Subset> {
    (0..1u64 << n).map(Subset::from_mask).collect()
}

/// Exact optimum of the marginal-form LP with every `λ_{j,C}` instantiated.
pub fn lp2_exact_small(inst: &Instance) -> Result<LpSolution> {
    check_size("exact marginal-form LP (customers)", inst.n(), LP2_MAX_CUSTOMERS)?;
    check_size("exact marginal-form LP (suppliers)", inst.m(), LP2_MAX_SUPPLIERS)?;
    let support = vec![all_subsets(inst.n()); inst.m()];
    solve_lp2_on_support(inst, &support)
}

/// The marginal-form LP restricted to the recorded sets, with `∅` always present.
pub fn build_aux_primal(inst: &Instance, v: &ViolatedSets) -> (LpProblem, Vec<Vec<Subset>>) {
    let support: Vec<Vec<Subset>> = (0..inst.m())
        .map(|j| {
            let mut sets = vec![Subset::empty()];
            sets.extend(v.supplier(j).iter().filter(|c| !c.is_empty()).cloned());
            sets
        })
        .collect();
    (build_lp2(inst, &support), support)
}

/// Solves the auxiliary primal built from `v`.
pub fn solve_aux_primal(inst: &Instance, v: &ViolatedSets) -> Result<LpSolution> {
    let (_, support) = build_aux_primal(inst, v);
    solve_lp2_on_support(inst, &support)
}

/// Exact optimum of the assortment-distribution LP over `τ_{i,S}` and `λ_{j,C}`
/// with optimal-revenue coefficients.
pub fn lp1_exact_small(inst: &Instance) -> Result<f64> {
    let (n, m) = (inst.n(), inst.m());
    check_size("exact assortment LP (customers)", n, LP1_MAX_SIDE)?;
    check_size("exact assortment LP (suppliers)", m, LP1_MAX_SIDE)?;
    let customer_sets = all_subsets(n);
    let supplier_sets = all_subsets(m);
    let lam = |j: usize, k: usize| j * customer_sets.len() + k;
    let tau0 = m * customer_sets.len();
    let tau = |i: usize, k: usize| tau0 + i * supplier_sets.len() + k;
    let mut p = LpProblem::new(tau0 + n * supplier_sets.len());
    for j in 0..m {
        for (k, c) in customer_sets.iter().enumerate() {
            p.objective[lam(j, k)] = optimal_revenue(inst, j, c.as_slice()).0;
        }
        p.add((0..customer_sets.len()).map(|k| (lam(j, k), 1.0)).collect(), Sense::Eq, 1.0);
    }
    for i in 0..n {
        p.add((0..supplier_sets.len()).map(|k| (tau(i, k), 1.0)).collect(), Sense::Eq, 1.0);
    }
    for i in 0..n {
        for j in 0..m {
            let mut coeffs: Vec<(usize, f64)> = customer_sets
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains(i))
                .map(|(k, _)| (lam(j, k), 1.0))
                .collect();
            for (k, s) in supplier_sets.iter().enumerate() {
                if s.contains(j) {
                    let phi = choice_prob(inst.customer_weights(i), s.as_slice(), Some(j));
                    coeffs.push((tau(i, k), -phi));
                }
            }
            p.add(coeffs, Sense::Eq, 0.0);
        }
    }
    let out = solve_lp(&p)?;
    match out.status {
        LpStatus::Optimal => Ok(out.objective),
        LpStatus::Infeasible => Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => Err(Error::LpStatus("unbounded")),
    }
}

/// One violated dual constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DualViolation {
    Row { i: usize, j: usize, slack: f64 },
    Negative { i: usize, j: usize, value: f64 },
    AssortmentWithCost { j: usize, set: Subset, value: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub violations: Vec<DualViolation>,
    /// Whether the exponential family was checked.
    pub exact: bool,
}

impl DualReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans the dual constraints of `p`. With `exact`, the exponential family is
/// separated by enumeration; otherwise only the polynomial rows are checked.
pub fn dual_feasibility_report(inst: &Instance, p: &DualPoint, exact: bool) -> Result<DualReport> {
    let (n, m) = (inst.n(), inst.m());
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let slack = row_slack(inst, &p.alpha, &p.gamma, i, j);
            if slack < 0.0 {
                violations.push(DualViolation::Row { i, j, slack });
            }
        }
    }
    for i in 0..n {
        for j in 0..m {
            if p.alpha[i][j] < 0.0 {
                violations.push(DualViolation::Negative { i, j, value: p.alpha[i][j] });
            }
        }
    }
    if exact {
        check_size("exact dual check (customers)", n, BRUTE_FORCE_LIMIT)?;
        for j in 0..m {
            let (value, set) = sub_dual_exact(inst, j, &p.gamma)?;
            if value > p.beta[j] {
                violations.push(DualViolation::AssortmentWithCost { j, set, value, beta: p.beta[j] });
            }
        }
    }
    Ok(DualReport { violations, exact })
}

/// `Rev-Cost` on a specific set; re-exported here for constraint re-checks.
pub fn assortment_with_cost(inst: &Instance, j: usize, set: &Subset, gamma: &CostVector) -> f64 {
    rev_cost(inst, j, set.as_slice(), gamma)
}
