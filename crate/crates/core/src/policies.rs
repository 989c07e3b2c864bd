//! Customer-side policies and exact oracles for small instances.
//!
//! Every policy ends the same way: each supplier is offered the best subset of
//! the customers who picked it ([`finalize_suppliers`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::instance::{Instance, SameOrderCertificate};
use crate::lp::LpSolution;
use crate::mnl::{choice_prob, optimal_revenue, GTable};
use crate::rounding::{mnl_distribution, AssortmentDistribution};
use crate::subset::{prefer_smaller, Subset};

pub const DP_MAX_CUSTOMERS: usize = 4;
pub const DP_MAX_SUPPLIERS: usize = 4;
pub const STAR_MAX_SIDE: usize = 3;
pub const INDEPENDENT_MAX_CUSTOMERS: usize = 15;
pub const GREEDY_TREE_MAX_SIDE: usize = 4;

/// Which supplier (if any) each customer picked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BacklogAssignment {
    pub choice: Vec<Option<usize>>,
}

impl BacklogAssignment {
    pub fn new(n: usize) -> Self {
        BacklogAssignment { choice: vec![None; n] }
    }

    /// Customers per supplier; disjoint by construction.
    pub fn backlogs(&self, m: usize) -> Vec<Subset> {
        let mut out = vec![Vec::new(); m];
        for (i, c) in self.choice.iter().enumerate() {
            if let Some(j) = *c {
                out[j].push(i);
            }
        }
        out.into_iter().map(Subset::new).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierOutcome {
    pub backlog: Subset,
    pub offered: Subset,
    pub revenue: f64,
}

/// One customer step of a sampled trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub customer: usize,
    pub offered: Subset,
    pub choice: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub expected_revenue: f64,
    pub per_supplier: Vec<SupplierOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<StepRecord>,
}

/// Offers each supplier a revenue-maximizing subset of its backlog.
pub fn finalize_suppliers(inst: &Instance, b: &BacklogAssignment) -> PolicyOutcome {
    let per_supplier: Vec<SupplierOutcome> = b
        .backlogs(inst.m())
        .into_iter()
        .enumerate()
        .map(|(j, backlog)| {
            let (revenue, offered) = optimal_revenue(inst, j, backlog.as_slice());
            SupplierOutcome { backlog, offered, revenue }
        })
        .collect();
    PolicyOutcome {
        expected_revenue: per_supplier.iter().map(|s| s.revenue).sum(),
        per_supplier,
        trace: Vec::new(),
    }
}

/// Samples the pick of an agent with `weights` offered `s`.
pub fn sample_choice<R: Rng + ?Sized>(weights: &[f64], s: &Subset, rng: &mut R) -> Option<usize> {
    let denom = 1.0 + s.iter().map(|j| weights[j]).sum::<f64>();
    let mut u = rng.random::<f64>() * denom;
    for j in s.iter() {
        if u < weights[j] {
            return Some(j);
        }
        u -= weights[j];
    }
    None
}

// Customer status digits in the DP state: 0 unprocessed, 1 outside, 2 + j supplier j.
struct Dp<'a> {
    inst: &'a Instance,
    g: GTable,
    base: usize,
    pow: Vec<usize>,
    memo: Vec<f64>,
    decision: Vec<Option<(usize, u64)>>,
    order: Option<&'a [usize]>,
}

impl<'a> Dp<'a> {
    fn new(inst: &'a Instance, order: Option<&'a [usize]>) -> Result<Self> {
        check_size("exact dynamic program (customers)", inst.n(), DP_MAX_CUSTOMERS)?;
        check_size("exact dynamic program (suppliers)", inst.m(), DP_MAX_SUPPLIERS)?;
        let base = inst.m() + 2;
        let pow: Vec<usize> = (0..=inst.n()).map(|k| base.pow(k as u32)).collect();
        let states = pow[inst.n()];
        Ok(Dp {
            inst,
            g: GTable::new(inst)?,
            base,
            pow,
            memo: vec![f64::NAN; states],
            decision: vec![None; states],
            order,
        })
    }

    fn digit(&self, code: usize, i: usize) -> usize {
        code / self.pow[i] % self.base
    }

    fn terminal(&self, code: usize) -> f64 {
        let mut masks = vec![0u64; self.inst.m()];
        for i in 0..self.inst.n() {
            let d = self.digit(code, i);
            if d >= 2 {
                masks[d - 2] |= 1 << i;
            }
        }
        masks.iter().enumerate().map(|(j, &mask)| self.g.g(j, mask)).sum()
    }

    fn value(&mut self, code: usize) -> f64 {
        if !self.memo[code].is_nan() {
            return self.memo[code];
        }
        let (n, m) = (self.inst.n(), self.inst.m());
        let open: Vec<usize> = (0..n).filter(|&i| self.digit(code, i) == 0).collect();
        let result = if open.is_empty() {
            self.terminal(code)
        } else {
            let candidates = match self.order {
                Some(order) => vec![order[n - open.len()]],
                None => open,
            };
            let mut best = (f64::NEG_INFINITY, None);
            for i in candidates {
                let weights = self.inst.customer_weights(i);
                for mask in 0..1u64 << m {
                    let s = Subset::from_mask(mask);
                    let mut v = choice_prob(weights, s.as_slice(), None) * self.value(code + self.pow[i]);
                    for j in s.iter() {
                        v += choice_prob(weights, s.as_slice(), Some(j)) * self.value(code + (2 + j) * self.pow[i]);
                    }
                    if v > best.0 {
                        best = (v, Some((i, mask)));
                    }
                }
            }
            self.decision[code] = best.1;
            best.0
        };
        self.memo[code] = result;
        result
    }
}

/// Optimal adaptive value together with its decision table.
#[derive(Debug, Clone)]
pub struct DpSolution {
    pub value: f64,
    m: usize,
    base: usize,
    decisions: Vec<Option<(usize, u64)>>,
}

impl DpSolution {
    /// Customer to process and assortment to show, given the picks so far.
    pub fn decision(&self, picks: &[Option<Option<usize>>]) -> Option<(usize, Subset)> {
        let mut code = 0;
        let mut pow = 1;
        for p in picks {
            code += pow
                * match p {
                    None => 0,
                    Some(None) => 1,
                    Some(Some(j)) => {
                        assert!(*j < self.m, "supplier out of range");
                        2 + j
                    }
                };
            pow *= self.base;
        }
        self.decisions.get(code).copied().flatten().map(|(i, mask)| (i, Subset::from_mask(mask)))
    }
}

/// Optimal expected revenue when the platform may pick the next customer adaptively.
pub fn exact_dp_atar(inst: &Instance) -> Result<DpSolution> {
    let mut dp = Dp::new(inst, None)?;
    let value = dp.value(0);
    Ok(DpSolution { value, m: inst.m(), base: dp.base, decisions: dp.decision })
}

/// Optimal expected revenue when customers must be processed in `order`.
pub fn exact_dp_ftar(inst: &Instance, order: &[usize]) -> Result<f64> {
    check_permutation(order, inst.n())?;
    let mut dp = Dp::new(inst, Some(order))?;
    Ok(dp.value(0))
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidArgument(format!("order has {} entries for {n} customers", order.len())));
    }
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!("order is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Expected `Σ_j g_j(C_j)` when the assortment profile `profile` is shown to all
/// customers at once, by enumerating every choice profile.
pub fn static_profile_value(inst: &Instance, g: &GTable, profile: &[Subset]) -> f64 {
    let (n, m) = (inst.n(), inst.m());
    let options: Vec<Vec<(Option<usize>, f64)>> = (0..n)
        .map(|i| {
            let w = inst.customer_weights(i);
            let s = profile[i].as_slice();
            std::iter::once((None, choice_prob(w, s, None)))
                .chain(s.iter().map(|&j| (Some(j), choice_prob(w, s, Some(j)))))
                .collect()
        })
        .collect();
    let mut pick = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut masks = vec![0u64; m];
        let mut p = 1.0;
        for i in 0..n {
            let (c, q) = options[i][pick[i]];
            p *= q;
            if let Some(j) = c {
                masks[j] |= 1 << i;
            }
        }
        total += p * masks.iter().enumerate().map(|(j, &mk)| g.g(j, mk)).sum::<f64>();
        // odometer
        let mut k = 0;
        while k < n {
            pick[k] += 1;
            if pick[k] < options[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == n {
            return total;
        }
    }
}

/// Best static profile: every customer shown a fixed assortment simultaneously.
pub fn exact_star(inst: &Instance) -> Result<f64> {
    let (n, m) = (inst.n(), inst.m());
    check_size("exact static optimum (customers)", n, STAR_MAX_SIDE)?;
    check_size("exact static optimum (suppliers)", m, STAR_MAX_SIDE)?;
    let g = GTable::new(inst)?;
    let sets = 1usize << m;
    let mut best: f64 = 0.0;
    for code in 0..sets.pow(n as u32) {
        let profile: Vec<Subset> = (0..n).map(|i| Subset::from_mask((code / sets.pow(i as u32) % sets) as u64)).collect();
        best = best.max(static_profile_value(inst, &g, &profile));
    }
    Ok(best)
}

/// `Σ_j Σ_C g_j(C) Π_{i∈C} x_ij Π_{i∉C} (1 − x_ij)`.
pub fn independent_value(inst: &Instance, x: &[Vec<f64>]) -> Result<f64> {
    let n = inst.n();
    check_size("independent-distribution evaluation (customers)", n, INDEPENDENT_MAX_CUSTOMERS)?;
    let g = GTable::new(inst)?;
    let mut total = 0.0;
    for j in 0..inst.m() {
        let q: Vec<f64> = (0..n).map(|i| x[i][j].clamp(0.0, 1.0)).collect();
        let mut prob = vec![1.0; 1 << n];
        for (i, &qi) in q.iter().enumerate() {
            let bit = 1 << i;
            for (mask, p) in prob.iter_mut().enumerate() {
                *p *= if mask & bit != 0 { qi } else { 1.0 - qi };
            }
        }
        total += prob.iter().zip(g.supplier(j)).map(|(p, v)| p * v).sum::<f64>();
    }
    Ok(total)
}

/// Independent random assortments built from LP marginals.
#[derive(Debug, Clone)]
pub struct RandomizedStatic {
    dists: Vec<AssortmentDistribution>,
    induced: Vec<Vec<f64>>,
}

impl RandomizedStatic {
    pub fn new(inst: &Instance, lp: &LpSolution) -> Result<Self> {
        if lp.x.len() != inst.n() {
            return Err(Error::InvalidArgument("lp solution does not match the instance".into()));
        }
        let dists = (0..inst.n())
            .map(|i| mnl_distribution(&lp.x[i], inst.customer_weights(i)))
            .collect::<Result<Vec<_>>>()?;
        let induced = dists.iter().enumerate().map(|(i, d)| d.induced_marginals(inst.customer_weights(i))).collect();
        Ok(RandomizedStatic { dists, induced })
    }

    pub fn distributions(&self) -> &[AssortmentDistribution] {
        &self.dists
    }

    /// Probability that customer `i` ends up with supplier `j`.
    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.induced
    }

    /// One realization: draw every customer's assortment and choice, then finalize.
    pub fn sample<R: Rng + ?Sized>(&self, inst: &Instance, rng: &mut R) -> PolicyOutcome {
        let mut b = BacklogAssignment::new(inst.n());
        let mut trace = Vec::with_capacity(inst.n());
        for (i, dist) in self.dists.iter().enumerate() {
            let offered = dist.sample(rng).clone();
            let choice = sample_choice(inst.customer_weights(i), &offered, rng);
            b.choice[i] = choice;
            trace.push(StepRecord { customer: i, offered, choice });
        }
        let mut out = finalize_suppliers(inst, &b);
        out.trace = trace;
        out
    }

    /// Exact expected revenue; backlogs are independent across customers.
    pub fn exact_value(&self, inst: &Instance) -> Result<f64> {
        independent_value(inst, &self.induced)
    }
}

/// `Σ_{j∈s} values_j u_j / (1 + Σ_{j∈s} u_j)`, summed in index order.
pub fn assortment_value(u: &[f64], values: &[f64], s: &[usize]) -> f64 {
    let (num, den) = s.iter().fold((0.0, 1.0), |(num, den), &j| (num + values[j] * u[j], den + u[j]));
    num / den
}

/// Best assortment for a customer with weights `u` when supplier `j` is worth
/// `values[j]`: the best prefix of suppliers sorted by value, shortest on ties.
pub fn greedy_assortment(u: &[f64], values: &[f64]) -> (f64, Subset) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut best = (0.0, Subset::empty());
    for k in 1..=order.len() {
        let s = Subset::new(order[..k].to_vec());
        let v = assortment_value(u, values, s.as_slice());
        if v > best.0 {
            best = (v, s);
        }
    }
    best
}

/// Exhaustive counterpart of [`greedy_assortment`]; ties go to smaller, then
/// lexicographically first, sets.
pub fn greedy_assortment_bruteforce(u: &[f64], values: &[f64]) -> Result<(f64, Subset)> {
    check_size("assortment enumeration (suppliers)", values.len(), crate::mnl::BRUTE_FORCE_LIMIT)?;
    let mut best = (0.0, Subset::empty());
    for mask in 1u64..1 << values.len() {
        let s = Subset::from_mask(mask);
        let v = assortment_value(u, values, s.as_slice());
        if v > best.0 || (v == best.0 && prefer_smaller(s.as_slice(), best.1.as_slice())) {
            best = (v, s);
        }
    }
    Ok(best)
}

/// Result of enumerating the greedy policy's full outcome tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyEvaluation {
    pub expected_revenue: f64,
    pub paths: usize,
    /// Largest `|Σα̃ + Σβ̃ − 2 Σ_j g_j(C_j)|` over paths.
    pub max_identity_error: f64,
}

/// Processes customers in a fixed order, offering each the assortment with the
/// largest expected marginal gain.
#[derive(Debug, Clone)]
pub struct SameOrderGreedy {
    order: Vec<usize>,
    heuristic: bool,
}

impl SameOrderGreedy {
    /// Requires a common revenue order; refuses without one.
    pub fn new(inst: &Instance, cert: Option<&SameOrderCertificate>) -> Result<Self> {
        let cert = cert.ok_or(Error::MissingCertificate)?;
        if SameOrderCertificate::verify(inst, cert.order().to_vec()).is_none() {
            return Err(Error::MissingCertificate);
        }
        Ok(SameOrderGreedy { order: cert.order().to_vec(), heuristic: false })
    }

    /// Runs in `order` without any guarantee.
    pub fn forced(inst: &Instance, order: Vec<usize>) -> Result<Self> {
        check_permutation(&order, inst.n())?;
        Ok(SameOrderGreedy { order, heuristic: true })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn is_heuristic(&self) -> bool {
        self.heuristic
    }

    pub fn sample<R: Rng + ?Sized>(&self, inst: &Instance, rng: &mut R) -> PolicyOutcome {
        let m = inst.m();
        let mut backlog: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut current: Vec<f64> = vec![0.0; m];
        let mut b = BacklogAssignment::new(inst.n());
        let mut trace = Vec::with_capacity(inst.n());
        for &i in &self.order {
            let with: Vec<f64> = (0..m)
                .map(|j| {
                    let mut c = backlog[j].clone();
                    c.push(i);
                    optimal_revenue(inst, j, &c).0
                })
                .collect();
            let gains: Vec<f64> = (0..m).map(|j| with[j] - current[j]).collect();
            let (_, offered) = greedy_assortment(inst.customer_weights(i), &gains);
            let choice = sample_choice(inst.customer_weights(i), &offered, rng);
            if let Some(j) = choice {
                backlog[j].push(i);
                current[j] = with[j];
            }
            b.choice[i] = choice;
            trace.push(StepRecord { customer: i, offered, choice });
        }
        let mut out = finalize_suppliers(inst, &b);
        out.trace = trace;
        out
    }

    /// Exact expectation over every choice path, checking the dual identity on each.
    pub fn exact(&self, inst: &Instance) -> Result<GreedyEvaluation> {
        check_size("greedy outcome tree (customers)", inst.n(), GREEDY_TREE_MAX_SIDE)?;
        check_size("greedy outcome tree (suppliers)", inst.m(), GREEDY_TREE_MAX_SIDE)?;
        let g = GTable::new(inst)?;
        let mut eval = GreedyEvaluation { expected_revenue: 0.0, paths: 0, max_identity_error: 0.0 };
        let mut masks = vec![0u64; inst.m()];
        self.walk(inst, &g, 0, &mut masks, 1.0, 0.0, &mut eval);
        Ok(eval)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(&self, inst: &Instance, g: &GTable, t: usize, masks: &mut [u64], prob: f64, alpha: f64, eval: &mut GreedyEvaluation) {
        let m = inst.m();
        if t == self.order.len() {
            let value: f64 = masks.iter().enumerate().map(|(j, &mk)| g.g(j, mk)).sum();
            let beta = value;
            let err = (alpha + beta - 2.0 * value).abs();
            eval.max_identity_error = eval.max_identity_error.max(err);
            eval.expected_revenue += prob * value;
            eval.paths += 1;
            return;
        }
        let i = self.order[t];
        let w = inst.customer_weights(i);
        let gains: Vec<f64> = (0..m).map(|j| g.marginal(j, i, masks[j])).collect();
        let (_, offered) = greedy_assortment(w, &gains);
        let s = offered.as_slice();
        self.walk(inst, g, t + 1, masks, prob * choice_prob(w, s, None), alpha, eval);
        for &j in s {
            let before = masks[j];
            masks[j] |= 1 << i;
            self.walk(inst, g, t + 1, masks, prob * choice_prob(w, s, Some(j)), alpha + gains[j], eval);
            masks[j] = before;
        }
    }
}
