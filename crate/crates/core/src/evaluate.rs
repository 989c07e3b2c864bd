//! Monte Carlo estimation and exhaustive property checks on `g_j`.
//!
//! Every check draws its trials from per-trial generators derived from a master
//! seed, so results do not depend on how rayon schedules the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::instance::Instance;
use crate::mnl::{revenue_order, GTable};
use crate::policies::SameOrderGreedy;
use crate::subset::Subset;

/// Largest ground set the exhaustive expectations enumerate.
pub const EXHAUSTIVE_MAX: usize = 10;
/// Slack on every asserted inequality.
pub const CHECK_TOL: f64 = 1e-9;

/// Independent generator for trial `k` under `master`.
pub fn trial_rng(master: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Mean and standard error of `sample` over `trials` independent draws.
pub fn monte_carlo<F>(trials: u64, master: u64, sample: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let values: Vec<f64> = (0..trials).into_par_iter().map(|k| sample(&mut trial_rng(master, k))).collect();
    let n = trials as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if trials > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { mean, stderr, trials })
}

/// A finite distribution over subsets of a ground set `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDistribution {
    n: usize,
    support: Vec<(Subset, f64)>,
}

impl SubsetDistribution {
    pub fn new(n: usize, support: Vec<(Subset, f64)>) -> Result<Self> {
        if support.iter().any(|(s, p)| p.is_nan() || *p < 0.0 || s.max_index().is_some_and(|i| i >= n)) {
            return Err(Error::InvalidArgument("negative probability or set outside the ground set".into()));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(SubsetDistribution { n, support })
    }

    pub fn point_mass(n: usize, s: Subset) -> Result<Self> {
        Self::new(n, vec![(s, 1.0)])
    }

    /// Independent inclusion with the given probabilities.
    pub fn product(marginals: &[f64]) -> Result<Self> {
        let n = marginals.len();
        check_size("product distribution (ground set)", n, EXHAUSTIVE_MAX)?;
        let probs = mask_probabilities(marginals);
        let support = probs
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(mask, p)| (Subset::from_mask(mask as u64), p))
            .collect::<Vec<_>>();
        // Products of marginals can miss 1 by a few ulps; renormalize.
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        Self::new(n, support.into_iter().map(|(s, p)| (s, p / total)).collect())
    }

    /// Up to 8 uniformly random sets with uniform-Dirichlet weights.
    pub fn random_correlated<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let k = rng.random_range(1..=8);
        let sets: Vec<Subset> = (0..k).map(|_| Subset::from_mask(rng.random_range(0..1u64 << n))).collect();
        let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        let support = sets.into_iter().zip(draws).map(|(s, d)| (s, d / total)).collect();
        SubsetDistribution { n, support }
    }

    pub fn support(&self) -> &[(Subset, f64)] {
        &self.support
    }

    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (s, p) in &self.support {
            for i in s.iter() {
                out[i] += p;
            }
        }
        out.iter().map(|m| m.min(1.0)).collect()
    }
}

/// Probability of each mask under independent inclusion.
fn mask_probabilities(marginals: &[f64]) -> Vec<f64> {
    let mut prob = vec![1.0; 1 << marginals.len()];
    for (i, &q) in marginals.iter().enumerate() {
        for (mask, p) in prob.iter_mut().enumerate() {
            *p *= if mask >> i & 1 == 1 { q } else { 1.0 - q };
        }
    }
    prob
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub correlated: f64,
    pub independent: f64,
    /// `None` when the independent expectation is zero.
    pub ratio: Option<f64>,
    /// 2 in general, `e/(e−1)` when supplier `j` values every customer equally.
    pub bound: f64,
}

impl GapResult {
    pub fn within_bound(&self) -> bool {
        self.ratio.is_none_or(|r| r <= self.bound + CHECK_TOL)
    }
}

/// `E_D[g_j] / E_{D^ind}[g_j]` by exhaustive enumeration.
pub fn correlation_gap_check(inst: &Instance, j: usize, d: &SubsetDistribution) -> Result<GapResult> {
    check_size("correlation gap (customers)", inst.n(), EXHAUSTIVE_MAX)?;
    if d.n != inst.n() {
        return Err(Error::InvalidArgument("distribution ground set differs from the customers".into()));
    }
    let g = GTable::new(inst)?;
    let correlated: f64 = d.support.iter().map(|(s, p)| p * g.g(j, s.to_mask())).sum();
    let independent: f64 = mask_probabilities(&d.marginals()).iter().zip(g.supplier(j)).map(|(p, v)| p * v).sum();
    let uniform = (0..inst.n()).all(|i| inst.r(i, j) == inst.r(0, j));
    let e = std::f64::consts::E;
    Ok(GapResult {
        correlated,
        independent,
        ratio: (independent > 0.0).then(|| correlated / independent),
        bound: if uniform { e / (e - 1.0) } else { 2.0 },
    })
}

/// Outcome of a randomized or exhaustive property check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub checks: u64,
    pub violations: u64,
    /// Largest amount by which an inequality failed (0 when none did).
    pub worst: f64,
    /// Up to [`WITNESS_CAP`] human-readable witnesses.
    pub witnesses: Vec<String>,
}

pub const WITNESS_CAP: usize = 5;

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport { name: name.to_string(), checks: 0, violations: 0, worst: 0.0, witnesses: Vec::new() }
    }

    fn record(&mut self, excess: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if excess > CHECK_TOL {
            self.violations += 1;
            self.worst = self.worst.max(excess);
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(witness());
            }
        }
    }

    fn merge(mut self, other: CheckReport) -> Self {
        self.checks += other.checks;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        for w in other.witnesses {
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(w);
            }
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs `trial` for every index in parallel and folds the reports in index order.
fn run_trials<F>(name: &str, trials: u64, seed: u64, trial: F) -> CheckReport
where
    F: Fn(&mut ChaCha8Rng, &mut CheckReport) + Sync,
{
    let parts: Vec<CheckReport> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut report = CheckReport::new(name);
            trial(&mut trial_rng(seed, k), &mut report);
            report
        })
        .collect();
    parts.into_iter().fold(CheckReport::new(name), CheckReport::merge)
}

fn random_mask<R: Rng + ?Sized>(n: usize, rng: &mut R) -> u64 {
    rng.random_range(0..1u64 << n)
}

/// Shares of `g_j(a)` along the descending revenue order:
/// each member gets its marginal on top of the higher-revenue members.
pub fn cost_shares(g: &GTable, order: &[usize], j: usize, a: u64) -> Vec<(usize, f64)> {
    let mut prefix = 0u64;
    let mut out = Vec::new();
    for &i in order {
        if a >> i & 1 == 1 {
            let next = prefix | 1 << i;
            out.push((i, g.g(j, next) - g.g(j, prefix)));
            prefix = next;
        }
    }
    out
}

fn share_of(g: &GTable, order: &[usize], j: usize, a: u64, i: usize) -> f64 {
    cost_shares(g, order, j, a).into_iter().find(|&(k, _)| k == i).map_or(0.0, |(_, v)| v)
}

/// Cross-monotonicity and budget balance of [`cost_shares`] on random triples.
pub fn cost_sharing_check(inst: &Instance, j: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let n = inst.n();
    check_size("cost sharing (customers)", n, crate::mnl::BRUTE_FORCE_LIMIT)?;
    let g = GTable::new(inst)?;
    let order = revenue_order(inst, j);
    Ok(run_trials("cost-sharing", trials, seed, |rng, report| {
        let b = random_mask(n, rng);
        let a = b & random_mask(n, rng);
        let i = rng.random_range(0..n);
        let small = share_of(&g, &order, j, a | 1 << i, i);
        let large = share_of(&g, &order, j, b | 1 << i, i);
        report.record(large - small, || {
            format!("i={i} A={} B={}: share {small} < {large}", Subset::from_mask(a), Subset::from_mask(b))
        });
        let total: f64 = cost_shares(&g, &order, j, a).iter().map(|(_, v)| v).sum();
        report.record((total - g.g(j, a)).abs(), || {
            format!("A={}: shares sum to {total}, g = {}", Subset::from_mask(a), g.g(j, a))
        });
    }))
}

fn ranks(order: &[usize]) -> Vec<usize> {
    let mut r = vec![0; order.len()];
    for (k, &i) in order.iter().enumerate() {
        r[i] = k;
    }
    r
}

/// Mask of customers ranked strictly after every member of `b`.
fn succeeding(order: &[usize], b: u64) -> u64 {
    let rank = ranks(order);
    let last = (0..order.len()).filter(|&i| b >> i & 1 == 1).map(|i| rank[i]).max();
    order
        .iter()
        .filter(|&&i| last.is_none_or(|l| rank[i] > l))
        .fold(0u64, |acc, &i| acc | 1 << i)
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InvalidArgument(format!("order is not a permutation of 0..{n}")));
    }
    Ok(())
}

fn order_violation(g: &GTable, j: usize, a: u64, b: u64, c: u64, report: &mut CheckReport) {
    let on_b = g.g(j, b | c) - g.g(j, b);
    let on_a = g.g(j, a | c) - g.g(j, a);
    report.record(on_b - on_a, || {
        format!(
            "A={} B={} C={}: g(C|B) = {on_b} > g(C|A) = {on_a}",
            Subset::from_mask(a),
            Subset::from_mask(b),
            Subset::from_mask(c)
        )
    });
}

/// `g_j(C|B) ≤ g_j(C|A)` for random `A ⊆ B` and `C` after `B` in `order`, plus
/// sub-additivity on random pairs.
pub fn submodular_order_check(inst: &Instance, j: usize, order: &[usize], trials: u64, seed: u64) -> Result<CheckReport> {
    let n = inst.n();
    check_order(order, n)?;
    let g = GTable::new(inst)?;
    Ok(run_trials("submodular-order", trials, seed, |rng, report| {
        let b = random_mask(n, rng);
        let a = b & random_mask(n, rng);
        let c = succeeding(order, b) & random_mask(n, rng);
        order_violation(&g, j, a, b, c, report);
        let (x, y) = (random_mask(n, rng), random_mask(n, rng));
        let excess = g.g(j, x | y) - g.g(j, x) - g.g(j, y);
        report.record(excess, || format!("g({} ∪ {}) exceeds the sum", Subset::from_mask(x), Subset::from_mask(y)));
    }))
}

/// Every `(A ⊆ B, C after B)` triple; for small ground sets.
pub fn submodular_order_exhaustive(inst: &Instance, j: usize, order: &[usize]) -> Result<CheckReport> {
    let n = inst.n();
    check_order(order, n)?;
    check_size("exhaustive submodular-order check (customers)", n, EXHAUSTIVE_MAX)?;
    let g = GTable::new(inst)?;
    let mut report = CheckReport::new("submodular-order-exhaustive");
    for b in 0..1u64 << n {
        let after = succeeding(order, b);
        let mut a = b;
        loop {
            let mut c = after;
            loop {
                order_violation(&g, j, a, b, c, &mut report);
                if c == 0 {
                    break;
                }
                c = (c - 1) & after;
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(report)
}

/// Plain diminishing returns `g(i|B) ≤ g(i|A)` for every `A ⊆ B`, `i ∉ B`,
/// regardless of order. Expected to fail in general.
pub fn plain_submodularity_check(inst: &Instance, j: usize) -> Result<CheckReport> {
    let n = inst.n();
    check_size("plain submodularity check (customers)", n, EXHAUSTIVE_MAX)?;
    let g = GTable::new(inst)?;
    let mut report = CheckReport::new("plain-submodularity");
    for b in 0..1u64 << n {
        let mut a = b;
        loop {
            for i in (0..n).filter(|&i| b >> i & 1 == 0) {
                let on_a = g.marginal(j, i, a);
                let on_b = g.marginal(j, i, b);
                report.record(on_b - on_a, || {
                    format!("i={i} A={} B={}: g(i|A) = {on_a} < g(i|B) = {on_b}", Subset::from_mask(a), Subset::from_mask(b))
                });
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(report)
}

/// Both sides of the interleaved-partition bound for target `c` and backlog
/// `backlog`, walking `order`: returns `(g(C ∪ backlog), bound)`.
pub fn interleaved_bound(g: &GTable, j: usize, order: &[usize], c: u64, backlog: u64) -> (f64, f64) {
    let mut before = 0u64;
    let mut bound = g.g(j, backlog);
    for &i in order {
        let bit = 1u64 << i;
        if backlog & bit != 0 {
            before |= bit;
        } else if c & bit != 0 {
            bound += g.marginal(j, i, before);
        }
    }
    (g.g(j, c | backlog), bound)
}

/// The interleaved-partition inequality on random targets against backlogs that
/// alternate between simulated greedy runs and uniform random sets.
pub fn interleaved_partition_check(inst: &Instance, j: usize, order: &[usize], trials: u64, seed: u64) -> Result<CheckReport> {
    let n = inst.n();
    check_order(order, n)?;
    let g = GTable::new(inst)?;
    let greedy = SameOrderGreedy::forced(inst, order.to_vec())?;
    Ok(run_trials("interleaved-partition", trials, seed, |rng, report| {
        let backlog = if rng.random_bool(0.5) {
            let out = greedy.sample(inst, rng);
            out.per_supplier[j].backlog.to_mask()
        } else {
            random_mask(n, rng)
        };
        let c = random_mask(n, rng);
        let (lhs, rhs) = interleaved_bound(&g, j, order, c, backlog);
        report.record(lhs - rhs, || {
            format!("C={} backlog={}: g = {lhs} > bound {rhs}", Subset::from_mask(c), Subset::from_mask(backlog))
        });
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monte_carlo_is_deterministic() {
        let f = |rng: &mut ChaCha8Rng| rng.random::<f64>();
        let a = monte_carlo(1000, 7, f).unwrap();
        assert_eq!(a, monte_carlo(1000, 7, f).unwrap());
        assert!((a.mean - 0.5).abs() < 4.0 * a.stderr);
        let zero = monte_carlo(10, 1, |_| 0.0).unwrap();
        assert_eq!((zero.mean, zero.stderr), (0.0, 0.0));
        assert!(monte_carlo(0, 1, |_| 0.0).is_err());
    }

    #[test]
    fn point_mass_and_product_have_unit_gap() {
        let inst = Instance::non_submodular_fixture();
        let point = SubsetDistribution::point_mass(3, Subset::new(vec![0, 2])).unwrap();
        let r = correlation_gap_check(&inst, 0, &point).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
        let product = SubsetDistribution::product(&[0.3, 0.5, 0.9]).unwrap();
        let r = correlation_gap_check(&inst, 0, &product).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
        let empty = SubsetDistribution::point_mass(3, Subset::empty()).unwrap();
        assert_eq!(correlation_gap_check(&inst, 0, &empty).unwrap().ratio, None);
    }

    #[test]
    fn fixture_cost_shares() {
        let inst = Instance::non_submodular_fixture();
        let g = GTable::new(&inst).unwrap();
        let shares = cost_shares(&g, &revenue_order(&inst, 0), 0, 0b111);
        assert_eq!(shares[0], (0, 2.0));
        assert!((shares[1].1 - (7.0 / 3.0 - 2.0)).abs() < 1e-12);
        assert!((shares[2].1).abs() < 1e-12);
        assert!(cost_shares(&g, &[0, 1, 2], 0, 0).is_empty());
    }

    #[test]
    fn fixture_order_controls() {
        let inst = Instance::non_submodular_fixture();
        assert!(submodular_order_exhaustive(&inst, 0, &[0, 1, 2]).unwrap().passed());
        assert!(!submodular_order_exhaustive(&inst, 0, &[2, 1, 0]).unwrap().passed());
        let plain = plain_submodularity_check(&inst, 0).unwrap();
        assert!(!plain.passed());
        assert!(plain.witnesses.iter().any(|w| w.starts_with("i=0 A={2} B={1 2}")));
    }

    #[test]
    fn interleaved_bound_special_cases() {
        let inst = Instance::non_submodular_fixture();
        let g = GTable::new(&inst).unwrap();
        let order = [0, 1, 2];
        // target inside the backlog: bound is g(backlog)
        let (lhs, rhs) = interleaved_bound(&g, 0, &order, 0b001, 0b011);
        assert_eq!(rhs, g.g(0, 0b011));
        assert!(lhs <= rhs);
        // disjoint target: singleton marginals on top of earlier backlog members
        let (lhs, rhs) = interleaved_bound(&g, 0, &order, 0b100, 0b010);
        assert!((rhs - (g.g(0, 0b010) + g.marginal(0, 2, 0b010))).abs() < 1e-15);
        assert!(lhs <= rhs + CHECK_TOL);
    }
}
