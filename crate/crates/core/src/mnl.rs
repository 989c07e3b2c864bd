//! MNL choice probabilities and the supplier-side revenue functions.
//!
//! `expected_revenue` is the revenue of offering exactly a set of customers to
//! a supplier; `optimal_revenue` maximizes it over subsets. The latter is
//! computed by scanning revenue-ordered prefixes, which is exact under MNL.

use crate::error::{check_size, Error, Result};
use crate::instance::Instance;
use crate::subset::{prefer_smaller, Subset};

/// Largest set the exhaustive oracles will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Probability that an agent with `weights` picks `k` (or the outside option when
/// `k` is `None`) from assortment `s`.
pub fn choice_prob(weights: &[f64], s: &[usize], k: Option<usize>) -> f64 {
    let denom = 1.0 + s.iter().map(|&l| weights[l]).sum::<f64>();
    match k {
        None => 1.0 / denom,
        Some(k) if s.contains(&k) => weights[k] / denom,
        Some(_) => 0.0,
    }
}

/// Expected revenue from offering exactly `c` to supplier `j`.
pub fn expected_revenue(inst: &Instance, j: usize, c: &[usize]) -> f64 {
    let (num, den) = c.iter().fold((0.0, 1.0), |(num, den), &i| {
        let w = inst.w(j, i);
        (num + inst.r(i, j) * w, den + w)
    });
    num / den
}

/// Customers sorted by descending revenue for supplier `j`, ties by index.
pub fn revenue_order(inst: &Instance, j: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| inst.r(b, j).total_cmp(&inst.r(a, j)).then(a.cmp(&b)));
    order
}

/// Best prefix of `items` (already in the scan order) under an MNL with outside
/// weight 1. Each item is `(revenue, weight)`. Returns the value and the
/// length of the shortest maximizing prefix; the empty prefix scores 0.
pub fn best_prefix(items: impl IntoIterator<Item = (f64, f64)>) -> (f64, usize) {
    let (mut num, mut den) = (0.0, 1.0);
    let (mut best, mut best_len) = (0.0, 0);
    for (k, (rev, weight)) in items.into_iter().enumerate() {
        num += rev * weight;
        den += weight;
        let value = num / den;
        if value > best {
            best = value;
            best_len = k + 1;
        }
    }
    (best, best_len)
}

/// `g_j(c)`: the best expected revenue over subsets of `c`, with a maximizer.
pub fn optimal_revenue(inst: &Instance, j: usize, c: &[usize]) -> (f64, Subset) {
    let mut sorted = c.to_vec();
    sorted.sort_by(|&a, &b| inst.r(b, j).total_cmp(&inst.r(a, j)).then(a.cmp(&b)));
    sorted.dedup();
    let (value, len) = best_prefix(sorted.iter().map(|&i| (inst.r(i, j), inst.w(j, i))));
    (value, Subset::new(sorted[..len].to_vec()))
}

/// `g_j` on a bitmask, scanning a precomputed [`revenue_order`]. Produces the
/// same floating-point value as [`optimal_revenue`].
pub fn optimal_revenue_mask(inst: &Instance, j: usize, order: &[usize], mask: u64) -> f64 {
    best_prefix(
        order
            .iter()
            .filter(|&&i| mask >> i & 1 == 1)
            .map(|&i| (inst.r(i, j), inst.w(j, i))),
    )
    .0
}

/// Exhaustive `max_{C' ⊆ c} R_j(C')`; ties go to the smaller, then
/// lexicographically first, set.
pub fn optimal_revenue_bruteforce(inst: &Instance, j: usize, c: &[usize]) -> Result<(f64, Subset)> {
    let items = Subset::new(c.to_vec());
    check_size("optimal_revenue_bruteforce", items.len(), BRUTE_FORCE_LIMIT)?;
    let items = items.as_slice();
    let mut best = (0.0, Vec::new());
    for mask in 1u64..(1u64 << items.len()) {
        let pick: Vec<usize> = (0..items.len()).filter(|&k| mask >> k & 1 == 1).map(|k| items[k]).collect();
        let value = expected_revenue(inst, j, &pick);
        if value > best.0 || (value == best.0 && prefer_smaller(&pick, &best.1)) {
            best = (value, pick);
        }
    }
    Ok((best.0, Subset::new(best.1)))
}

/// `g_j(i | c) = g_j(c ∪ {i}) − g_j(c)` for `i ∉ c`.
pub fn g_marginal(inst: &Instance, j: usize, i: usize, c: &[usize]) -> Result<f64> {
    if c.contains(&i) {
        return Err(Error::AlreadyInSet(i));
    }
    let mut with = c.to_vec();
    with.push(i);
    Ok(optimal_revenue(inst, j, &with).0 - optimal_revenue(inst, j, c).0)
}

/// `g_j` tabulated on every customer subset, indexed `[j][mask]`.
#[derive(Debug, Clone)]
pub struct GTable {
    n: usize,
    values: Vec<Vec<f64>>,
}

impl GTable {
    pub fn new(inst: &Instance) -> Result<Self> {
        check_size("optimal-revenue table (customers)", inst.n(), BRUTE_FORCE_LIMIT)?;
        let values = (0..inst.m())
            .map(|j| {
                let order = revenue_order(inst, j);
                (0..1u64 << inst.n())
                    .map(|mask| optimal_revenue_mask(inst, j, &order, mask))
                    .collect()
            })
            .collect();
        Ok(GTable { n: inst.n(), values })
    }

    pub fn g(&self, j: usize, mask: u64) -> f64 {
        self.values[j][mask as usize]
    }

    /// Marginal of adding customer `i` to `mask`.
    pub fn marginal(&self, j: usize, i: usize, mask: u64) -> f64 {
        self.g(j, mask | 1 << i) - self.g(j, mask)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn supplier(&self, j: usize) -> &[f64] {
        &self.values[j]
    }
}
