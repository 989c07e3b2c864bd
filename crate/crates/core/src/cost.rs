//! Assortment optimization with per-customer fixed costs of arbitrary sign.
//!
//! This is the separation problem of the dual LP. Any implementation of
//! [`SubDualOracle`] returning a set within a factor `(1 − δ)` of the optimum
//! can drive the ellipsoid solver.

use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::instance::Instance;
use crate::mnl::{expected_revenue, BRUTE_FORCE_LIMIT};
use crate::subset::{prefer_smaller, Subset};

/// Per-pair fixed costs `gamma[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostVector(Vec<Vec<f64>>);

impl CostVector {
    pub fn zeros(n: usize, m: usize) -> Self {
        CostVector(vec![vec![0.0; m]; n])
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("cost vector has non-finite entries".into()));
        }
        Ok(CostVector(rows))
    }

    /// Customer-side costs for supplier `j` all equal to `value`.
    pub fn constant(n: usize, m: usize, value: f64) -> Self {
        CostVector(vec![vec![value; m]; n])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[i][j] = value;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }
}

/// `R_j(c) − Σ_{i∈c} γ_ij`.
pub fn rev_cost(inst: &Instance, j: usize, c: &[usize], gamma: &CostVector) -> f64 {
    expected_revenue(inst, j, c) - c.iter().map(|&i| gamma.get(i, j)).sum::<f64>()
}

/// Every subset of customers with its revenue-with-cost, in mask order.
fn all_values(inst: &Instance, j: usize, gamma: &CostVector) -> Result<Vec<f64>> {
    let n = inst.n();
    check_size("sub-dual enumeration (customers)", n, BRUTE_FORCE_LIMIT)?;
    let mut buf = Vec::with_capacity(n);
    Ok((0..1u64 << n)
        .map(|mask| {
            buf.clear();
            buf.extend((0..n).filter(|&i| mask >> i & 1 == 1));
            rev_cost(inst, j, &buf, gamma)
        })
        .collect())
}

/// Returns the mask that comes first under the smaller-then-lexicographic rule
/// among those accepted by `keep`.
fn first_preferred(values: &[f64], keep: impl Fn(f64) -> bool) -> u64 {
    let mut best: Option<(u64, Vec<usize>)> = None;
    for (mask, &v) in values.iter().enumerate() {
        if !keep(v) {
            continue;
        }
        let items = Subset::from_mask(mask as u64);
        match &best {
            Some((_, cur)) if !prefer_smaller(items.as_slice(), cur) => {}
            _ => best = Some((mask as u64, items.as_slice().to_vec())),
        }
    }
    best.map_or(0, |(mask, _)| mask)
}

/// Exact `max_C Rev-Cost_j(C, γ)` by enumeration. Ties go to smaller sets, then
/// lexicographic order.
pub fn sub_dual_exact(inst: &Instance, j: usize, gamma: &CostVector) -> Result<(f64, Subset)> {
    let values = all_values(inst, j, gamma)?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mask = first_preferred(&values, |v| v == top);
    Ok((top, Subset::from_mask(mask)))
}

/// Answer of a separation oracle call.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnswer {
    pub value: f64,
    pub set: Subset,
    /// Guaranteed approximation slack; `None` when the oracle gives no guarantee.
    pub delta: Option<f64>,
}

/// A `(1 − δ)`-approximate solver for the sub-dual problem.
pub trait SubDualOracle: Sync {
    fn solve(&self, inst: &Instance, j: usize, gamma: &CostVector) -> Result<OracleAnswer>;

    /// The `δ` this oracle guarantees, if any.
    fn delta(&self) -> Option<f64>;
}

/// Built-in oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OracleConfig {
    /// Exhaustive enumeration, `δ = 0`.
    #[default]
    Exact,
    /// Returns the preferred set among those reaching `(1 − δ)` of the optimum.
    Approximate { delta: f64 },
    /// Best singleton or the empty set; no guarantee. For robustness tests only.
    BestSingleton,
}

impl OracleConfig {
    pub fn with_delta(delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(if delta == 0.0 {
            OracleConfig::Exact
        } else {
            OracleConfig::Approximate { delta }
        })
    }
}

impl SubDualOracle for OracleConfig {
    fn solve(&self, inst: &Instance, j: usize, gamma: &CostVector) -> Result<OracleAnswer> {
        match *self {
            OracleConfig::Exact => {
                let (value, set) = sub_dual_exact(inst, j, gamma)?;
                Ok(OracleAnswer { value, set, delta: Some(0.0) })
            }
            OracleConfig::Approximate { delta } => {
                let values = all_values(inst, j, gamma)?;
                let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let target = (1.0 - delta) * top;
                let mask = first_preferred(&values, |v| v >= target);
                Ok(OracleAnswer {
                    value: values[mask as usize],
                    set: Subset::from_mask(mask),
                    delta: Some(delta),
                })
            }
            OracleConfig::BestSingleton => {
                let mut best = (0.0, Subset::empty());
                for i in 0..inst.n() {
                    let v = rev_cost(inst, j, &[i], gamma);
                    if v > best.0 {
                        best = (v, Subset::new(vec![i]));
                    }
                }
                Ok(OracleAnswer { value: best.0, set: best.1, delta: None })
            }
        }
    }

    fn delta(&self) -> Option<f64> {
        match *self {
            OracleConfig::Exact => Some(0.0),
            OracleConfig::Approximate { delta } => Some(delta),
            OracleConfig::BestSingleton => None,
        }
    }
}

/// Runs `oracle` and checks the answer is internally consistent.
pub fn oracle_call(
    oracle: &dyn SubDualOracle,
    inst: &Instance,
    j: usize,
    gamma: &CostVector,
) -> Result<OracleAnswer> {
    let answer = oracle.solve(inst, j, gamma)?;
    if answer.set.max_index().is_some_and(|i| i >= inst.n()) {
        return Err(Error::Oracle(format!("returned set {} outside the customer range", answer.set)));
    }
    if !answer.value.is_finite() {
        return Err(Error::Oracle(format!("non-finite value {}", answer.value)));
    }
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnl::optimal_revenue;

    const TOL: f64 = 1e-9;

    #[test]
    fn rev_cost_basics() {
        let inst = Instance::non_submodular_fixture();
        let zero = CostVector::zeros(3, 1);
        assert_eq!(rev_cost(&inst, 0, &[0, 2], &zero), expected_revenue(&inst, 0, &[0, 2]));
        assert_eq!(rev_cost(&inst, 0, &[], &CostVector::constant(3, 1, 5.0)), 0.0);
        let tenth = CostVector::constant(3, 1, 0.1);
        assert!((rev_cost(&inst, 0, &[0, 2], &tenth) - 1.8).abs() < TOL);
    }

    #[test]
    fn prohibitive_costs_give_empty_set() {
        let inst = Instance::non_submodular_fixture();
        let (v, s) = sub_dual_exact(&inst, 0, &CostVector::constant(3, 1, 4.0)).unwrap();
        assert_eq!(v, 0.0);
        assert!(s.is_empty());
    }

    #[test]
    fn zero_costs_reduce_to_optimal_revenue() {
        let inst = Instance::non_submodular_fixture();
        let (v, s) = sub_dual_exact(&inst, 0, &CostVector::zeros(3, 1)).unwrap();
        assert!((v - optimal_revenue(&inst, 0, &[0, 1, 2]).0).abs() < TOL);
        assert_eq!(s.as_slice(), &[0, 1]);
    }

    #[test]
    fn fixture_with_costs_by_hand() {
        // values over all 8 subsets with γ = 0.1:
        // {0}:1.9 {1}:1.4 {2}:1.4 {0,1}:7/3-0.2 {0,2}:1.8 {1,2}:1.6 {0,1,2}:13/6-0.3
        let inst = Instance::non_submodular_fixture();
        let (v, s) = sub_dual_exact(&inst, 0, &CostVector::constant(3, 1, 0.1)).unwrap();
        assert!((v - (7.0 / 3.0 - 0.2)).abs() < TOL);
        assert_eq!(s.as_slice(), &[0, 1]);
    }

    #[test]
    fn oracle_configs() {
        let inst = Instance::non_submodular_fixture();
        let gamma = CostVector::constant(3, 1, 0.1);
        let exact = oracle_call(&OracleConfig::Exact, &inst, 0, &gamma).unwrap();
        let direct = sub_dual_exact(&inst, 0, &gamma).unwrap();
        assert_eq!((exact.value, exact.set.clone(), exact.delta), (direct.0, direct.1, Some(0.0)));

        let approx = oracle_call(&OracleConfig::Approximate { delta: 0.2 }, &inst, 0, &gamma).unwrap();
        assert!(approx.value >= 0.8 * exact.value);
        assert_eq!(approx.set.as_slice(), &[0]);

        let weak = oracle_call(&OracleConfig::BestSingleton, &inst, 0, &gamma).unwrap();
        assert!(weak.value >= 0.0);
        assert_eq!(weak.delta, None);
        assert!((weak.value - 1.9).abs() < TOL);
    }

    #[test]
    fn delta_validation() {
        assert_eq!(OracleConfig::with_delta(0.0).unwrap(), OracleConfig::Exact);
        assert!(OracleConfig::with_delta(1.0).is_err());
        assert!(OracleConfig::with_delta(-0.1).is_err());
    }
}
