//! Turning a customer's LP marginals into a distribution over nested assortments
//! whose MNL choice probabilities reproduce those marginals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mnl::choice_prob;
use crate::subset::Subset;

/// Slack allowed on the capacity rows `x_j/u_j + Σ x ≤ 1`.
pub const ROW_TOL: f64 = 1e-9;
/// Rounding noise forgiven on the chain differences.
pub const CLAMP_TOL: f64 = 1e-12;

/// A finite distribution over assortments of suppliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssortmentDistribution {
    pub support: Vec<(Subset, f64)>,
}

impl AssortmentDistribution {
    /// Probability that an agent with `weights` picks each option, in index order.
    pub fn induced_marginals(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; weights.len()];
        for (s, p) in &self.support {
            for j in s.iter() {
                out[j] += p * choice_prob(weights, s.as_slice(), Some(j));
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// Draws an assortment by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Subset {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (s, p) in &self.support {
            acc += p;
            if u < acc {
                return s;
            }
        }
        // u landed in the rounding gap above the last cumulative sum
        &self
            .support
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .unwrap_or(&self.support[self.support.len() - 1])
            .0
    }
}

/// Nested-chain distribution for one customer with marginals `x` and weights `u`.
pub fn mnl_distribution(x: &[f64], u: &[f64]) -> Result<AssortmentDistribution> {
    let m = x.len();
    if u.len() != m {
        return Err(Error::InvalidArgument(format!("{} marginals for {} weights", m, u.len())));
    }
    let total: f64 = x.iter().sum();
    for (j, (&xj, &uj)) in x.iter().zip(u).enumerate() {
        if !xj.is_finite() || xj < -ROW_TOL {
            return Err(Error::InfeasibleMarginals(format!("x[{j}] = {xj}")));
        }
        if uj.is_nan() || uj <= 0.0 {
            return Err(Error::InfeasibleMarginals(format!("weight u[{j}] = {uj} is not positive")));
        }
        let lhs = xj.max(0.0) / uj + total;
        if lhs > 1.0 + ROW_TOL {
            return Err(Error::InfeasibleMarginals(format!("row for supplier {j}: {lhs} > 1")));
        }
    }
    let ratio: Vec<f64> = x.iter().zip(u).map(|(&xj, &uj)| xj.max(0.0) / uj).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ratio[b].total_cmp(&ratio[a]).then(a.cmp(&b)));

    let mut support = Vec::with_capacity(m + 1);
    let head = order.first().map_or(0.0, |&j| ratio[j]);
    support.push((Subset::empty(), 1.0 - (head + total)));
    let mut weight_sum = 1.0;
    for l in 0..m {
        weight_sum += u[order[l]];
        let next = if l + 1 < m { ratio[order[l + 1]] } else { 0.0 };
        support.push((Subset::new(order[..=l].to_vec()), (ratio[order[l]] - next) * weight_sum));
    }

    // The empty-set mass inherits the row slack; the chain differences are
    // nonnegative up to rounding.
    for (k, (s, p)) in support.iter_mut().enumerate() {
        let tol = if k == 0 { ROW_TOL * weight_sum } else { CLAMP_TOL };
        if *p < -tol {
            return Err(Error::NegativeProbability { value: *p, set: s.to_string() });
        }
        *p = p.max(0.0);
    }
    let total: f64 = support.iter().map(|(_, p)| p).sum();
    if total <= 0.0 {
        return Err(Error::InfeasibleMarginals("distribution has no mass".into()));
    }
    for (_, p) in support.iter_mut() {
        *p /= total;
    }
    Ok(AssortmentDistribution { support })
}

/// `max_j |induced marginal − x_j|`.
pub fn validate_marginals(dist: &AssortmentDistribution, u: &[f64], x: &[f64]) -> f64 {
    dist.induced_marginals(u)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_marginals_give_empty_assortment() {
        let d = mnl_distribution(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.support[0], (Subset::empty(), 1.0));
        assert!(d.support[1..].iter().all(|(_, p)| *p == 0.0));
    }

    #[test]
    fn single_supplier_by_hand() {
        let d = mnl_distribution(&[0.25], &[1.0]).unwrap();
        assert!((d.support[0].1 - 0.5).abs() < 1e-15);
        assert!((d.support[1].1 - 0.5).abs() < 1e-15);
        assert!((d.induced_marginals(&[1.0])[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tight_row_by_hand() {
        let third = 1.0 / 3.0;
        let d = mnl_distribution(&[third, third], &[1.0, 1.0]).unwrap();
        assert!(d.support[0].1.abs() < 1e-15);
        assert!(d.support[1].1.abs() < 1e-15);
        assert!((d.support[2].1 - 1.0).abs() < 1e-15);
        assert_eq!(d.support[2].0.as_slice(), &[0, 1]);
        assert!(validate_marginals(&d, &[1.0, 1.0], &[third, third]) < 1e-15);
    }

    #[test]
    fn chain_is_nested() {
        let d = mnl_distribution(&[0.1, 0.3, 0.05], &[0.5, 2.0, 1.0]).unwrap();
        for w in d.support.windows(2) {
            assert!(w[0].0.is_subset_of(&w[1].0));
            assert_eq!(w[0].0.len() + 1, w[1].0.len());
        }
        // x/u = (0.2, 0.15, 0.05) so supplier 0 enters first
        assert_eq!(d.support[1].0.as_slice(), &[0]);
    }

    #[test]
    fn corrupted_distribution_is_detected() {
        let u = [1.0, 2.0];
        let x = [0.2, 0.3];
        let mut d = mnl_distribution(&x, &u).unwrap();
        assert!(validate_marginals(&d, &u, &x) < 1e-12);
        d.support[1].1 += 0.05;
        d.support[0].1 -= 0.05;
        assert!(validate_marginals(&d, &u, &x) > 1e-3);
    }

    #[test]
    fn infeasible_rows_rejected() {
        assert!(matches!(mnl_distribution(&[0.6], &[1.0]), Err(Error::InfeasibleMarginals(_))));
        assert!(matches!(mnl_distribution(&[-0.1], &[1.0]), Err(Error::InfeasibleMarginals(_))));
        assert!(mnl_distribution(&[0.1], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn tie_order_does_not_matter() {
        // Equal x/u for suppliers 0 and 2; relabelling swaps the tie order.
        let (x, u) = ([0.1, 0.05, 0.2], [1.0, 1.0, 2.0]);
        let (xs, us) = ([0.2, 0.05, 0.1], [2.0, 1.0, 1.0]);
        let a = mnl_distribution(&x, &u).unwrap().induced_marginals(&u);
        let b = mnl_distribution(&xs, &us).unwrap().induced_marginals(&us);
        assert!((a[0] - b[2]).abs() < 1e-15 && (a[2] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    }
}
