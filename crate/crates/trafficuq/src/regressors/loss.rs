use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training loss for gradient boosting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossSpec {
    Squared,
    /// Pinball (quantile) loss at level τ ∈ (0, 1).
    Pinball { tau: f64 },
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Pinball { tau } = self {
            if !(*tau > 0.0 && *tau < 1.0) {
                return Err(Error::Config(format!("tau must be in (0, 1), got {tau}")));
            }
        }
        Ok(())
    }
}

/// Pinball loss: `max(τ(y−ŷ), (τ−1)(y−ŷ))`.
pub fn pinball_loss(tau: f64, y: f64, y_hat: f64) -> f64 {
    let diff = y - y_hat;
    (tau * diff).max((tau - 1.0) * diff)
}

/// Type-1 empirical quantile of an ascending-sorted slice: the lowest value
/// whose cumulative fraction reaches `q`.
pub fn quantile_type1(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    let k = (q * n as f64).ceil() as usize;
    sorted[k.max(1).min(n) - 1]
}

/// Weighted type-1 quantile: the lowest value whose cumulative weight
/// reaches `q` of the total, ties broken toward the lower index.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    assert_eq!(values.len(), weights.len());
    assert!(!values.is_empty());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let total: f64 = weights.iter().sum();
    let target = q * total;
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= target - 1e-12 * total.abs() {
            return values[i];
        }
    }
    values[*order.last().unwrap()]
}

/// Unweighted empirical τ-quantile of an unsorted slice (type-1).
pub fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_type1(&sorted, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn pinball_matches_worked_examples() {
        assert!((pinball_loss(0.9, 10.0, 8.0) - 1.8).abs() < 1e-12);
        assert!((pinball_loss(0.9, 8.0, 10.0) - 0.2).abs() < 1e-12);
        for tau in [0.05, 0.5, 0.95] {
            assert_eq!(pinball_loss(tau, 3.0, 3.0), 0.0);
            assert!(pinball_loss(tau, 1.0, 4.0) >= 0.0);
        }
    }

    #[test]
    fn tau_outside_unit_interval_is_rejected() {
        assert!(LossSpec::Pinball { tau: 0.0 }.validate().is_err());
        assert!(LossSpec::Pinball { tau: 1.0 }.validate().is_err());
        assert!(LossSpec::Pinball { tau: 0.5 }.validate().is_ok());
        assert!(LossSpec::Squared.validate().is_ok());
    }

    #[test]
    fn type1_quantile_of_1_to_100() {
        let sorted: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_type1(&sorted, 0.05), 5.0);
        assert_eq!(quantile_type1(&sorted, 0.95), 95.0);
        assert_eq!(quantile_type1(&sorted, 0.0), 1.0);
        assert_eq!(quantile_type1(&sorted, 1.0), 100.0);
    }

    #[test]
    fn type1_quantile_matches_brute_force() {
        let mut rng = crate::seeding::rng_from_seed(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let q: f64 = rng.gen_range(0.01..0.99);
            // Brute force: smallest value v with |{x ≤ v}|/n ≥ q.
            let expect = *values
                .iter()
                .find(|v| {
                    values.iter().filter(|x| *x <= *v).count() as f64 / n as f64 >= q - 1e-12
                })
                .unwrap();
            assert_eq!(quantile_type1(&values, q), expect);
        }
    }

    #[test]
    fn equal_weights_reduce_to_the_unweighted_quantile() {
        let mut rng = crate::seeding::rng_from_seed(13);
        for _ in 0..30 {
            let n = rng.gen_range(1..30);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let weights = vec![1.0; n];
            let q: f64 = rng.gen_range(0.01..0.99);
            assert_eq!(
                weighted_quantile(&values, &weights, q),
                empirical_quantile(&values, q)
            );
        }
    }

    #[test]
    fn weighted_median_follows_the_mass() {
        // Weight 9 on value 2 vs weight 1 on value 10: median is 2.
        assert_eq!(weighted_quantile(&[10.0, 2.0], &[1.0, 9.0], 0.5), 2.0);
        assert_eq!(weighted_quantile(&[10.0, 2.0], &[9.0, 1.0], 0.5), 10.0);
    }

    #[test]
    fn empirical_quantile_minimizes_pinball_over_constants() {
        let mut rng = crate::seeding::rng_from_seed(17);
        for _ in 0..20 {
            let n = rng.gen_range(3..25);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let tau: f64 = rng.gen_range(0.05..0.95);
            let qhat = empirical_quantile(&values, tau);
            let loss = |c: f64| values.iter().map(|y| pinball_loss(tau, *y, c)).sum::<f64>();
            let best = loss(qhat);
            // Brute-force scan over all sample values as candidate constants.
            for candidate in &values {
                assert!(best <= loss(*candidate) + 1e-9);
            }
        }
    }
}
