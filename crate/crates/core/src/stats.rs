//! Small statistics helpers for the experiment harness and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit against the given category probabilities.
pub fn chi_square(observed: &[u64], probabilities: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probabilities.len());
    assert!(observed.len() >= 2, "need at least two categories");
    let total: u64 = observed.iter().sum();
    let statistic = observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    }
}

pub fn chi_square_uniform(observed: &[u64]) -> ChiSquare {
    let p = 1.0 / observed.len() as f64;
    chi_square(observed, &vec![p; observed.len()])
}

/// Standard deviation of a binomial frequency with success probability `p`
/// over `trials` trials.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `Pr[|Z| > z]` for a standard normal `Z`.
pub fn normal_two_sided_tail(z: f64) -> f64 {
    erfc(z / std::f64::consts::SQRT_2)
}

/// Nearest-rank percentile of already sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted<T: Clone>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1].clone())
}

/// Total-variation distance between two distributions on the same index set.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_perfect_fit() {
        let r = chi_square_uniform(&[100, 100, 100, 100]);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 3);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_known_value() {
        let r = chi_square_uniform(&[60, 40]);
        assert!((r.statistic - 4.0).abs() < 1e-12);
        let r = chi_square(&[55, 45], &[0.5, 0.5]);
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!((r.p_value - 0.31731050786291415).abs() < 1e-9);
    }

    #[test]
    fn skewed_counts_fail() {
        assert!(chi_square_uniform(&[900, 100]).p_value < 1e-10);
    }

    #[test]
    fn percentiles() {
        let v = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(percentile_sorted(&v, 0.0), Some(1));
        assert_eq!(percentile_sorted(&v, 0.01), Some(1));
        assert_eq!(percentile_sorted(&v, 0.5), Some(5));
        assert_eq!(percentile_sorted(&v, 1.0), Some(10));
        assert_eq!(percentile_sorted::<i32>(&[], 0.5), None);
    }

    #[test]
    fn tv_and_sigma() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(binomial_sigma(0.0, 10), 0.0);
        assert!((binomial_sigma(0.5, 100) - 0.05).abs() < 1e-15);
        let p = normal_two_sided_tail(3.0);
        // statrs erfc is good to about 1e-10 relative here.
        assert!((p / 0.0026997960632601866 - 1.0).abs() < 1e-9, "{p:e}");
        assert!((normal_two_sided_tail(0.0) - 1.0).abs() < 1e-15);
    }
}
