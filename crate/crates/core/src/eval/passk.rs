//! Unbiased pass@k estimator.

use super::EvalError;

/// Probability that at least one of `k` samples drawn without replacement
/// from `n` (of which `c` are correct) is correct: `1 - C(n-c, k) / C(n, k)`.
///
/// Evaluated as `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which never forms the
/// binomials and stays exact to a few ulps for any `n`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    if c > n || k == 0 || k > n {
        return Err(EvalError::Domain { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let k = k as f64;
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k / i as f64).product();
    Ok(1.0 - miss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        assert!((pass_at_k(10, 3, 1).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn five_choose_two() {
        // 10 pairs, 3 of which contain no correct sample
        assert!((pass_at_k(5, 2, 2).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn boundaries() {
        for n in 1..=20 {
            for k in 1..=n {
                assert_eq!(pass_at_k(n, n, k).unwrap(), 1.0);
                assert_eq!(pass_at_k(n, 0, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(pass_at_k(5, 6, 1).is_err());
        assert!(pass_at_k(5, 1, 0).is_err());
        assert!(pass_at_k(5, 1, 6).is_err());
    }

    #[test]
    fn large_n_does_not_overflow() {
        let v = pass_at_k(10_000, 1, 1).unwrap();
        assert!((v - 1e-4).abs() < 1e-15);
    }
}
