//! Closed-form distortion bounds and rate-distortion quantities.
//!
//! All logarithms are base 2 and all rates are in bits. Sizes may exceed
//! what fits in an integer, so parameters carry log2(M) and keep the exact
//! count only when representable.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Largest log2(M) for which the atom count is materialized exactly.
const EXACT_LOG2_M: f64 = 62.0;

/// Parameter triple (n, M, k) for the bound evaluators; requires
/// 1 <= k < n and M >= k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    n: usize,
    k: usize,
    log2_m: f64,
    m_exact: Option<u64>,
}

impl BoundParams {
    /// Parameters with an explicit dictionary size.
    pub fn with_size(n: usize, m: u64, k: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParam("dictionary size must be positive".into()));
        }
        Self::validate(n, k, (m as f64).log2(), Some(m))
    }

    /// Parameters with the size given as a rate: M = round(2^(n * rate)),
    /// kept in log form when the count exceeds integer range.
    pub fn with_rate(n: usize, rate: f64, k: usize) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidParam(format!(
                "rate must be finite and nonnegative, got {rate}"
            )));
        }
        let log2_m = n as f64 * rate;
        if log2_m <= EXACT_LOG2_M {
            let m = log2_m.exp2().round().max(1.0) as u64;
            Self::validate(n, k, (m as f64).log2(), Some(m))
        } else {
            Self::validate(n, k, log2_m, None)
        }
    }

    fn validate(n: usize, k: usize, log2_m: f64, m_exact: Option<u64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("sparsity must be at least 1".into()));
        }
        if k >= n {
            return Err(Error::InvalidParam(format!(
                "sparsity {k} must be below dimension {n}"
            )));
        }
        let m_below_k = match m_exact {
            Some(m) => m < k as u64,
            None => log2_m < (k as f64).log2(),
        };
        if m_below_k {
            return Err(Error::InvalidParam(format!(
                "dictionary size 2^{log2_m:.3} is below sparsity {k}"
            )));
        }
        Ok(BoundParams { n, k, log2_m, m_exact })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// log2 of the dictionary size.
    pub fn log2_m(&self) -> f64 {
        self.log2_m
    }

    /// Exact dictionary size when it fits in integer range.
    pub fn size(&self) -> Option<u64> {
        self.m_exact
    }

}

/// Every bound evaluated at one parameter triple. The lower bound and its
/// exponent are asymptotic statements evaluated verbatim at finite n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub thm1_rhs: f64,
    pub thm2_lower: f64,
    pub c_n: f64,
    pub log2_binom: f64,
    pub exponent_bounded_k: f64,
}

/// Achievability value M^(-2k/n): the worst-case distortion decay rate.
pub fn theorem1_rhs(p: &BoundParams) -> f64 {
    (-2.0 * p.k as f64 * p.log2_m / p.n as f64).exp2()
}

/// The vanishing correction log2(n/(n-k)) + (k/(n-k)) * log2(n/k).
pub fn c_n(p: &BoundParams) -> f64 {
    let n = p.n as f64;
    let k = p.k as f64;
    (n / (n - k)).log2() + (k / (n - k)) * (n / k).log2()
}

/// log2 of the binomial coefficient C(m, k); exact integer arithmetic for
/// k <= 2, log-gamma otherwise.
pub fn log2_binom(m: u64, k: u64) -> Result<f64> {
    if k > m {
        return Err(Error::InvalidParam(format!(
            "binomial requires k <= m, got k={k}, m={m}"
        )));
    }
    let k = k.min(m - k);
    Ok(match k {
        0 => 0.0,
        1 => (m as f64).log2(),
        2 => {
            let pairs = m as u128 * (m as u128 - 1) / 2;
            (pairs as f64).log2()
        }
        _ => {
            let m = m as f64;
            let k = k as f64;
            (ln_gamma(m + 1.0) - ln_gamma(k + 1.0) - ln_gamma(m - k + 1.0)) / LN_2
        }
    })
}

fn log2_binom_for(p: &BoundParams) -> Result<f64> {
    match p.m_exact {
        Some(m) => log2_binom(m, p.k as u64),
        // M - i is indistinguishable from M at this magnitude, so the
        // falling product collapses to k * log2(M) minus log2(k!).
        None => Ok(p.k as f64 * p.log2_m - ln_gamma(p.k as f64 + 1.0) / LN_2),
    }
}

/// log2 of [`theorem2_lower`], computed term by term in the log domain.
pub fn theorem2_lower_log2(p: &BoundParams) -> Result<f64> {
    let n = p.n as f64;
    let k = p.k as f64;
    let binom = log2_binom_for(p)?;
    Ok(-2.0 * binom / (n - k) + ((n - k) / n).log2() + (k / (n - k)) * (k / n).log2())
}

/// Average-distortion lower bound
/// 2^(-2 log2 C(M,k) / (n-k)) * ((n-k)/n) * (k/n)^(k/(n-k)),
/// an asymptotic expression evaluated verbatim at finite n.
pub fn theorem2_lower(p: &BoundParams) -> Result<f64> {
    Ok(theorem2_lower_log2(p)?.exp2())
}

/// Rate of a unit-variance Gaussian source at distortion D: (1/2) log2(1/D).
pub fn gaussian_rd(d: f64) -> Result<f64> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(format!("distortion must lie in (0, 1], got {d}")));
    }
    Ok(0.5 * (1.0 / d).log2())
}

/// Distortion of a unit-variance Gaussian source at rate R: 2^(-2R).
pub fn gaussian_dr(r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!("rate must be finite and nonnegative, got {r}")));
    }
    Ok((-2.0 * r).exp2())
}

/// Shannon lower bound on the rate (in bits) of describing an n-dimensional
/// ball-uniform source at distortion D:
/// (n/2) log2(1/D) - log2(pi n) - 1/(6n).
pub fn shannon_lb_rate(n: usize, d: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParam("dimension must be positive".into()));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(format!("distortion must lie in (0, 1], got {d}")));
    }
    let n = n as f64;
    Ok(n / 2.0 * (1.0 / d).log2() - (std::f64::consts::PI * n).log2() - 1.0 / (6.0 * n))
}

/// Evaluates every bound at one parameter triple.
pub fn evaluate(p: &BoundParams) -> Result<BoundReport> {
    Ok(BoundReport {
        thm1_rhs: theorem1_rhs(p),
        thm2_lower: theorem2_lower(p)?,
        c_n: c_n(p),
        log2_binom: log2_binom_for(p)?,
        exponent_bounded_k: -2.0 * p.k as f64 * p.log2_m / (p.n as f64 - p.k as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, m: u64, k: usize) -> BoundParams {
        BoundParams::with_size(n, m, k).unwrap()
    }

    #[test]
    fn achievability_value_at_powers_of_two() {
        assert_eq!(theorem1_rhs(&params(20, 1024, 1)), 0.5);
        assert_eq!(theorem1_rhs(&params(20, 1024, 2)), 0.25);
        let v3 = theorem1_rhs(&params(20, 1024, 3));
        assert!((v3.log2() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn correction_term_vanishes_for_fixed_sparsity() {
        let c = c_n(&params(1_000_000, 2_000_000, 2));
        assert!(c > 0.0);
        assert!(c < 0.002);
    }

    #[test]
    fn correction_term_matches_independent_evaluation() {
        let c = c_n(&params(100, 1024, 10));
        let oracle = (100.0f64 / 90.0).ln() / LN_2 + (10.0 / 90.0) * (10.0f64).ln() / LN_2;
        assert!((c - oracle).abs() < 1e-12);
        assert!((c - 0.5211).abs() < 2e-4);
    }

    #[test]
    fn correction_term_at_half_sparsity_is_two() {
        let c = c_n(&params(10, 1024, 5));
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_binomial_small_cases() {
        assert!((log2_binom(4, 2).unwrap() - 6.0f64.log2()).abs() < 1e-12);
        assert_eq!(log2_binom(17, 0).unwrap(), 0.0);
        assert_eq!(log2_binom(17, 17).unwrap(), 0.0);
        assert!((log2_binom(65536, 1).unwrap() - 16.0).abs() < 1e-12);
        assert!(log2_binom(3, 4).is_err());
    }

    #[test]
    fn log_binomial_matches_exact_integer_oracle() {
        let exact: u128 = 4096 * 4095 * 4094 / 6;
        let oracle = (exact as f64).log2();
        assert!((log2_binom(4096, 3).unwrap() - oracle).abs() < 1e-10);
        let exact2: u128 = 4096 * 4095 / 2;
        assert!((log2_binom(4096, 2).unwrap() - (exact2 as f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_matches_term_by_term_recomputation() {
        let p = params(64, 4096, 2);
        let value = theorem2_lower(&p).unwrap();
        let binom = ((4096.0f64).ln() + (4095.0f64).ln() - 2.0f64.ln()) / LN_2;
        let oracle = -2.0 * binom / 62.0 + (62.0f64 / 64.0).ln() / LN_2
            + (2.0 / 62.0) * (2.0f64 / 64.0).ln() / LN_2;
        assert!((value.log2() - oracle).abs() < 1e-10);
        assert!(value > 0.0);
        assert!(value <= 1.0);
    }

    #[test]
    fn lower_bound_approaches_rate_exponent() {
        let p = BoundParams::with_rate(512, 0.25, 1).unwrap();
        assert!(p.size().is_none());
        let log_value = theorem2_lower_log2(&p).unwrap();
        assert!((log_value + 0.5).abs() <= 0.05);
        let thm1 = theorem1_rhs(&p);
        assert!((thm1.log2() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_never_exceeds_one() {
        for n in (2..=128).step_by(2) {
            let mut m = (n as u64).next_power_of_two();
            while m <= 1 << 16 {
                for k in 1..n {
                    let p = params(n, m, k);
                    let v = theorem2_lower(&p).unwrap();
                    assert!(v <= 1.0 + 1e-12, "n={n} m={m} k={k} gave {v}");
                    assert!(v.is_finite() && v >= 0.0);
                    assert!(theorem2_lower_log2(&p).unwrap().is_finite());
                }
                m *= 2;
            }
        }
    }

    #[test]
    fn huge_size_log_binomial_is_consistent_at_sparsity_one() {
        let huge = BoundParams::with_rate(512, 0.25, 1).unwrap();
        let report = evaluate(&huge).unwrap();
        assert!((report.log2_binom - 128.0).abs() < 1e-9);
        assert!((report.exponent_bounded_k + 2.0 * 128.0 / 511.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_pair_is_mutually_inverse() {
        assert!((gaussian_rd(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_dr(0.0).unwrap(), 1.0);
        for d in [0.9, 0.5, 0.01] {
            let r = gaussian_rd(d).unwrap();
            assert!((gaussian_dr(r).unwrap() - d).abs() < 1e-12);
        }
        assert!(gaussian_rd(0.0).is_err());
        assert!(gaussian_rd(1.2).is_err());
        assert!(gaussian_dr(-1.0).is_err());
    }

    #[test]
    fn shannon_bound_examples() {
        let n = 100;
        let at_one = shannon_lb_rate(n, 1.0).unwrap();
        let oracle = -(std::f64::consts::PI * 100.0).log2() - 1.0 / 600.0;
        assert!((at_one - oracle).abs() < 1e-12);
        assert!(at_one < 0.0);
        let at_quarter = shannon_lb_rate(n, 0.25).unwrap();
        assert!((at_quarter - (100.0 - (100.0 * std::f64::consts::PI).log2() - 1.0 / 600.0)).abs() < 1e-12);
        assert!((at_quarter - 91.70).abs() < 0.01);
    }

    #[test]
    fn shannon_bound_grows_linearly_in_dimension() {
        let d = 0.25f64;
        let slope = 0.5 * (1.0 / d).log2();
        let big = 1_000_000;
        let diff = shannon_lb_rate(big + 1, d).unwrap() - shannon_lb_rate(big, d).unwrap();
        assert!((diff - slope).abs() < 1e-5);
    }

    #[test]
    fn parameter_validation() {
        assert!(BoundParams::with_size(10, 100, 0).is_err());
        assert!(BoundParams::with_size(10, 100, 10).is_err());
        assert!(BoundParams::with_size(10, 0, 1).is_err());
        assert!(BoundParams::with_size(10, 2, 3).is_err());
        assert!(BoundParams::with_rate(10, -0.1, 1).is_err());
        assert!(theorem2_lower(&params(10, 5, 1)).is_ok());
        assert!(theorem2_lower(&params(10, 10, 1)).is_ok());
    }

    #[test]
    fn rate_parameterization_matches_explicit_size() {
        let by_rate = BoundParams::with_rate(32, 0.25, 2).unwrap();
        let by_size = params(32, 256, 2);
        assert_eq!(by_rate.size(), Some(256));
        assert_eq!(theorem1_rhs(&by_rate), theorem1_rhs(&by_size));
        assert_eq!(
            theorem2_lower(&by_rate).unwrap(),
            theorem2_lower(&by_size).unwrap()
        );
    }
}
