//! Small summary statistics used by the experiment reports.

use statrs::distribution::{Beta, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    /// Asymptotic p-value with Stephens' small-sample correction.
    pub p_value: f64,
    pub n: usize,
}

pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsTest> {
    if sample.is_empty() {
        return Err(Error::Parameter(
            "KS test needs at least one observation".into(),
        ));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in KS sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let statistic = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * statistic);
    Ok(KsTest {
        statistic,
        p_value,
        n: x.len(),
    })
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean with a two-sided Student-t interval at confidence `1 - level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanInterval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
    pub n: usize,
}

impl MeanInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

pub fn mean_interval(values: &[f64], level: f64) -> Result<MeanInterval> {
    if values.is_empty() {
        return Err(Error::Parameter("mean of an empty sample".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(MeanInterval {
            mean,
            low: mean,
            high: mean,
            n,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::Numeric(e.to_string()))?
        .inverse_cdf(1.0 - level / 2.0);
    let half = t * (var / n as f64).sqrt();
    Ok(MeanInterval {
        mean,
        low: mean - half,
        high: mean + half,
        n,
    })
}

/// Exact Clopper-Pearson interval for a binomial proportion at confidence
/// `1 - level`. Stays informative when every trial succeeds or fails.
pub fn proportion_interval(successes: usize, trials: usize, level: f64) -> Result<MeanInterval> {
    if trials == 0 || successes > trials {
        return Err(Error::Parameter(format!(
            "{successes} successes out of {trials} trials"
        )));
    }
    let beta = |a: f64, b: f64, u: f64| -> Result<f64> {
        Ok(Beta::new(a, b)
            .map_err(|e| Error::Numeric(e.to_string()))?
            .inverse_cdf(u))
    };
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        beta(k, n - k + 1.0, level / 2.0)?
    };
    let high = if successes == trials {
        1.0
    } else {
        beta(k + 1.0, n - k, 1.0 - level / 2.0)?
    };
    Ok(MeanInterval {
        mean: k / n,
        low,
        high,
        n: trials,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

#[cfg(test)]
mod tests {
    #[test]
    fn clopper_pearson_edges() {
        // all successes: lower bound solves u^n = level / 2
        let ci = super::proportion_interval(200, 200, 0.05).unwrap();
        assert!((ci.low - 0.025f64.powf(1.0 / 200.0)).abs() < 1e-10);
        assert_eq!(ci.high, 1.0);
        let ci = super::proportion_interval(0, 50, 0.05).unwrap();
        assert!((ci.high - (1.0 - 0.025f64.powf(1.0 / 50.0))).abs() < 1e-10);
        let ci = super::proportion_interval(30, 100, 0.05).unwrap();
        assert!(ci.low < 0.3 && 0.3 < ci.high);
        assert!(super::proportion_interval(3, 2, 0.05).is_err());
    }

    use super::*;
    use crate::normal;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.3581) ≈ 0.05 and P(K > 1.6276) ≈ 0.01
        assert_abs_diff_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_sf(1.6276), 0.01, epsilon = 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_normal_and_rejects_shift() {
        let mut rng = crate::rng::stream(1, &[9]);
        let x: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_test(&x, normal::cdf).unwrap().p_value > 0.01);
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.3).collect();
        assert!(ks_test(&shifted, normal::cdf).unwrap().p_value < 1e-6);
    }

    #[test]
    fn ks_statistic_by_hand() {
        // uniform cdf on [0,1] with sample {0.5}: D = 0.5
        let t = ks_test(&[0.5], |v| v).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.5);
    }

    #[test]
    fn interval_and_median() {
        let m = mean_interval(&[1.0, 2.0, 3.0, 4.0], 0.05).unwrap();
        assert_abs_diff_eq!(m.mean, 2.5);
        // t_{0.975, 3} = 3.182446305284263
        let half = 3.182446305284263 * (1.6666666666666667f64 / 4.0).sqrt();
        assert_abs_diff_eq!(m.high - m.mean, half, epsilon = 1e-9);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert!(mean_interval(&[], 0.05).is_err());
    }
}
