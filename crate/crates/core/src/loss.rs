//! Convex, non-increasing margin losses `V(u)` and their scalar proximal map
//!
//! ```text
//! û = argmin_u  V(u) + (u - m)² / (2q)
//! ```
//!
//! which drives the scalar half of the fixed-point equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    /// `V(u) = log(1 + e^{-u})`
    Logistic,
    /// `V(u) = (1 - u)_+`
    Hinge,
}

/// Arguments of the proximal map: the shift `m` and the scale `q > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxQuery {
    pub m: f64,
    pub q: f64,
}

impl ProxQuery {
    pub fn new(m: f64, q: f64) -> Self {
        Self { m, q }
    }
}

const PROX_MAX_ITERS: usize = 200;

impl LossModel {
    pub fn name(self) -> &'static str {
        match self {
            LossModel::Logistic => "logistic",
            LossModel::Hinge => "hinge",
        }
    }

    pub fn value(self, u: f64) -> f64 {
        match self {
            LossModel::Logistic => softplus(-u),
            LossModel::Hinge => (1.0 - u).max(0.0),
        }
    }

    /// `V'(u)`; for the hinge the kink at `u = 1` takes the subgradient 0.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            LossModel::Logistic => -logistic_tail(u),
            LossModel::Hinge => {
                if u < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `V''(u)`; zero almost everywhere for the hinge.
    pub fn second_derivative(self, u: f64) -> f64 {
        match self {
            LossModel::Logistic => {
                let s = logistic_tail(u);
                s * (1.0 - s)
            }
            LossModel::Hinge => 0.0,
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, LossModel::Logistic)
    }

    /// Unique minimizer of `V(u) + (u - m)²/(2q)`.
    pub fn prox(self, query: ProxQuery) -> Result<f64> {
        let ProxQuery { m, q } = query;
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Parameter(format!(
                "prox scale q must be positive and finite, got {q}"
            )));
        }
        if !m.is_finite() {
            return Err(Error::Parameter(format!(
                "prox shift m must be finite, got {m}"
            )));
        }
        match self {
            LossModel::Hinge => Ok(if m > 1.0 {
                m
            } else if m >= 1.0 - q {
                1.0
            } else {
                m + q
            }),
            LossModel::Logistic => logistic_prox(m, q),
        }
    }
}

impl std::str::FromStr for LossModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(Self::Logistic),
            "hinge" => Ok(Self::Hinge),
            other => Err(Error::Parameter(format!("unknown loss `{other}`"))),
        }
    }
}

impl std::fmt::Display for LossModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^u)`, evaluated from the side that cannot overflow.
fn logistic_tail(u: f64) -> f64 {
    if u > 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    }
}

/// Root of `h(u) = u - m - q/(1 + e^u)`.
///
/// `h` is strictly increasing with `h(m) < 0 < h(m + q)`, so Newton steps are
/// kept inside a shrinking bracket and replaced by bisection when they leave it.
fn logistic_prox(m: f64, q: f64) -> Result<f64> {
    let h = |u: f64| u - m - q * logistic_tail(u);
    let (mut lo, mut hi) = (m, m + q);
    let mut u = m + q * logistic_tail(m);
    u = u.clamp(lo, hi);
    let scale = m.abs().max(q).max(1.0);
    let mut step_before_last = hi - lo;
    let mut last_step = hi - lo;
    for _ in 0..PROX_MAX_ITERS {
        let hu = h(u);
        if hu == 0.0 {
            return Ok(u);
        }
        if hu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let s = logistic_tail(u);
        let dh = 1.0 + q * s * (1.0 - s);
        let newton = u - hu / dh;
        // Newton can ping-pong across a wide bracket; demand it at least halves
        // the step from two iterations back
        let next = if newton > lo && newton < hi && 2.0 * (newton - u).abs() <= step_before_last {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - u).abs();
        step_before_last = last_step;
        last_step = step;
        u = next;
        if step <= 4.0 * f64::EPSILON * scale || hi - lo <= 4.0 * f64::EPSILON * scale {
            return Ok(u);
        }
    }
    Err(Error::Numeric(format!(
        "logistic prox did not converge for m = {m}, q = {q}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Golden-section refinement of a coarse grid scan, independent of the
    /// Newton/bisection path above.
    fn grid_prox(loss: LossModel, m: f64, q: f64) -> f64 {
        let obj = |u: f64| loss.value(u) + (u - m) * (u - m) / (2.0 * q);
        let (mut lo, mut hi) = (m.min(1.0) - 1.0, m.max(1.0) + q + 1.0);
        for _ in 0..6 {
            let n = 400;
            let step = (hi - lo) / n as f64;
            let best = (0..=n)
                .map(|k| lo + k as f64 * step)
                .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
                .unwrap();
            lo = best - step;
            hi = best + step;
        }
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if obj(c) <= obj(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn values_and_derivatives() {
        assert_abs_diff_eq!(
            LossModel::Logistic.value(0.0),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_eq!(LossModel::Hinge.value(2.0), 0.0);
        assert_eq!(LossModel::Hinge.value(-1.0), 2.0);
        assert_eq!(LossModel::Logistic.derivative(0.0), -0.5);
        assert_eq!(LossModel::Hinge.derivative(0.5), -1.0);
        assert_eq!(LossModel::Hinge.derivative(1.0), 0.0);
        // -1/(1+e^30) = -9.357622968839299e-14 to double precision
        assert_abs_diff_eq!(
            LossModel::Logistic.derivative(30.0),
            -9.357622968839299e-14,
            epsilon = 1e-27
        );
        // large |u| stays finite and accurate
        assert_abs_diff_eq!(LossModel::Logistic.value(-700.0), 700.0, epsilon = 1e-12);
        assert!(LossModel::Logistic.value(700.0) > 0.0);
        assert_eq!(LossModel::Logistic.derivative(-700.0), -1.0);
    }

    #[test]
    fn losses_are_convex_decreasing_and_vanish() {
        for loss in [LossModel::Logistic, LossModel::Hinge] {
            let grid: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.05).collect();
            for w in grid.windows(3) {
                let (a, b, c) = (loss.value(w[0]), loss.value(w[1]), loss.value(w[2]));
                assert!(b <= a + 1e-15, "{loss} not decreasing");
                assert!(a + c - 2.0 * b >= -1e-12, "{loss} not convex");
            }
            assert!(loss.value(50.0) < 1e-20);
            assert!(grid.iter().all(|&u| loss.derivative(u) <= 0.0));
        }
    }

    #[test]
    fn prox_examples() {
        // bisection oracle for u - 1/(1+e^u) = 0 on [0, 1]
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if c - 1.0 / (1.0 + c.exp()) < 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        let u = LossModel::Logistic.prox(ProxQuery::new(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(u, 0.5 * (a + b), epsilon = 1e-14);
        assert_abs_diff_eq!(u, 0.40106, epsilon = 1e-5);

        assert_eq!(
            LossModel::Hinge.prox(ProxQuery::new(2.0, 0.5)).unwrap(),
            2.0
        );
        assert_abs_diff_eq!(grid_prox(LossModel::Hinge, 2.0, 0.5), 2.0, epsilon = 1e-7);
        assert_eq!(
            LossModel::Hinge.prox(ProxQuery::new(0.8, 0.5)).unwrap(),
            1.0
        );
        assert_eq!(
            LossModel::Hinge.prox(ProxQuery::new(-1.0, 0.5)).unwrap(),
            -0.5
        );
        for loss in [LossModel::Logistic, LossModel::Hinge] {
            assert_abs_diff_eq!(
                loss.prox(ProxQuery::new(5.0, 1e-9)).unwrap(),
                5.0,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn prox_rejects_bad_scale() {
        assert!(LossModel::Logistic.prox(ProxQuery::new(0.0, 0.0)).is_err());
        assert!(LossModel::Hinge.prox(ProxQuery::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn prox_survives_extreme_scales() {
        for &q in &[1e-12, 1e-3, 1.0, 1e3, 1e6] {
            for &m in &[-700.0, -50.0, 0.0, 50.0, 700.0] {
                let u = LossModel::Logistic.prox(ProxQuery::new(m, q)).unwrap();
                assert!(u >= m && u <= m + q, "m={m} q={q} u={u}");
            }
        }
        // wide brackets where plain Newton oscillates between the two ends
        for &(m, q) in &[
            (-10.449831541258177, 14.273469403459522),
            (-4.393835702819938, 12.519442057356589),
            (-30.0, 60.0),
        ] {
            let u = LossModel::Logistic.prox(ProxQuery::new(m, q)).unwrap();
            assert!((u - m - q / (1.0 + u.exp())).abs() <= 1e-12 * q);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prox_matches_grid_oracle(m in -10.0f64..10.0, log_q in -3.0f64..3.0, hinge in any::<bool>()) {
            let q = 10f64.powf(log_q);
            let loss = if hinge { LossModel::Hinge } else { LossModel::Logistic };
            let u = loss.prox(ProxQuery::new(m, q)).unwrap();
            prop_assert!((u - grid_prox(loss, m, q)).abs() <= 1e-5);
        }

        #[test]
        fn logistic_stationarity(m in -10.0f64..10.0, log_q in -3.0f64..3.0) {
            let q = 10f64.powf(log_q);
            let u = LossModel::Logistic.prox(ProxQuery::new(m, q)).unwrap();
            prop_assert!((LossModel::Logistic.derivative(u) + (u - m) / q).abs() <= 1e-10);
            prop_assert!((q / (1.0 + u.exp()) - (u - m)).abs() <= 1e-12 * q.max(1.0));
        }

        #[test]
        fn prox_is_monotone_and_nonexpansive(a in -10.0f64..10.0, b in -10.0f64..10.0, log_q in -3.0f64..3.0, hinge in any::<bool>()) {
            let q = 10f64.powf(log_q);
            let loss = if hinge { LossModel::Hinge } else { LossModel::Logistic };
            let (m1, m2) = if a <= b { (a, b) } else { (b, a) };
            let u1 = loss.prox(ProxQuery::new(m1, q)).unwrap();
            let u2 = loss.prox(ProxQuery::new(m2, q)).unwrap();
            prop_assert!(u1 <= u2 + 1e-12);
            prop_assert!(u2 - u1 <= m2 - m1 + 1e-12);
        }
    }
}
