use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Upper quartile of the standard normal, `Phi^{-1}(0.75)`.
pub const NORMAL_Q75: f64 = 0.674_489_750_196_081_7;

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of no values");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five quantiles, mean and standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
    /// Sample standard deviation (divisor `count - 1`; zero for one value).
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("summary of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Argument("summary of a sample containing NaN".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            count: n,
            q05: quantile_sorted(&sorted, 0.05),
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.50),
            q75: quantile_sorted(&sorted, 0.75),
            q95: quantile_sorted(&sorted, 0.95),
            mean,
            sd,
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    /// `(name, value)` pairs in report order.
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("q05", self.q05),
            ("q25", self.q25),
            ("q50", self.q50),
            ("q75", self.q75),
            ("q95", self.q95),
            ("mean", self.mean),
            ("sd", self.sd),
            ("count", self.count as f64),
        ]
    }
}

/// Asymptotic band for the estimate of `|u|^2` in single-factor PPCA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherBand {
    pub center: f64,
    /// `sqrt(2 (lambda + |u|^2)^2 / n)`.
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Fisher information per observation for `|u|^2`: `1 / (2 (lambda + |u|^2)^2)`.
pub fn fisher_information_norm_u(lambda: f64, norm_u_sq: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) || !(norm_u_sq >= 0.0 && norm_u_sq.is_finite()) {
        return Err(Error::Domain(format!(
            "need lambda > 0 and |u|^2 >= 0, got {lambda} and {norm_u_sq}"
        )));
    }
    Ok(1.0 / (2.0 * (lambda + norm_u_sq).powi(2)))
}

/// Band `|u|^2 +- 2 IQR` of the asymptotic Gaussian law of an efficient
/// estimate from `n` observations, where `IQR = 2 * 0.674490 * sd`.
pub fn fisher_band_ppca_norm_u(lambda: f64, norm_u_sq: f64, n: usize) -> Result<FisherBand> {
    if n == 0 {
        return Err(Error::Argument("Fisher band needs n >= 1".into()));
    }
    let info = fisher_information_norm_u(lambda, norm_u_sq)?;
    let sd = (1.0 / (info * n as f64)).sqrt();
    let half = 2.0 * (2.0 * NORMAL_Q75 * sd);
    Ok(FisherBand {
        center: norm_u_sq,
        sd,
        lower: norm_u_sq - half,
        upper: norm_u_sq + half,
    })
}

/// One-sided sign test of `a_i > b_i` over paired values. Ties are dropped.
/// Returns `P(Binomial(n, 1/2) >= wins)`, with `n` the number of untied pairs.
pub fn sign_test_greater(a: &[f64], b: &[f64]) -> SignTest {
    let mut wins = 0u64;
    let mut losses = 0u64;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            wins += 1;
        } else if x < y {
            losses += 1;
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 {
        1.0
    } else {
        (wins..=n)
            .map(|k| {
                (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k) - n as f64 * std::f64::consts::LN_2).exp()
            })
            .sum::<f64>()
            .min(1.0)
    };
    SignTest { wins, losses, p_value }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub wins: u64,
    pub losses: u64,
    pub p_value: f64,
}
