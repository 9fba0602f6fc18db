use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stepsizes `gamma_n = n^-alpha` with `0.5 < alpha <= 1`, optionally
/// preceded by an explicit sequence of gains in `(0, 1]`.
///
/// With the power form `gamma_1 = 1`, so online EM never reads its initial
/// statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsizeSchedule {
    alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    explicit: Vec<f64>,
}

impl StepsizeSchedule {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(Error::Argument(format!(
                "stepsize exponent must satisfy 0.5 < alpha <= 1, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            explicit: Vec::new(),
        })
    }

    /// `gamma_n = 1/n`.
    pub fn harmonic() -> Self {
        Self {
            alpha: 1.0,
            explicit: Vec::new(),
        }
    }

    /// Use `gains` for the first steps, then fall back to `n^-alpha`.
    pub fn with_explicit(mut self, gains: Vec<f64>) -> Result<Self> {
        if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(Error::Argument(format!("explicit stepsize {g} outside (0, 1]")));
        }
        self.explicit = gains;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Gain at step `n >= 1`.
    pub fn gamma(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        if let Some(g) = self.explicit.get((n - 1) as usize) {
            return *g;
        }
        let nf = n as f64;
        if self.alpha == 1.0 {
            1.0 / nf
        } else {
            nf.powf(-self.alpha)
        }
    }

    /// Weight left on a statistic injected before step `from`, after step
    /// `n`: `prod_{k=from..=n} (1 - gamma_k)`, returned as a natural log.
    pub fn log_retained_weight(&self, from: u64, n: u64) -> f64 {
        (from.max(1)..=n).map(|k| (1.0 - self.gamma(k)).ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_schedule_starts_at_one_and_decreases() {
        let s = StepsizeSchedule::power(0.6).unwrap();
        assert_eq!(s.gamma(1), 1.0);
        let mut prev = 1.0;
        for n in 2..1000 {
            let g = s.gamma(n);
            assert!(g < prev && g > 0.0);
            prev = g;
        }
        assert_eq!(StepsizeSchedule::harmonic().gamma(4), 0.25);
    }

    #[test]
    fn exponent_range_is_enforced() {
        assert!(StepsizeSchedule::power(0.5).is_err());
        assert!(StepsizeSchedule::power(1.01).is_err());
        assert!(StepsizeSchedule::power(f64::NAN).is_err());
        assert!(StepsizeSchedule::power(1.0).is_ok());
    }

    #[test]
    fn explicit_prefix() {
        let s = StepsizeSchedule::power(0.75)
            .unwrap()
            .with_explicit(vec![0.5, 0.5])
            .unwrap();
        assert_eq!(s.gamma(1), 0.5);
        assert_eq!(s.gamma(2), 0.5);
        assert_eq!(s.gamma(16), 16f64.powf(-0.75));
        assert!(StepsizeSchedule::harmonic().with_explicit(vec![1.5]).is_err());
        assert!(StepsizeSchedule::harmonic().with_explicit(vec![0.0]).is_err());
    }
}
