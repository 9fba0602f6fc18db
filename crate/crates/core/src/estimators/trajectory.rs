use serde::{Deserialize, Serialize};

/// One recorded estimator step.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<P, S> {
    /// Step index: EM iteration for batch EM, update count for the
    /// recursive estimators. Step 0 holds the initial parameter.
    pub step: u64,
    pub theta: P,
    pub stat: Option<S>,
    /// Batch EM: normalised log-likelihood of `theta` over the data.
    /// Recursive estimators: log-likelihood of the step's observations under
    /// the parameter in force before the update.
    pub loglik: Option<f64>,
}

/// Which steps a recursive estimator keeps in its [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordPolicy {
    #[default]
    EveryStep,
    /// Steps `1, 2, 4, 8, ...` plus the last one.
    PowersOfTwo,
    /// Only the initial and last steps.
    Endpoints,
    /// Every `k`-th step plus the last one, e.g. one record per tour.
    Multiples(u64),
}

impl RecordPolicy {
    pub(crate) fn keeps(self, step: u64, last: u64) -> bool {
        match self {
            RecordPolicy::EveryStep => true,
            RecordPolicy::PowersOfTwo => step.is_power_of_two() || step == last,
            RecordPolicy::Endpoints => step == last,
            RecordPolicy::Multiples(k) => (k > 0 && step.is_multiple_of(k)) || step == last,
        }
    }
}

/// Output of every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<P, S> {
    pub records: Vec<Record<P, S>>,
    pub final_theta: P,
    /// Polyak-Ruppert average, when requested.
    pub averaged_theta: Option<P>,
    /// Normalised log-likelihood over the full data after each batch-EM
    /// iteration or each completed tour; empty for single-pass streams.
    pub tour_logliks: Vec<f64>,
    /// Steps at which the M-step was skipped (freeze phase or inadmissible statistic).
    pub frozen_steps: Vec<u64>,
    /// Steps at which a projection back into the parameter set occurred.
    pub projected_steps: Vec<u64>,
    /// Index of the last step taken.
    pub last_step: u64,
}

impl<P, S> Trajectory<P, S> {
    pub(crate) fn start(theta0: P, loglik: Option<f64>) -> Self
    where
        P: Clone,
    {
        Self {
            records: vec![Record {
                step: 0,
                theta: theta0.clone(),
                stat: None,
                loglik,
            }],
            final_theta: theta0,
            averaged_theta: None,
            tour_logliks: Vec::new(),
            frozen_steps: Vec::new(),
            projected_steps: Vec::new(),
            last_step: 0,
        }
    }

    pub fn thetas(&self) -> impl Iterator<Item = &P> {
        self.records.iter().map(|r| &r.theta)
    }

    pub fn record_at(&self, step: u64) -> Option<&Record<P, S>> {
        self.records
            .binary_search_by_key(&step, |r| r.step)
            .ok()
            .map(|i| &self.records[i])
    }
}
