//! Online EM: a stochastic-approximation recursion on the sufficient
//! statistic followed by the closed-form M-step.
//!
//! For each observation (or mini-batch) `n`:
//!
//! ```text
//! S_n     = (1 - gamma_n) S_{n-1} + gamma_n E_{theta_{n-1}}[s(X, Y) | Y_n]
//! theta_n = mstep(S_n)                 (or mstep(S_n + S_0 / n) in MAP mode)
//! ```
//!
//! The M-step is skipped during the first `freeze_count` steps and whenever
//! the statistic is outside the M-step's domain; the parameter then keeps its
//! previous value while the statistic keeps accumulating.

use log::debug;

use crate::error::{Error, Result};
use crate::estimators::schedule::StepsizeSchedule;
use crate::estimators::trajectory::{Record, RecordPolicy, Trajectory};
use crate::model::{add_scaled, convex_update, mean_estep_iter, LatentModel, SufficientStat};

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineEmConfig<S> {
    pub schedule: StepsizeSchedule,
    /// Number of initial steps without an M-step.
    pub freeze_count: u64,
    /// Observations per update.
    pub minibatch_size: usize,
    /// Conjugate-prior hyperparameter `S_0`; when set the M-step is applied
    /// to `S_n + S_0 / n`.
    pub prior: Option<S>,
    /// Starting statistic of the recursion. Irrelevant when `gamma_1 = 1`.
    pub initial_stat: Option<S>,
    /// Average iterates after this fraction of the steps (Polyak-Ruppert).
    pub averaging_start_fraction: Option<f64>,
    pub record: RecordPolicy,
    /// Record `log f_{theta_{n-1}}(Y_n)` per step. Costs one extra density
    /// evaluation per observation.
    pub predictive_loglik: bool,
}

impl<S> OnlineEmConfig<S> {
    pub fn new(schedule: StepsizeSchedule) -> Self {
        Self {
            schedule,
            freeze_count: 5,
            minibatch_size: 1,
            prior: None,
            initial_stat: None,
            averaging_start_fraction: None,
            record: RecordPolicy::EveryStep,
            predictive_loglik: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.minibatch_size == 0 {
            return Err(Error::Argument("mini-batch size must be at least 1".into()));
        }
        if let Some(f) = self.averaging_start_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Argument(format!(
                    "averaging start fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// What happened during one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub step: u64,
    pub gamma: f64,
    /// Whether the M-step was skipped.
    pub frozen: bool,
    /// Log-likelihood of the block under the pre-update parameter, if tracked.
    pub loglik: Option<f64>,
}

/// Streaming online-EM state. Feed observations with
/// [`update`](OnlineEm::update) or [`update_block`](OnlineEm::update_block).
#[derive(Debug, Clone)]
pub struct OnlineEm<'m, M: LatentModel> {
    model: &'m M,
    config: OnlineEmConfig<M::Stat>,
    stat: M::Stat,
    theta: M::Param,
    step: u64,
    averaging_after: Option<u64>,
    avg_sum: Vec<f64>,
    avg_count: u64,
}

impl<'m, M: LatentModel> OnlineEm<'m, M> {
    pub fn new(model: &'m M, theta0: M::Param, config: OnlineEmConfig<M::Stat>) -> Result<Self> {
        config.validate()?;
        model.validate_param(&theta0)?;
        for s in config.prior.iter().chain(config.initial_stat.iter()) {
            if s.dim() != model.stat_dim() {
                return Err(Error::Argument(format!(
                    "statistic has dimension {}, model expects {}",
                    s.dim(),
                    model.stat_dim()
                )));
            }
        }
        let stat = config.initial_stat.clone().unwrap_or_else(|| model.zero_stat());
        Ok(Self {
            model,
            config,
            stat,
            theta: theta0,
            step: 0,
            averaging_after: None,
            avg_sum: Vec::new(),
            avg_count: 0,
        })
    }

    /// Start Polyak-Ruppert averaging of the iterates `theta_t`, `t > n0`.
    pub fn average_after(&mut self, n0: u64) {
        self.averaging_after = Some(n0);
        self.avg_sum.clear();
        self.avg_count = 0;
    }

    pub fn theta(&self) -> &M::Param {
        &self.theta
    }

    pub fn stat(&self) -> &M::Stat {
        &self.stat
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &OnlineEmConfig<M::Stat> {
        &self.config
    }

    /// The current Polyak-Ruppert average, if averaging has started.
    pub fn averaged_theta(&self) -> Option<Result<M::Param>> {
        if self.avg_count == 0 {
            return None;
        }
        let n = self.avg_count as f64;
        let mean: Vec<f64> = self.avg_sum.iter().map(|s| s / n).collect();
        Some(self.model.param_from_coords(&mean))
    }

    pub fn update(&mut self, y: &M::Obs) -> Result<StepOutcome> {
        self.update_block(std::iter::once(y))
    }

    /// One update from a block of observations: their E-step statistics at
    /// the current parameter are averaged and enter the recursion with a
    /// single stepsize.
    pub fn update_block<'a, I>(&mut self, block: I) -> Result<StepOutcome>
    where
        I: IntoIterator<Item = &'a M::Obs> + Clone,
        M::Obs: 'a,
    {
        let step = self.step + 1;
        let loglik = if self.config.predictive_loglik {
            let mut total = 0.0;
            for y in block.clone() {
                total += self.model.log_likelihood(&self.theta, y)?;
            }
            Some(total)
        } else {
            None
        };
        let e = mean_estep_iter(self.model, &self.theta, block).map_err(|e| e.context(format!("step {step}")))?;
        let gamma = self.config.schedule.gamma(step);
        convex_update(&mut self.stat, gamma, &e);
        self.step = step;

        let frozen = if step <= self.config.freeze_count {
            true
        } else {
            match self.maximise(step) {
                Ok(theta) => {
                    self.theta = theta;
                    false
                }
                Err(err) if err.is_inadmissible() => {
                    debug!("step {step}: M-step skipped ({err})");
                    true
                }
                Err(err) => return Err(err),
            }
        };

        if let Some(n0) = self.averaging_after {
            if step > n0 {
                let coords = self.model.param_coords(&self.theta);
                if self.avg_sum.is_empty() {
                    self.avg_sum = vec![0.0; coords.len()];
                }
                for (a, c) in self.avg_sum.iter_mut().zip(coords) {
                    *a += c;
                }
                self.avg_count += 1;
            }
        }

        Ok(StepOutcome {
            step,
            gamma,
            frozen,
            loglik,
        })
    }

    fn maximise(&self, step: u64) -> Result<M::Param> {
        match &self.config.prior {
            None => self.model.mstep(&self.stat),
            Some(prior) => {
                let mut target = self.stat.clone();
                add_scaled(&mut target, 1.0 / step as f64, prior);
                self.model.mstep(&target)
            }
        }
    }
}

/// Runs [`OnlineEm`] over `stream` and collects a [`Trajectory`].
///
/// Consecutive observations are grouped into blocks of
/// `config.minibatch_size` (the last block may be shorter). When
/// `averaging_start_fraction` is set, averaging starts after
/// `floor(fraction * steps)` steps.
pub fn online_em<'a, M, I>(
    model: &M,
    stream: I,
    theta0: &M::Param,
    config: OnlineEmConfig<M::Stat>,
) -> Result<Trajectory<M::Param, M::Stat>>
where
    M: LatentModel,
    M::Obs: 'a,
    I: IntoIterator<Item = &'a M::Obs>,
    I::IntoIter: ExactSizeIterator,
{
    let stream = stream.into_iter();
    let n_obs = stream.len();
    if n_obs == 0 {
        return Err(Error::Argument("online EM needs at least one observation".into()));
    }
    let m = config.minibatch_size.max(1);
    let total_steps = n_obs.div_ceil(m) as u64;
    let mut runner = Runner::new(model, theta0, config, total_steps)?;
    let mut block = Vec::with_capacity(m);
    for y in stream {
        block.push(y);
        if block.len() == m {
            runner.step(&block)?;
            block.clear();
        }
    }
    if !block.is_empty() {
        runner.step(&block)?;
    }
    runner.finish()
}

/// Shared driver for [`online_em`] and the multi-tour runner.
pub(crate) struct Runner<'m, M: LatentModel> {
    pub(crate) estimator: OnlineEm<'m, M>,
    pub(crate) traj: Trajectory<M::Param, M::Stat>,
    total_steps: u64,
}

impl<'m, M: LatentModel> Runner<'m, M> {
    pub(crate) fn new(
        model: &'m M,
        theta0: &M::Param,
        config: OnlineEmConfig<M::Stat>,
        total_steps: u64,
    ) -> Result<Self> {
        let fraction = config.averaging_start_fraction;
        let mut estimator = OnlineEm::new(model, theta0.clone(), config)?;
        if let Some(f) = fraction {
            estimator.average_after((f * total_steps as f64).floor() as u64);
        }
        Ok(Self {
            estimator,
            traj: Trajectory::start(theta0.clone(), None),
            total_steps,
        })
    }

    pub(crate) fn step(&mut self, block: &[&M::Obs]) -> Result<StepOutcome> {
        let outcome = self.estimator.update_block(block.iter().copied())?;
        if outcome.frozen {
            self.traj.frozen_steps.push(outcome.step);
        }
        if self.estimator.config.record.keeps(outcome.step, self.total_steps) {
            self.traj.records.push(Record {
                step: outcome.step,
                theta: self.estimator.theta().clone(),
                stat: Some(self.estimator.stat().clone()),
                loglik: outcome.loglik,
            });
        }
        Ok(outcome)
    }

    pub(crate) fn finish(mut self) -> Result<Trajectory<M::Param, M::Stat>> {
        self.traj.last_step = self.estimator.step();
        self.traj.final_theta = self.estimator.theta().clone();
        self.traj.averaged_theta = self.estimator.averaged_theta().transpose()?;
        Ok(self.traj)
    }
}
