use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    batch_em, incremental_em, pseudo_observations, titterington, tour_runner, IncrementalEmConfig, OnlineEmConfig,
    RecordPolicy, ScanMode, ScanOrder, StepsizeSchedule, TitteringtonConfig, Trajectory,
};
use crate::model::{LatentModel, SufficientStat};
use crate::models::{MixtureParam, PoissonMixture, Ppca1, Ppca1Param};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Batch,
    Online,
    Incremental,
    Titterington,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Batch => "batch",
            Algorithm::Online => "online",
            Algorithm::Incremental => "incremental",
            Algorithm::Titterington => "titterington",
        }
    }
}

/// How checkpoints of an estimator are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointUnit {
    /// Batch-EM iterations `0, 1, ..., iterations`.
    Iteration,
    /// Completed tours `0, 1, ..., tours` through a fixed data set.
    Tour,
    /// Single-pass updates `0, 1, 2, 4, 8, ...` plus the last one.
    Step,
}

/// One estimator configuration. Fields that do not apply to the chosen
/// algorithm must be left out.
///
/// | field | batch | online | incremental | titterington |
/// |---|---|---|---|---|
/// | `iterations` | required | | | |
/// | `alpha` | | required | | required |
/// | `freeze` | | default 5 | default 5 | |
/// | `minibatch` | | default 1 | | |
/// | `tours` | | optional | required | optional |
/// | `scan`, `scan_seed` | | optional | | optional |
/// | `averaging_start` | | optional | | |
/// | `prior` | | optional | | |
///
/// Without `tours`, online EM and Titterington's recursion make a single
/// pass over the data and are checkpointed on a powers-of-two grid; with
/// `tours` they are checkpointed after each tour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freeze: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minibatch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tours: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_seed: Option<u64>,
    /// Fraction of the steps after which Polyak-Ruppert averaging starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging_start: Option<f64>,
    /// Coordinates of the conjugate-prior statistic `S_0` (MAP mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

/// Run-time options that are not part of an estimator's identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub record: RecordPolicy,
    pub predictive_loglik: bool,
    /// Seed for random scans when the estimator does not fix one.
    pub scan_seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record: RecordPolicy::EveryStep,
            predictive_loglik: true,
            scan_seed: None,
        }
    }
}

impl EstimatorSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            name: None,
            algorithm,
            alpha: None,
            freeze: None,
            minibatch: None,
            iterations: None,
            tours: None,
            scan: None,
            scan_seed: None,
            averaging_start: None,
            prior: None,
        }
    }

    pub fn batch(iterations: usize) -> Self {
        Self {
            iterations: Some(iterations),
            ..Self::new(Algorithm::Batch)
        }
    }

    pub fn online(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::new(Algorithm::Online)
        }
    }

    pub fn incremental(tours: usize) -> Self {
        Self {
            tours: Some(tours),
            ..Self::new(Algorithm::Incremental)
        }
    }

    pub fn titterington(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::new(Algorithm::Titterington)
        }
    }

    /// The explicit name, or one built from the algorithm and its exponent.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match (self.algorithm, self.alpha) {
            (a, Some(alpha)) => format!("{}-{alpha}", a.as_str()),
            (a, None) => a.as_str().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let algo = self.algorithm.as_str();
        let forbid = |present: bool, field: &str| -> Result<()> {
            if present {
                Err(Error::Config(format!("`{field}` does not apply to {algo}")))
            } else {
                Ok(())
            }
        };
        let require = |present: bool, field: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{algo} requires `{field}`")))
            }
        };
        match self.algorithm {
            Algorithm::Batch => {
                require(self.iterations.is_some(), "iterations")?;
                forbid(self.alpha.is_some(), "alpha")?;
                forbid(self.freeze.is_some(), "freeze")?;
                forbid(self.minibatch.is_some(), "minibatch")?;
                forbid(self.tours.is_some(), "tours")?;
                forbid(self.scan.is_some() || self.scan_seed.is_some(), "scan")?;
                forbid(self.averaging_start.is_some(), "averaging_start")?;
                forbid(self.prior.is_some(), "prior")?;
            }
            Algorithm::Online => {
                require(self.alpha.is_some(), "alpha")?;
                forbid(self.iterations.is_some(), "iterations")?;
            }
            Algorithm::Incremental => {
                require(self.tours.is_some(), "tours")?;
                forbid(self.alpha.is_some(), "alpha")?;
                forbid(self.minibatch.is_some(), "minibatch")?;
                forbid(self.iterations.is_some(), "iterations")?;
                forbid(self.averaging_start.is_some(), "averaging_start")?;
                forbid(self.prior.is_some(), "prior")?;
                forbid(
                    self.scan.is_some_and(|s| s != ScanMode::Systematic) || self.scan_seed.is_some(),
                    "scan",
                )?;
            }
            Algorithm::Titterington => {
                require(self.alpha.is_some(), "alpha")?;
                forbid(self.iterations.is_some(), "iterations")?;
                forbid(self.freeze.is_some(), "freeze")?;
                forbid(self.minibatch.is_some(), "minibatch")?;
                forbid(self.averaging_start.is_some(), "averaging_start")?;
                forbid(self.prior.is_some(), "prior")?;
            }
        }
        if let Some(alpha) = self.alpha {
            StepsizeSchedule::power(alpha).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.iterations == Some(0) {
            return Err(Error::Config("`iterations` must be at least 1".into()));
        }
        if self.tours == Some(0) {
            return Err(Error::Config("`tours` must be at least 1".into()));
        }
        if self.minibatch == Some(0) {
            return Err(Error::Config("`minibatch` must be at least 1".into()));
        }
        if let Some(f) = self.averaging_start {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("`averaging_start` must lie in (0, 1), got {f}")));
            }
        }
        if self.scan_seed.is_some() && self.scan != Some(ScanMode::RandomWithReplacement) {
            return Err(Error::Config(
                "`scan_seed` requires `scan: random-with-replacement`".into(),
            ));
        }
        Ok(())
    }

    pub fn checkpoint_unit(&self) -> CheckpointUnit {
        match (self.algorithm, self.tours) {
            (Algorithm::Batch, _) => CheckpointUnit::Iteration,
            (Algorithm::Incremental, _) | (_, Some(_)) => CheckpointUnit::Tour,
            _ => CheckpointUnit::Step,
        }
    }

    /// Number of updates in one pass over `n` observations.
    pub fn steps_per_tour(&self, n: usize) -> u64 {
        match self.algorithm {
            Algorithm::Batch => 1,
            Algorithm::Online => n.div_ceil(self.minibatch.unwrap_or(1).max(1)) as u64,
            _ => n as u64,
        }
    }

    /// Total number of steps (iterations for batch EM) on `n` observations.
    pub fn total_steps(&self, n: usize) -> u64 {
        match self.algorithm {
            Algorithm::Batch => self.iterations.unwrap_or(0) as u64,
            _ => self.steps_per_tour(n) * self.tours.unwrap_or(1) as u64,
        }
    }

    /// Checkpoint indices for a run on `n` observations.
    pub fn checkpoints(&self, n: usize) -> Vec<u64> {
        match self.checkpoint_unit() {
            CheckpointUnit::Iteration => (0..=self.iterations.unwrap_or(0) as u64).collect(),
            CheckpointUnit::Tour => (0..=self.tours.unwrap_or(1) as u64).collect(),
            CheckpointUnit::Step => {
                let last = self.total_steps(n);
                let mut c = vec![0];
                c.extend((0..64).map(|k| 1u64 << k).take_while(|&s| s < last));
                c.push(last);
                c
            }
        }
    }

    /// The step index of checkpoint `c` in the estimator's trajectory.
    pub fn checkpoint_step(&self, c: u64, n: usize) -> u64 {
        match self.checkpoint_unit() {
            CheckpointUnit::Tour => c * self.steps_per_tour(n),
            _ => c,
        }
    }

    /// The record policy that keeps exactly the checkpoints.
    pub fn checkpoint_policy(&self, n: usize) -> RecordPolicy {
        match self.checkpoint_unit() {
            CheckpointUnit::Tour => RecordPolicy::Multiples(self.steps_per_tour(n)),
            _ => RecordPolicy::PowersOfTwo,
        }
    }

    fn scan_order(&self, opts: &RunOptions) -> Result<ScanOrder> {
        match self.scan.unwrap_or_default() {
            ScanMode::Systematic => Ok(ScanOrder::systematic()),
            ScanMode::RandomWithReplacement => self
                .scan_seed
                .or(opts.scan_seed)
                .map(ScanOrder::random)
                .ok_or_else(|| Error::Config("random scans need an explicit seed".into())),
        }
    }

    fn schedule(&self) -> Result<StepsizeSchedule> {
        let alpha = self
            .alpha
            .ok_or_else(|| Error::Config(format!("{} requires `alpha`", self.algorithm.as_str())))?;
        StepsizeSchedule::power(alpha).map_err(|e| Error::Config(e.to_string()))
    }

    /// Run the estimator on a fixed data set.
    pub fn run<M: LatentModel>(
        &self,
        model: &M,
        data: &[M::Obs],
        theta0: &M::Param,
        opts: &RunOptions,
    ) -> Result<Trajectory<M::Param, M::Stat>> {
        self.validate()?;
        let tours = self.tours.unwrap_or(1);
        match self.algorithm {
            Algorithm::Batch => batch_em(model, data, theta0, self.iterations.unwrap_or(0)),
            Algorithm::Online => {
                let mut cfg = OnlineEmConfig::new(self.schedule()?);
                if let Some(f) = self.freeze {
                    cfg.freeze_count = f;
                }
                cfg.minibatch_size = self.minibatch.unwrap_or(1);
                cfg.averaging_start_fraction = self.averaging_start;
                cfg.record = opts.record;
                cfg.predictive_loglik = opts.predictive_loglik;
                if let Some(p) = &self.prior {
                    cfg.prior = Some(stat_from_coords(model, p)?);
                }
                tour_runner(model, data, theta0, cfg, tours, self.scan_order(opts)?)
            }
            Algorithm::Incremental => {
                let mut cfg = IncrementalEmConfig {
                    record: opts.record,
                    predictive_loglik: opts.predictive_loglik,
                    ..Default::default()
                };
                if let Some(f) = self.freeze {
                    cfg.freeze_count = f;
                }
                incremental_em(model, data, theta0, tours, cfg)
            }
            Algorithm::Titterington => {
                if data.is_empty() {
                    return Err(Error::Argument(
                        "Titterington's recursion needs at least one observation".into(),
                    ));
                }
                let stream = pseudo_observations(data, tours, self.scan_order(opts)?);
                let cfg = TitteringtonConfig {
                    record: opts.record,
                    predictive_loglik: opts.predictive_loglik,
                    ..Default::default()
                };
                titterington(model, stream, theta0, &self.schedule()?, cfg)
            }
        }
    }
}

/// A model statistic with the given flat coordinates.
pub fn stat_from_coords<M: LatentModel>(model: &M, coords: &[f64]) -> Result<M::Stat> {
    if coords.len() != model.stat_dim() {
        return Err(Error::Config(format!(
            "statistic has {} coordinates, model expects {}",
            coords.len(),
            model.stat_dim()
        )));
    }
    let mut s = model.zero_stat();
    s.coords_mut().copy_from_slice(coords);
    Ok(s)
}

/// How initial Poisson means are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeansInit {
    Fixed(Vec<f64>),
    /// Independent uniform draws on `[low, high]`, one set per replication.
    Uniform {
        low: f64,
        high: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// The model of an experiment: its true parameter and how estimators are
/// initialised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Single-factor PPCA. The true loading defaults to `true_norm_u * e_1`
    /// and the initial loading to `0.5 (1, ..., 1) / sqrt(dim)`.
    Ppca1 {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        true_u: Option<Vec<f64>>,
        #[serde(default = "one")]
        true_norm_u: f64,
        true_lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_u: Option<Vec<f64>>,
        #[serde(default = "one")]
        init_lambda: f64,
    },
    /// Poisson mixture. Initial weights default to uniform.
    #[serde(alias = "poisson-mix")]
    PoissonMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_weights: Option<Vec<f64>>,
        init_means: MeansInit,
    },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Ppca1 { .. } => {
                let (model, _) = self.ppca1_truth()?;
                model.validate_param(&self.ppca1_init(model.dim())?).map_err(config)?;
            }
            ModelSpec::PoissonMixture { init_means, .. } => {
                let (model, _) = self.mixture_truth()?;
                if let MeansInit::Uniform { low, high } = init_means {
                    if !(*low > 0.0 && high >= low && high.is_finite()) {
                        return Err(Error::Config(format!(
                            "initial-mean range [{low}, {high}] must be positive"
                        )));
                    }
                }
                let mut probe = ChaCha8Rng::seed_from_u64(0);
                model.validate_param(&self.mixture_init(&mut probe)?).map_err(config)?;
            }
        }
        Ok(())
    }

    /// The model and its true parameter (PPCA only).
    pub fn ppca1_truth(&self) -> Result<(Ppca1, Ppca1Param)> {
        let ModelSpec::Ppca1 {
            dim,
            true_u,
            true_norm_u,
            true_lambda,
            ..
        } = self
        else {
            return Err(Error::Config("not a PPCA model".into()));
        };
        let model = Ppca1::new(*dim).map_err(config)?;
        let u = match true_u {
            Some(u) => u.clone(),
            None => {
                let mut u = vec![0.0; *dim];
                u[0] = *true_norm_u;
                u
            }
        };
        let truth = Ppca1Param::new(u, *true_lambda);
        model.validate_param(&truth).map_err(config)?;
        Ok((model, truth))
    }

    /// The fixed initial point (PPCA only).
    pub fn ppca1_init(&self, dim: usize) -> Result<Ppca1Param> {
        let ModelSpec::Ppca1 {
            init_u, init_lambda, ..
        } = self
        else {
            return Err(Error::Config("not a PPCA model".into()));
        };
        let u = init_u.clone().unwrap_or_else(|| vec![0.5 / (dim as f64).sqrt(); dim]);
        Ok(Ppca1Param::new(u, *init_lambda))
    }

    /// The model and its true parameter (Poisson mixture only).
    pub fn mixture_truth(&self) -> Result<(PoissonMixture, MixtureParam)> {
        let ModelSpec::PoissonMixture { weights, means, .. } = self else {
            return Err(Error::Config("not a Poisson mixture".into()));
        };
        if weights.len() != means.len() {
            return Err(Error::Config(format!(
                "{} weights but {} means",
                weights.len(),
                means.len()
            )));
        }
        let model = PoissonMixture::poisson(weights.len()).map_err(config)?;
        let truth = MixtureParam::poisson(weights, means);
        model.validate_param(&truth).map_err(config)?;
        Ok((model, truth))
    }

    /// An initial point, drawing random means from `rng` when requested
    /// (Poisson mixture only).
    pub fn mixture_init<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MixtureParam> {
        let ModelSpec::PoissonMixture {
            weights,
            init_weights,
            init_means,
            ..
        } = self
        else {
            return Err(Error::Config("not a Poisson mixture".into()));
        };
        let m = weights.len();
        let w = init_weights.clone().unwrap_or_else(|| vec![1.0 / m as f64; m]);
        let means = match init_means {
            MeansInit::Fixed(b) => b.clone(),
            MeansInit::Uniform { low, high } => (0..m).map(|_| rng.random_range(*low..=*high)).collect(),
        };
        if w.len() != m || means.len() != m {
            return Err(Error::Config(format!(
                "initial point must have {m} weights and {m} means"
            )));
        }
        Ok(MixtureParam::poisson(&w, &means))
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Whether each replication draws its own data or all replications share
/// one data set per sample size (and differ only in their initial points).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataMode {
    #[default]
    Fresh,
    Fixed,
}

/// A replicated simulation experiment.
///
/// `metrics` names the tracked scalars: `loglik` (normalised log-likelihood
/// over the replication's data), `norm_u_sq` (PPCA), or any parameter
/// label (`u1`, `lambda`, `w1`, `mean2`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub master_seed: u64,
    pub replications: usize,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub data: DataMode,
    pub model: ModelSpec,
    pub estimators: Vec<EstimatorSpec>,
    pub metrics: Vec<String>,
    /// Keep each replication's value in the report (for paired comparisons).
    #[serde(default)]
    pub keep_values: bool,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("`replications` must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("`sizes` must list positive sample sizes".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics".into()));
        }
        self.model.validate()?;
        let mut labels = Vec::new();
        for e in &self.estimators {
            e.validate().map_err(|err| err.context(e.label()))?;
            let label = e.label();
            if labels.contains(&label) {
                return Err(Error::Config(format!("duplicate estimator name {label:?}")));
            }
            labels.push(label);
        }
        Ok(())
    }
}
