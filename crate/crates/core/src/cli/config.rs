use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::RecordPolicy;
use crate::harness::EstimatorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Single-factor probabilistic PCA.
    Ppca1,
    /// Finite mixture of Poisson distributions.
    #[serde(alias = "poisson-mix")]
    #[value(alias = "poisson-mix")]
    PoissonMixture,
}

/// Model section. `u`/`lambda` and `weights`/`means` are the generating
/// parameters (`simulate`, and `fit` with generated data); the `init_*` keys
/// are the estimators' starting point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<ModelKind>,
    /// PPCA observation dimension; inferred from the data when omitted.
    pub dim: Option<usize>,
    pub u: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub means: Option<Vec<f64>>,
    /// Default `0.5 (1, ..., 1) / sqrt(dim)`.
    pub init_u: Option<Vec<f64>>,
    /// Default 1.
    pub init_lambda: Option<f64>,
    /// Default uniform.
    pub init_weights: Option<Vec<f64>>,
    pub init_means: Option<Vec<f64>>,
}

/// Data section: either a CSV `path`, or `n` draws simulated with `seed`
/// from the model section's generating parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMode {
    #[default]
    EveryStep,
    PowersOfTwo,
    Endpoints,
}

impl From<RecordMode> for RecordPolicy {
    fn from(m: RecordMode) -> Self {
        match m {
            RecordMode::EveryStep => RecordPolicy::EveryStep,
            RecordMode::PowersOfTwo => RecordPolicy::PowersOfTwo,
            RecordMode::Endpoints => RecordPolicy::Endpoints,
        }
    }
}

/// Output section. `path` receives the main artefact (data set, trajectory
/// or report); `summary` the JSON summary of a fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub format: Option<TrajectoryFormat>,
    pub record: Option<RecordMode>,
}

/// A JSON run configuration. Every key is optional in the file; command-line
/// flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    /// The estimator of `fit`.
    pub estimator: Option<EstimatorSpec>,
    /// The estimators of `compare`.
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(path.display()))
    }

    /// Exactly one data source must be given.
    pub fn check_data_source(&self) -> Result<()> {
        match (&self.data.path, self.data.n) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either a data path or a generated size `n`, not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "no data source: give a data path or `n` and `seed`".into(),
            )),
            (Some(_), None) if self.data.seed.is_some() => {
                Err(Error::Config("`seed` only applies to generated data".into()))
            }
            _ => Ok(()),
        }
    }
}
