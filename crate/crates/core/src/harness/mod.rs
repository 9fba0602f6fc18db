//! Seeded simulation experiments: data generation under both models,
//! replicated estimator runs and their quantile summaries.
//!
//! An [`ExperimentPlan`] (JSON) names a model with its true parameter, the
//! sample sizes, the estimators and the tracked scalars.
//! [`run_replications`] runs every replication, possibly in parallel, and
//! aggregates the tracked scalars at each checkpoint into an
//! [`ExperimentReport`]. Replication `r` draws from random streams keyed by
//! `(master_seed, r)`, so reports are byte-identical across runs and worker
//! counts.

mod plan;
mod report;
mod rng;
mod run;
mod sampling;
mod stats;

pub use crate::model::normalized_loglik;
pub use plan::{
    stat_from_coords, Algorithm, CheckpointUnit, DataMode, EstimatorSpec, ExperimentPlan, MeansInit, ModelSpec,
    RunOptions,
};
pub use report::{ExperimentReport, ReplicationFailure, ReportRow};
pub use rng::{RngSpec, StreamPurpose};
pub use run::{run_replications, run_replications_with};
pub use sampling::{sample_poisson_mixture, sample_ppca1};
pub use stats::{
    fisher_band_ppca_norm_u, fisher_information_norm_u, quantile_sorted, sign_test_greater, FisherBand, SignTest,
    Summary, NORMAL_Q75,
};
