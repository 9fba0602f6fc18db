//! Online expectation-maximisation and its competitors for latent-variable
//! models whose complete-data likelihood is an exponential family.
//!
//! * [`model`] defines the [`LatentModel`] contract (closed-form E- and M-steps).
//! * [`models`] provides single-factor probabilistic PCA and finite mixtures
//!   (Poisson components).
//! * [`estimators`] implements batch EM, online EM (with mini-batches,
//!   parameter freezing, MAP priors and Polyak-Ruppert averaging),
//!   incremental EM, Titterington's recursion and multi-tour drivers.
//! * [`harness`] generates seeded data, runs replicated experiments and
//!   summarises them as quantile reports.
//! * [`cli`] backs the `online-em` binary.
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability; start with `cargo run --example online_em_ppca`.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod model;
pub mod models;

pub use error::{Error, Result};
pub use model::{LatentModel, SufficientStat};
